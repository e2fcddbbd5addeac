#include "lrsens/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lrsens/error.hpp"
#include "lrsens/kernels.hpp"

namespace lrsens {

namespace {

constexpr std::array<std::pair<EstimatorId, std::string_view>, 9> kNames{{
    {EstimatorId::kI1, "I1"},
    {EstimatorId::kI2, "I2"},
    {EstimatorId::kI2bar, "I2bar"},
    {EstimatorId::kI3, "I3"},
    {EstimatorId::kI3bar, "I3bar"},
    {EstimatorId::kI4, "I4"},
    {EstimatorId::kI4bar, "I4bar"},
    {EstimatorId::kI5, "I5"},
    {EstimatorId::kCov, "COV"},
}};

std::span<const double> row(const RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

SensitivityReport blank(EstimatorId id, const Ensemble& e) {
  SensitivityReport r;
  r.estimator = id;
  r.final_time = e.final_time;
  r.replicas = e.replicas();
  r.observable_names = e.observable_names;
  r.parameter_names = e.parameter_names;
  r.parameter_indices = iota(e.num_parameters());
  const auto m = static_cast<Eigen::Index>(e.num_observables());
  const auto P = static_cast<Eigen::Index>(e.num_parameters());
  r.estimate = RowMatrix::Zero(m, P);
  r.standard_error = RowMatrix::Zero(m, P);
  r.normalized_variance = RowMatrix::Zero(m, P);
  return r;
}

SensitivityReport lr_products(EstimatorId id, const Ensemble& e,
                              const RowMatrix& f, const RowMatrix& w,
                              Centering centering) {
  e.validate();
  SensitivityReport r = blank(id, e);
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index p = 0; p < w.rows(); ++p) {
      const auto pm = product_moments(row(f, i), row(w, p), centering);
      r.estimate(i, p) = pm.mean;
      r.standard_error(i, p) = pm.standard_error;
      r.normalized_variance(i, p) = pm.normalized_variance;
    }
  return r;
}

SensitivityReport cfd(EstimatorId id, const CoupledEnsemble& pairs,
                      const RowMatrix& plus, const RowMatrix& minus) {
  pairs.validate();
  SensitivityReport r;
  r.estimator = id;
  r.final_time = pairs.final_time;
  r.replicas = pairs.replicas();
  r.observable_names = pairs.observable_names;
  r.parameter_names = {pairs.parameter_name};
  r.parameter_indices = {pairs.parameter};
  const auto m = plus.rows();
  r.estimate = RowMatrix::Zero(m, 1);
  r.standard_error = RowMatrix::Zero(m, 1);
  r.normalized_variance = RowMatrix::Zero(m, 1);
  const std::size_t M = pairs.replicas();
  std::vector<double> z(M);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto a = row(plus, i);
    const auto b = row(minus, i);
    for (std::size_t k = 0; k < M; ++k)
      z[k] = (a[k] - b[k]) / (2.0 * pairs.epsilon);
    const double mean = kernels::sum(z) / static_cast<double>(M);
    const double var =
        kernels::centered_cross(z, mean, z, mean) / static_cast<double>(M - 1);
    r.estimate(i, 0) = mean;
    r.normalized_variance(i, 0) = var;
    r.standard_error(i, 0) = std::sqrt(var / static_cast<double>(M));
  }
  return r;
}

}  // namespace

std::string_view estimator_name(EstimatorId id) {
  for (const auto& [k, name] : kNames)
    if (k == id) return name;
  return "?";
}

std::optional<EstimatorId> parse_estimator(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

bool is_finite_difference(EstimatorId id) {
  return id == EstimatorId::kI1 || id == EstimatorId::kI5;
}

std::vector<EstimatorId> all_estimators() {
  std::vector<EstimatorId> out;
  for (const auto& [k, name] : kNames) out.push_back(k);
  return out;
}

ProductMoments product_moments(std::span<const double> f,
                               std::span<const double> w,
                               Centering centering) {
  const std::size_t M = f.size();
  if (w.size() != M) throw ArgumentError("observable/score length mismatch");
  if (M < 2) throw ArgumentError("need at least 2 replicas");
  const double dm = static_cast<double>(M);
  std::vector<double> z(M);
  if (centering == Centering::kNone) {
    for (std::size_t r = 0; r < M; ++r) z[r] = f[r] * w[r];
  } else {
    const double c = kernels::sum(f) / dm;
    // Leave-one-out: f_r - (S - f_r)/(M - 1) = M/(M - 1) (f_r - S/M).
    const double scale =
        centering == Centering::kLeaveOneOut ? dm / (dm - 1.0) : 1.0;
    for (std::size_t r = 0; r < M; ++r) z[r] = scale * (f[r] - c) * w[r];
  }
  ProductMoments out;
  out.mean = kernels::sum(z) / dm;
  out.normalized_variance =
      kernels::centered_cross(z, out.mean, z, out.mean) / (dm - 1.0);
  out.standard_error = std::sqrt(out.normalized_variance / dm);
  return out;
}

SensitivityReport cfd_single(const CoupledEnsemble& pairs) {
  return cfd(EstimatorId::kI1, pairs, pairs.final_plus, pairs.final_minus);
}

SensitivityReport cfd_ergodic(const CoupledEnsemble& pairs) {
  return cfd(EstimatorId::kI5, pairs, pairs.ergodic_plus, pairs.ergodic_minus);
}

SensitivityReport lr_single(const Ensemble& ensemble, Centering centering) {
  return lr_products(centering == Centering::kNone ? EstimatorId::kI2
                                                   : EstimatorId::kI2bar,
                     ensemble, ensemble.final_values, ensemble.scores,
                     centering);
}

SensitivityReport lr_ergodic(const Ensemble& ensemble, Centering centering) {
  return lr_products(centering == Centering::kNone ? EstimatorId::kI3
                                                   : EstimatorId::kI3bar,
                     ensemble, ensemble.ergodic_values, ensemble.scores,
                     centering);
}

SensitivityReport lr_truncated(const Ensemble& ensemble, double window,
                               Centering centering) {
  if (!(window > 0.0) || window > ensemble.final_time)
    throw ArgumentError("truncation window must lie in (0, T]");
  const EstimatorId id =
      centering == Centering::kNone ? EstimatorId::kI4 : EstimatorId::kI4bar;
  if (window == ensemble.final_time)
    return lr_products(id, ensemble, ensemble.final_values, ensemble.scores,
                       centering);
  if (!ensemble.window_scores || !ensemble.window || *ensemble.window != window)
    throw CapabilityError("ensemble holds no scores for the requested window");
  return lr_products(id, ensemble, ensemble.final_values,
                     *ensemble.window_scores, centering);
}

SensitivityReport covariance_lr(const Ensemble& ensemble) {
  ensemble.validate();
  const auto m = static_cast<Eigen::Index>(ensemble.num_observables());
  const auto P = static_cast<Eigen::Index>(ensemble.num_parameters());
  if (m == 0 || P == 0)
    throw ArgumentError("covariance LR needs observables and parameters");
  SensitivityReport r = lr_products(EstimatorId::kCov, ensemble,
                                    ensemble.ergodic_values, ensemble.scores,
                                    Centering::kPlugIn);
  const double dm = static_cast<double>(ensemble.replicas());
  const double T = ensemble.final_time;
  const RowMatrix& f = ensemble.ergodic_values;
  const RowMatrix& w = ensemble.scores;
  std::vector<double> fmean(static_cast<std::size_t>(m)),
      wmean(static_cast<std::size_t>(P));
  for (Eigen::Index i = 0; i < m; ++i) fmean[i] = kernels::sum(row(f, i)) / dm;
  for (Eigen::Index p = 0; p < P; ++p) wmean[p] = kernels::sum(row(w, p)) / dm;

  RowMatrix var_f(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j)
      var_f(i, j) = var_f(j, i) =
          kernels::centered_cross(row(f, i), fmean[i], row(f, j), fmean[j]) /
          dm;
  RowMatrix fim(P, P);
  for (Eigen::Index p = 0; p < P; ++p)
    for (Eigen::Index q = p; q < P; ++q)
      fim(p, q) = fim(q, p) =
          kernels::centered_cross(row(w, p), wmean[p], row(w, q), wmean[q]) /
          dm;

  RowMatrix cov(m + P, m + P);
  cov.topLeftCorner(m, m) = T * var_f;
  cov.topRightCorner(m, P) = r.estimate;
  cov.bottomLeftCorner(P, m) = r.estimate.transpose();
  cov.bottomRightCorner(P, P) = fim / T;

  r.fim = std::move(fim);
  r.observable_variance = std::move(var_f);
  r.covariance = std::move(cov);
  screening_bound(r);
  return r;
}

void screening_bound(SensitivityReport& report) {
  if (!report.fim || !report.observable_variance)
    throw CapabilityError("screening bound needs the covariance LR blocks");
  const RowMatrix& fim = *report.fim;
  const RowMatrix& var_f = *report.observable_variance;
  const auto m = var_f.rows();
  const auto P = fim.rows();
  std::vector<double> info(static_cast<std::size_t>(P));
  double trace = 0.0;
  for (Eigen::Index p = 0; p < P; ++p) {
    double v = fim(p, p);
    if (v < 0.0) {
      report.warnings.push_back("negative information estimate for parameter '" +
                                report.parameter_names.at(p) + "' clamped to 0");
      v = 0.0;
    }
    info[p] = v;
    trace += v;
  }
  std::vector<double> bound(static_cast<std::size_t>(m));
  RowMatrix per(m, P);
  for (Eigen::Index i = 0; i < m; ++i) {
    double v = var_f(i, i);
    if (v < 0.0) {
      report.warnings.push_back("negative variance estimate for observable '" +
                                report.observable_names.at(i) +
                                "' clamped to 0");
      v = 0.0;
    }
    bound[i] = std::sqrt(v * trace);
    for (Eigen::Index p = 0; p < P; ++p)
      per(i, p) = std::sqrt(v * info[p]);
  }
  report.screening_trace = std::move(bound);
  report.screening_parameter = std::move(per);
}

SensitivityReport log_rescale(const SensitivityReport& report,
                              std::span<const double> theta) {
  SensitivityReport out = report;
  const auto P = static_cast<Eigen::Index>(report.parameter_indices.size());
  Eigen::VectorXd s(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const std::size_t k = report.parameter_indices[p];
    if (k >= theta.size())
      throw ArgumentError("parameter vector too short for report");
    if (!(theta[k] > 0.0))
      throw ArgumentError("log rescaling needs positive parameter '" +
                          report.parameter_names.at(p) + "'");
    s[p] = theta[k];
  }
  const auto m = report.estimate.rows();
  for (Eigen::Index p = 0; p < P; ++p) {
    out.estimate.col(p) *= s[p];
    out.standard_error.col(p) *= s[p];
    out.normalized_variance.col(p) *= s[p] * s[p];
  }
  if (out.fim) {
    *out.fim = s.asDiagonal() * (*out.fim) * s.asDiagonal();
    out.covariance->topRightCorner(m, P) = out.estimate;
    out.covariance->bottomLeftCorner(P, m) = out.estimate.transpose();
    out.covariance->bottomRightCorner(P, P) = *out.fim / out.final_time;
    screening_bound(out);
    out.warnings = report.warnings;
  }
  return out;
}

SensitivityReport merge_columns(const std::vector<SensitivityReport>& parts) {
  if (parts.empty()) throw ArgumentError("nothing to merge");
  const auto& first = parts.front();
  SensitivityReport out;
  out.estimator = first.estimator;
  out.final_time = first.final_time;
  out.replicas = first.replicas;
  out.observable_names = first.observable_names;
  Eigen::Index P = 0;
  for (const auto& r : parts) {
    if (r.estimator != first.estimator || r.final_time != first.final_time ||
        r.replicas != first.replicas ||
        r.observable_names != first.observable_names)
      throw ArgumentError("reports to merge disagree on estimator, T, M or "
                          "observables");
    P += r.estimate.cols();
  }
  const auto m = first.estimate.rows();
  out.estimate.resize(m, P);
  out.standard_error.resize(m, P);
  out.normalized_variance.resize(m, P);
  Eigen::Index at = 0;
  for (const auto& r : parts) {
    const auto c = r.estimate.cols();
    out.estimate.middleCols(at, c) = r.estimate;
    out.standard_error.middleCols(at, c) = r.standard_error;
    out.normalized_variance.middleCols(at, c) = r.normalized_variance;
    out.parameter_names.insert(out.parameter_names.end(),
                               r.parameter_names.begin(),
                               r.parameter_names.end());
    out.parameter_indices.insert(out.parameter_indices.end(),
                                 r.parameter_indices.begin(),
                                 r.parameter_indices.end());
    out.warnings.insert(out.warnings.end(), r.warnings.begin(),
                        r.warnings.end());
    at += c;
  }
  return out;
}

}  // namespace lrsens
