#include "lrsens/stats.hpp"

#include <algorithm>
#include <cmath>

#include "lrsens/error.hpp"
#include "lrsens/kernels.hpp"

namespace lrsens {

double normalized_variance(std::span<const double> values) {
  if (values.size() < 2) throw ArgumentError("need at least 2 values");
  const double n = static_cast<double>(values.size());
  const double mean = kernels::sum(values) / n;
  return kernels::centered_cross(values, mean, values, mean) / (n - 1.0);
}

MeanEstimate mean_and_se(std::span<const double> values) {
  MeanEstimate out;
  const double var = normalized_variance(values);
  const double n = static_cast<double>(values.size());
  out.mean = kernels::sum(values) / n;
  out.standard_deviation = std::sqrt(var);
  out.standard_error = std::sqrt(var / n);
  return out;
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag) throw ArgumentError("series must be longer than max lag");
  if (std::all_of(series.begin(), series.end(),
                  [&](double v) { return v == series.front(); }))
    throw EstimationError("autocorrelation of a constant series is undefined");
  const double mean = kernels::sum(series) / static_cast<double>(n);
  const double c0 = kernels::centered_cross(series, mean, series, mean);
  std::vector<double> rho(max_lag + 1);
  rho[0] = 1.0;
  for (std::size_t l = 1; l <= max_lag; ++l)
    rho[l] = kernels::centered_cross(series.first(n - l), mean,
                                     series.subspan(l), mean) /
             c0;
  return rho;
}

std::vector<double> sample_on_grid(const ReactionNetwork& network,
                                   const JumpTrajectory& traj,
                                   std::size_t species, double step) {
  if (!(step > 0.0)) throw ArgumentError("grid step must be positive");
  if (species >= network.num_species())
    throw ArgumentError("species index out of range");
  const auto points =
      static_cast<std::size_t>(std::floor(traj.final_time / step)) + 1;
  std::vector<double> out(points);
  State x = traj.initial_state;
  std::size_t e = 0;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) * step;
    while (e < traj.events.size() && traj.events[e].time <= t) {
      for (const auto& [s, d] : network.net_change(traj.events[e].reaction))
        x[s] += d;
      ++e;
    }
    out[k] = static_cast<double>(x[species]);
  }
  return out;
}

DecorrelationEstimate decorrelation_time(std::span<const double> rho,
                                         double grid_step,
                                         std::size_t series_length,
                                         const DecorrelationOptions& options) {
  if (!(grid_step > 0.0)) throw ArgumentError("grid step must be positive");
  if (series_length == 0 || options.persistence == 0 ||
      !(options.safety_factor > 0.0))
    throw ArgumentError("invalid decorrelation options");
  const double band =
      options.band_width / std::sqrt(static_cast<double>(series_length));
  const std::size_t run = options.persistence;
  auto inside = [&](std::size_t l) { return std::abs(rho[l]) <= band; };

  std::size_t entry = 0;
  for (std::size_t l = 1; l + run <= rho.size(); ++l) {
    bool ok = true;
    for (std::size_t k = l; k < l + run; ++k) ok = ok && inside(k);
    if (ok) {
      entry = l;
      break;
    }
  }
  if (entry == 0)
    throw EstimationError(
        "autocorrelation never settles inside the noise band; supply the "
        "decorrelation time manually");

  DecorrelationEstimate out;
  out.lag = entry;
  out.time = options.safety_factor * static_cast<double>(entry) * grid_step;
  out.reason = "settled";

  std::size_t below = 0, outside = 0;
  for (std::size_t l = 1; l < rho.size(); ++l) {
    below = rho[l] < -band ? below + 1 : 0;
    outside = (l >= entry + run && !inside(l)) ? outside + 1 : 0;
    if (below >= run) {
      out.low_confidence = true;
      out.reason = "sustained negative lobe";
      break;
    }
    if (outside >= run) {
      out.low_confidence = true;
      out.reason = "correlation re-emerges after settling";
      break;
    }
  }
  return out;
}

IidVariancePrediction iid_variance_oracle(const IidMoments& m, double T) {
  IidVariancePrediction p;
  p.single = T * m.mean_f2 * m.mean_w2;
  p.ergodic = T * m.mean_f * m.mean_f * m.mean_w2;
  p.centered_raw = m.mean_f2 * m.mean_w2 + 2.0 * m.mean_fw * m.mean_fw;
  const double var_f = m.mean_f2 - m.mean_f * m.mean_f;
  const double cov_fw = m.mean_fw - m.mean_f * m.mean_w;
  p.centered_central = var_f * m.mean_w2 + 2.0 * cov_fw * cov_fw;
  p.centered_exact = var_f * m.mean_w2 + cov_fw * cov_fw;
  return p;
}

char select_reading(const IidVariancePrediction& p, double observed) {
  return std::abs(observed - p.centered_raw) <=
                 std::abs(observed - p.centered_central)
             ? 'a'
             : 'b';
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n)
    throw ArgumentError("linear fit needs at least two (x, y) points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ArgumentError("linear fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace lrsens
