#include "lrsens/score.hpp"

#include <algorithm>
#include <cmath>

namespace lrsens {

void total_rate_gradient(const ReactionNetwork& net,
                         std::span<const double> theta,
                         std::span<const std::int64_t> x,
                         std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < net.num_reactions(); ++j)
    net.add_propensity_gradient(j, theta, x, 1.0, out);
}

void add_log_propensity_gradient(const ReactionNetwork& net,
                                 std::span<const double> theta,
                                 std::span<const std::int64_t> x,
                                 std::size_t j, std::span<double> out) {
  const double a = net.propensity(j, theta, x);
  if (!(a > 0.0))
    throw InconsistencyError("reaction '" + net.reactions()[j].name +
                             "' fired with zero propensity; trajectory does "
                             "not match the parameters");
  net.add_propensity_gradient(j, theta, x, 1.0 / a, out);
}

namespace {

class CtmcScoreBuilder {
 public:
  CtmcScoreBuilder(const ReactionNetwork& net, std::span<const double> theta,
                   bool keep)
      : net_(net),
        theta_(theta),
        keep_(keep),
        total_(net.num_parameters(), 0.0),
        grad_(net.num_parameters(), 0.0),
        scratch_(net.num_parameters(), 0.0) {}

  void hold(const State& x, double t0, double t1) {
    if (t1 <= t0) return;
    total_rate_gradient(net_, theta_, x, grad_);
    for (auto& g : grad_) g = -g;
    const double dt = t1 - t0;
    for (std::size_t p = 0; p < total_.size(); ++p) total_[p] += dt * grad_[p];
    if (keep_) contributions_.push_back({t0, t1, true, grad_});
  }

  void jump(const State& x, std::size_t j, double t) {
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    add_log_propensity_gradient(net_, theta_, x, j, scratch_);
    for (std::size_t p = 0; p < total_.size(); ++p) total_[p] += scratch_[p];
    if (keep_) contributions_.push_back({t, t, false, scratch_});
  }

  std::vector<double>& total() { return total_; }
  std::vector<ScoreContribution>& contributions() { return contributions_; }

 private:
  const ReactionNetwork& net_;
  std::span<const double> theta_;
  bool keep_;
  std::vector<double> total_;
  std::vector<double> grad_;
  std::vector<double> scratch_;
  std::vector<ScoreContribution> contributions_;
};

}  // namespace

ScoreRecord ctmc_score(const JumpTrajectory& traj,
                       const ReactionNetwork& network,
                       std::span<const double> theta, ScoreSign sign,
                       bool keep_window) {
  if (theta.size() != network.num_parameters())
    throw ArgumentError("parameter vector has wrong length");
  CtmcScoreBuilder builder(network, theta, keep_window);
  replay(network, traj, builder);
  ScoreRecord rec;
  rec.sign = sign_factor(sign);
  rec.final_time = traj.final_time;
  rec.windowed = keep_window;
  rec.total = std::move(builder.total());
  for (auto& w : rec.total) w *= rec.sign;
  rec.contributions = std::move(builder.contributions());
  return rec;
}

GammaSolver::GammaSolver(const DiffusionModel& model)
    : n_(model.dimension()),
      d_(model.noise_dimension()),
      p_(model.num_parameters()),
      sigma_(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_)),
      rhs_(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(p_)),
      gamma_(static_cast<Eigen::Index>(d_), static_cast<Eigen::Index>(p_)),
      lu_(static_cast<Eigen::Index>(n_)),
      cod_(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_)) {}

namespace {

[[noreturn]] void throw_singular(std::span<const double> state) {
  std::string msg = "diffusion matrix is singular or ill-conditioned at state (";
  for (std::size_t i = 0; i < state.size(); ++i)
    msg += (i ? ", " : "") + std::to_string(state[i]);
  msg += ")";
  throw NumericalError(msg, {state.begin(), state.end()});
}

}  // namespace

void GammaSolver::solve(std::span<const double> sigma,
                        std::span<const double> gradient,
                        std::span<const double> state,
                        std::span<double> gamma) {
  if (n_ == 1 && d_ == 1) {
    const double s = sigma[0];
    if (!(std::abs(s) > 0.0) || !std::isfinite(s)) throw_singular(state);
    for (std::size_t p = 0; p < p_; ++p) gamma[p] = gradient[p] / s;
    return;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = 0; k < d_; ++k)
      sigma_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          sigma[i * d_ + k];
    for (std::size_t p = 0; p < p_; ++p)
      rhs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
          gradient[i * p_ + p];
  }
  if (n_ == d_) {
    lu_.compute(sigma_);
    const double rc = lu_.rcond();
    if (!(rc > kMinReciprocalCondition)) throw_singular(state);
    gamma_ = lu_.solve(rhs_);
  } else {
    cod_.compute(sigma_);
    gamma_ = cod_.solve(rhs_);
    const double res = (sigma_ * gamma_ - rhs_).norm();
    if (res > kResidualTolerance * rhs_.norm()) throw_singular(state);
  }
  for (std::size_t k = 0; k < d_; ++k)
    for (std::size_t p = 0; p < p_; ++p)
      gamma[k * p_ + p] =
          gamma_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
}

ScoreRecord euler_score(const GridTrajectory& traj,
                        const DiffusionModel& model,
                        std::span<const double> theta, bool keep_window) {
  if (theta.size() != model.num_parameters())
    throw ArgumentError("parameter vector has wrong length");
  if (traj.dimension != model.dimension() ||
      traj.noise_dimension != model.noise_dimension())
    throw ArgumentError("trajectory dimensions do not match the model");
  const std::size_t n_dim = model.dimension();
  const std::size_t d_dim = model.noise_dimension();
  const std::size_t p_dim = model.num_parameters();
  const double dt = traj.dt();
  const double sqdt = std::sqrt(dt);
  GammaSolver solver(model);
  std::vector<double> sigma(n_dim * d_dim), grad(n_dim * p_dim),
      gamma(d_dim * p_dim), inc(p_dim);
  ScoreRecord rec;
  rec.final_time = traj.final_time;
  rec.grid_step = dt;
  rec.windowed = keep_window;
  rec.total.assign(p_dim, 0.0);
  for (std::size_t n = 1; n <= traj.steps; ++n) {
    const auto x = traj.state(n - 1);
    const auto dB = traj.increment(n);
    model.diffusion(x, sigma);
    model.drift_gradient(theta, x, grad);
    solver.solve(sigma, grad, x, gamma);
    for (std::size_t p = 0; p < p_dim; ++p) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d_dim; ++k) acc += gamma[k * p_dim + p] * dB[k];
      inc[p] = sqdt * acc;
      rec.total[p] += inc[p];
    }
    if (keep_window) {
      const double tn = static_cast<double>(n) * dt;
      rec.contributions.push_back({tn, tn, false, inc});
    }
  }
  return rec;
}

std::vector<double> truncated_score(const ScoreRecord& record, double window) {
  if (!(window > 0.0) || window > record.final_time)
    throw ArgumentError("window must lie in (0, T]");
  if (!record.windowed)
    throw CapabilityError("score record was built without windowing");
  const double lo = record.final_time - window;
  const double hi = record.final_time;
  std::vector<double> out(record.total.size(), 0.0);
  // On a grid, compare step indices so that t_n = n dt rounding cannot move
  // a step across the window edge.
  double grid_lo = 0.0;
  if (record.grid_step > 0.0) {
    const double q = lo / record.grid_step;
    const double r = std::round(q);
    grid_lo = std::abs(q - r) < 1e-6 ? r : std::floor(q);
  }
  for (const auto& c : record.contributions) {
    if (record.grid_step > 0.0) {
      if (std::round(c.start / record.grid_step) > grid_lo)
        for (std::size_t p = 0; p < out.size(); ++p) out[p] += c.value[p];
      continue;
    }
    if (c.is_rate) {
      double len;
      if (c.start >= lo && c.end <= hi)
        len = c.end - c.start;
      else
        len = std::min(c.end, hi) - std::max(c.start, lo);
      if (len <= 0.0) continue;
      for (std::size_t p = 0; p < out.size(); ++p) out[p] += len * c.value[p];
    } else if (c.start > lo && c.start <= hi) {
      for (std::size_t p = 0; p < out.size(); ++p) out[p] += c.value[p];
    }
  }
  for (auto& w : out) w *= record.sign;
  return out;
}

IidRecord iid_score(std::span<const double> samples, const SampleFunction& w,
                    const SampleFunction& f) {
  if (samples.empty()) throw ArgumentError("empty sample sequence");
  IidRecord rec;
  for (double x : samples) {
    const auto wv = w(x);
    const auto fv = f(x);
    if (rec.score.empty()) rec.score.assign(wv.size(), 0.0);
    if (rec.ergodic_value.empty()) rec.ergodic_value.assign(fv.size(), 0.0);
    for (std::size_t p = 0; p < wv.size(); ++p) rec.score[p] += wv[p];
    for (std::size_t i = 0; i < fv.size(); ++i) rec.ergodic_value[i] += fv[i];
  }
  rec.final_value = f(samples.back());
  for (auto& v : rec.ergodic_value) v /= static_cast<double>(samples.size());
  return rec;
}

}  // namespace lrsens
