#include "lrsens/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace lrsens {

void Ensemble::validate() const {
  const auto m = static_cast<Eigen::Index>(observable_names.size());
  const auto p = static_cast<Eigen::Index>(parameter_names.size());
  const auto M = scores.cols();
  if (M < 2) throw ArgumentError("ensemble needs at least 2 replicas");
  if (scores.rows() != p || final_values.rows() != m ||
      ergodic_values.rows() != m || final_values.cols() != M ||
      ergodic_values.cols() != M)
    throw ArgumentError("ensemble matrices have inconsistent shapes");
  if (window_scores &&
      (window_scores->rows() != p || window_scores->cols() != M))
    throw ArgumentError("window scores have inconsistent shape");
}

void CoupledEnsemble::validate() const {
  const auto m = static_cast<Eigen::Index>(observable_names.size());
  const auto M = final_plus.cols();
  if (final_minus.cols() != M || ergodic_plus.cols() != M ||
      ergodic_minus.cols() != M)
    throw ArgumentError("coupled ensemble has mismatched pair counts");
  if (final_plus.rows() != m || final_minus.rows() != m ||
      ergodic_plus.rows() != m || ergodic_minus.rows() != m)
    throw ArgumentError("coupled ensemble matrices have inconsistent shapes");
  if (M < 2) throw ArgumentError("ensemble needs at least 2 replicas");
  if (!(epsilon > 0.0))
    throw ArgumentError("finite-difference step must be positive");
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t first_index = n;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

void validate_options(const EnsembleOptions& o) {
  if (o.replicas < 2) throw ArgumentError("replicas must be at least 2");
  if (o.checkpoints.empty()) throw ArgumentError("no checkpoints given");
  double prev = 0.0;
  for (double c : o.checkpoints) {
    if (!(c > prev) || !std::isfinite(c))
      throw ArgumentError("checkpoints must be positive and increasing");
    prev = c;
  }
  if (o.window) {
    if (!(*o.window > 0.0))
      throw ArgumentError("truncation window must be positive");
    if (*o.window > o.checkpoints.front())
      throw ArgumentError("truncation window exceeds the first checkpoint");
  }
}

// Score snapshots needed to form W(c) and W(c - window) for every
// checkpoint c.
struct SnapshotPlan {
  std::vector<double> times;
  std::vector<std::size_t> at_checkpoint;
  std::vector<std::optional<std::size_t>> at_window_start;
};

SnapshotPlan plan_snapshots(const EnsembleOptions& o) {
  SnapshotPlan plan;
  for (double c : o.checkpoints) {
    plan.times.push_back(c);
    if (o.window && c - *o.window > 0.0) plan.times.push_back(c - *o.window);
  }
  std::sort(plan.times.begin(), plan.times.end());
  plan.times.erase(std::unique(plan.times.begin(), plan.times.end()),
                   plan.times.end());
  auto index_of = [&](double t) {
    return static_cast<std::size_t>(
        std::lower_bound(plan.times.begin(), plan.times.end(), t) -
        plan.times.begin());
  };
  for (double c : o.checkpoints) {
    plan.at_checkpoint.push_back(index_of(c));
    if (o.window && c - *o.window > 0.0)
      plan.at_window_start.push_back(index_of(c - *o.window));
    else
      plan.at_window_start.push_back(std::nullopt);
  }
  return plan;
}

std::vector<Ensemble> allocate_lr(const EnsembleOptions& o,
                                  std::span<const double> theta,
                                  const ObservableSet& obs,
                                  const std::vector<std::string>& params) {
  std::vector<Ensemble> out(o.checkpoints.size());
  const auto M = static_cast<Eigen::Index>(o.replicas);
  const auto m = static_cast<Eigen::Index>(obs.size());
  const auto P = static_cast<Eigen::Index>(params.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& e = out[i];
    e.model_id = o.model_id;
    e.final_time = o.checkpoints[i];
    e.theta.assign(theta.begin(), theta.end());
    e.seed = o.seed;
    e.observable_names = obs.names;
    e.parameter_names = params;
    e.final_values = RowMatrix::Zero(m, M);
    e.ergodic_values = RowMatrix::Zero(m, M);
    e.scores = RowMatrix::Zero(P, M);
    if (o.window) {
      e.window = o.window;
      e.window_scores = RowMatrix::Zero(P, M);
    }
  }
  return out;
}

std::vector<CoupledEnsemble> allocate_cfd(const EnsembleOptions& o,
                                          std::span<const double> theta,
                                          const ObservableSet& obs,
                                          std::size_t k,
                                          const std::string& name,
                                          double eps) {
  std::vector<CoupledEnsemble> out(o.checkpoints.size());
  const auto M = static_cast<Eigen::Index>(o.replicas);
  const auto m = static_cast<Eigen::Index>(obs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& e = out[i];
    e.model_id = o.model_id;
    e.final_time = o.checkpoints[i];
    e.theta.assign(theta.begin(), theta.end());
    e.seed = o.seed;
    e.parameter = k;
    e.parameter_name = name;
    e.epsilon = eps;
    e.observable_names = obs.names;
    e.final_plus = RowMatrix::Zero(m, M);
    e.final_minus = RowMatrix::Zero(m, M);
    e.ergodic_plus = RowMatrix::Zero(m, M);
    e.ergodic_minus = RowMatrix::Zero(m, M);
  }
  return out;
}

// Per-replica results at every checkpoint, flattened checkpoint-major.
struct ReplicaOutput {
  std::vector<double> final_values;  // C x m
  std::vector<double> ergodic;       // C x m
  std::vector<double> snapshots;     // S x P
};

/// Observer for jump paths: observables at checkpoints and, if a network
/// is given, the running score at snapshot times.
class JumpTracker {
 public:
  JumpTracker(const ObservableSet& obs, const std::vector<double>& checkpoints,
              const std::vector<double>* snapshots,
              const ReactionNetwork* net, std::span<const double> theta)
      : obs_(obs),
        cps_(checkpoints),
        snaps_(snapshots),
        net_(net),
        theta_(theta),
        fx_(obs.size()),
        integral_(obs.size(), 0.0) {
    out_.final_values.assign(cps_.size() * obs.size(), 0.0);
    out_.ergodic.assign(cps_.size() * obs.size(), 0.0);
    if (net_) {
      w_.assign(net_->num_parameters(), 0.0);
      grad_.assign(net_->num_parameters(), 0.0);
      out_.snapshots.assign(snaps_->size() * w_.size(), 0.0);
    }
  }

  void hold(const State& x, double t0, double t1) {
    obs_.apply<std::int64_t>(x, fx_);
    const std::size_t m = fx_.size();
    if (net_) {
      total_rate_gradient(*net_, theta_, x, grad_);
      const std::size_t P = w_.size();
      while (next_snap_ < snaps_->size() && (*snaps_)[next_snap_] <= t1) {
        const double s = (*snaps_)[next_snap_];
        for (std::size_t p = 0; p < P; ++p)
          out_.snapshots[next_snap_ * P + p] = w_[p] - (s - t0) * grad_[p];
        ++next_snap_;
      }
    }
    while (next_cp_ < cps_.size() && cps_[next_cp_] <= t1) {
      const double c = cps_[next_cp_];
      for (std::size_t i = 0; i < m; ++i) {
        out_.final_values[next_cp_ * m + i] = fx_[i];
        out_.ergodic[next_cp_ * m + i] = (integral_[i] + fx_[i] * (c - t0)) / c;
      }
      ++next_cp_;
    }
    const double dt = t1 - t0;
    for (std::size_t i = 0; i < m; ++i) integral_[i] += fx_[i] * dt;
    if (net_)
      for (std::size_t p = 0; p < w_.size(); ++p) w_[p] -= dt * grad_[p];
  }

  void jump(const State& x, std::size_t j, double) {
    if (net_) add_log_propensity_gradient(*net_, theta_, x, j, w_);
  }

  ReplicaOutput& output() { return out_; }

 private:
  const ObservableSet& obs_;
  const std::vector<double>& cps_;
  const std::vector<double>* snaps_;
  const ReactionNetwork* net_;
  std::span<const double> theta_;
  std::vector<double> fx_, integral_, w_, grad_;
  std::size_t next_cp_ = 0, next_snap_ = 0;
  ReplicaOutput out_;
};

/// Observer for Euler paths; indices are grid steps.
class GridTracker {
 public:
  GridTracker(const ObservableSet& obs,
              const std::vector<std::size_t>& checkpoints,
              const std::vector<std::size_t>* snapshots,
              const DiffusionModel* model, std::span<const double> theta,
              double dt)
      : obs_(obs),
        cps_(checkpoints),
        snaps_(snapshots),
        model_(model),
        theta_(theta),
        sqdt_(std::sqrt(dt)),
        fx_(obs.size()),
        sum_(obs.size(), 0.0) {
    out_.final_values.assign(cps_.size() * obs.size(), 0.0);
    out_.ergodic.assign(cps_.size() * obs.size(), 0.0);
    if (model_) {
      const std::size_t P = model_->num_parameters();
      w_.assign(P, 0.0);
      grad_.assign(model_->dimension() * P, 0.0);
      gamma_.assign(model_->noise_dimension() * P, 0.0);
      solver_.emplace(*model_);
      out_.snapshots.assign(snaps_->size() * P, 0.0);
    }
  }

  void step(std::size_t n, std::span<const double> x_prev,
            std::span<const double> dB, std::span<const double> x_next,
            std::span<const double> sigma) {
    const std::size_t m = fx_.size();
    obs_.apply<double>(x_prev, fx_);
    for (std::size_t i = 0; i < m; ++i) sum_[i] += fx_[i];
    if (model_) {
      const std::size_t P = w_.size();
      const std::size_t d = dB.size();
      model_->drift_gradient(theta_, x_prev, grad_);
      solver_->solve(sigma, grad_, x_prev, gamma_);
      for (std::size_t p = 0; p < P; ++p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += gamma_[k * P + p] * dB[k];
        w_[p] += sqdt_ * acc;
      }
      if (next_snap_ < snaps_->size() && (*snaps_)[next_snap_] == n) {
        std::copy(w_.begin(), w_.end(),
                  out_.snapshots.begin() +
                      static_cast<std::ptrdiff_t>(next_snap_ * P));
        ++next_snap_;
      }
    }
    if (next_cp_ < cps_.size() && cps_[next_cp_] == n) {
      obs_.apply<double>(x_next, fx_);
      for (std::size_t i = 0; i < m; ++i) {
        out_.final_values[next_cp_ * m + i] = fx_[i];
        out_.ergodic[next_cp_ * m + i] = sum_[i] / static_cast<double>(n);
      }
      ++next_cp_;
    }
  }

  ReplicaOutput& output() { return out_; }

 private:
  const ObservableSet& obs_;
  const std::vector<std::size_t>& cps_;
  const std::vector<std::size_t>* snaps_;
  const DiffusionModel* model_;
  std::span<const double> theta_;
  double sqdt_;
  std::vector<double> fx_, sum_, w_, grad_, gamma_;
  std::optional<GammaSolver> solver_;
  std::size_t next_cp_ = 0, next_snap_ = 0;
  ReplicaOutput out_;
};

void store_lr(std::vector<Ensemble>& ens, const SnapshotPlan& plan,
              const ReplicaOutput& out, std::size_t r, double sign) {
  const auto col = static_cast<Eigen::Index>(r);
  for (std::size_t c = 0; c < ens.size(); ++c) {
    auto& e = ens[c];
    const std::size_t m = e.num_observables();
    const std::size_t P = e.num_parameters();
    for (std::size_t i = 0; i < m; ++i) {
      e.final_values(static_cast<Eigen::Index>(i), col) =
          out.final_values[c * m + i];
      e.ergodic_values(static_cast<Eigen::Index>(i), col) =
          out.ergodic[c * m + i];
    }
    const std::size_t at = plan.at_checkpoint[c];
    for (std::size_t p = 0; p < P; ++p) {
      const double w = out.snapshots[at * P + p];
      e.scores(static_cast<Eigen::Index>(p), col) = sign * w;
      if (e.window_scores) {
        const auto& start = plan.at_window_start[c];
        const double w0 = start ? out.snapshots[*start * P + p] : 0.0;
        (*e.window_scores)(static_cast<Eigen::Index>(p), col) = sign * (w - w0);
      }
    }
  }
}

void store_cfd(std::vector<CoupledEnsemble>& ens, const ReplicaOutput& plus,
               const ReplicaOutput& minus, std::size_t r) {
  const auto col = static_cast<Eigen::Index>(r);
  for (std::size_t c = 0; c < ens.size(); ++c) {
    auto& e = ens[c];
    const std::size_t m = e.observable_names.size();
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      e.final_plus(row, col) = plus.final_values[c * m + i];
      e.final_minus(row, col) = minus.final_values[c * m + i];
      e.ergodic_plus(row, col) = plus.ergodic[c * m + i];
      e.ergodic_minus(row, col) = minus.ergodic[c * m + i];
    }
  }
}

std::size_t grid_index(double t, double dt, const char* what) {
  const double q = t / dt;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-6)
    throw ArgumentError(std::string(what) +
                        " does not fall on the Euler grid");
  return static_cast<std::size_t>(r);
}

struct GridPlan {
  double dt = 0.0;
  std::vector<std::size_t> checkpoints;
  std::vector<std::size_t> snapshots;
};

GridPlan plan_grid(const EnsembleOptions& o, const SnapshotPlan& plan) {
  if (o.steps == 0) throw ArgumentError("Euler step count must be positive");
  GridPlan g;
  g.dt = o.checkpoints.back() / static_cast<double>(o.steps);
  for (double c : o.checkpoints)
    g.checkpoints.push_back(grid_index(c, g.dt, "checkpoint"));
  for (double s : plan.times)
    g.snapshots.push_back(grid_index(s, g.dt, "window start"));
  return g;
}

void check_theta_size(std::span<const double> theta, std::size_t expected) {
  if (theta.size() != expected)
    throw ArgumentError("parameter vector has wrong length");
}

}  // namespace

std::vector<Ensemble> simulate_lr_ensemble(const NetworkSetup& setup,
                                           std::span<const double> theta,
                                           const EnsembleOptions& options) {
  validate_options(options);
  const auto& net = setup.network;
  check_theta_size(theta, net.num_parameters());
  const SnapshotPlan plan = plan_snapshots(options);
  auto ens = allocate_lr(options, theta, setup.observables,
                         net.parameters().names());
  const double horizon = options.checkpoints.back();
  const double sign = sign_factor(options.sign);
  parallel_for(options.replicas, options.workers, [&](std::size_t r) {
    RngStream rng(options.seed, {options.domain, r, 0});
    JumpTracker tracker(setup.observables, options.checkpoints, &plan.times,
                        &net, theta);
    State x = setup.initial_state;
    run_ssa(net, theta, x, horizon, rng, tracker);
    store_lr(ens, plan, tracker.output(), r, sign);
  });
  return ens;
}

std::vector<Ensemble> simulate_lr_ensemble(const DiffusionSetup& setup,
                                           std::span<const double> theta,
                                           const EnsembleOptions& options) {
  validate_options(options);
  const auto& model = setup.model;
  check_theta_size(theta, model.num_parameters());
  const SnapshotPlan plan = plan_snapshots(options);
  const GridPlan grid = plan_grid(options, plan);
  auto ens = allocate_lr(options, theta, setup.observables,
                         model.parameters().names());
  const double horizon = options.checkpoints.back();
  parallel_for(options.replicas, options.workers, [&](std::size_t r) {
    RngStream rng(options.seed, {options.domain, r, 0});
    GridTracker tracker(setup.observables, grid.checkpoints, &grid.snapshots,
                        &model, theta, grid.dt);
    std::vector<double> x = setup.initial_state;
    run_euler(model, theta, x, horizon, options.steps, rng, tracker);
    store_lr(ens, plan, tracker.output(), r, 1.0);
  });
  return ens;
}

std::vector<CoupledEnsemble> simulate_cfd_ensemble(
    const NetworkSetup& setup, std::span<const double> theta, std::size_t k,
    double eps, const EnsembleOptions& options) {
  validate_options(options);
  const auto& net = setup.network;
  check_theta_size(theta, net.num_parameters());
  if (!(eps > 0.0)) throw ArgumentError("epsilon must be positive");
  auto [plus, minus] = perturbed_parameters(theta, k, eps);
  if (minus[k] < 0.0)
    throw DomainError("perturbation drives parameter '" +
                      net.parameters().name(k) + "' negative");
  auto ens = allocate_cfd(options, theta, setup.observables, k,
                          net.parameters().name(k), eps);
  const double horizon = options.checkpoints.back();
  parallel_for(options.replicas, options.workers, [&](std::size_t r) {
    auto streams = channel_streams(options.seed, {options.domain, r, 0},
                                   net.num_reactions());
    auto run = [&](std::span<const double> th, std::vector<RngStream> rngs) {
      JumpTracker tracker(setup.observables, options.checkpoints, nullptr,
                          nullptr, th);
      State x = setup.initial_state;
      run_time_change(net, th, x, horizon, std::span<RngStream>(rngs),
                      tracker);
      return std::move(tracker.output());
    };
    const auto out_plus = run(plus, streams);
    const auto out_minus = run(minus, std::move(streams));
    store_cfd(ens, out_plus, out_minus, r);
  });
  return ens;
}

std::vector<CoupledEnsemble> simulate_cfd_ensemble(
    const DiffusionSetup& setup, std::span<const double> theta, std::size_t k,
    double eps, const EnsembleOptions& options, Coupling coupling) {
  validate_options(options);
  const auto& model = setup.model;
  check_theta_size(theta, model.num_parameters());
  if (!(eps > 0.0)) throw ArgumentError("epsilon must be positive");
  auto [plus, minus] = perturbed_parameters(theta, k, eps);
  const SnapshotPlan plan = plan_snapshots(options);
  const GridPlan grid = plan_grid(options, plan);
  auto ens = allocate_cfd(options, theta, setup.observables, k,
                          model.parameters().name(k), eps);
  const double horizon = options.checkpoints.back();
  parallel_for(options.replicas, options.workers, [&](std::size_t r) {
    auto run = [&](std::span<const double> th, StreamId id) {
      RngStream rng(options.seed, id);
      GridTracker tracker(setup.observables, grid.checkpoints, nullptr,
                          nullptr, th, grid.dt);
      std::vector<double> x = setup.initial_state;
      run_euler(model, th, x, horizon, options.steps, rng, tracker);
      return std::move(tracker.output());
    };
    const StreamId id_plus{options.domain, r, 0};
    const StreamId id_minus{options.domain, r,
                            coupling == Coupling::kCommon ? 0u : 1u};
    const auto out_plus = run(plus, id_plus);
    const auto out_minus = run(minus, id_minus);
    store_cfd(ens, out_plus, out_minus, r);
  });
  return ens;
}

Ensemble rescale_scores(const Ensemble& ensemble) {
  Ensemble out = ensemble;
  for (std::size_t p = 0; p < ensemble.theta.size(); ++p) {
    const double th = ensemble.theta[p];
    if (!(th > 0.0))
      throw ArgumentError("log rescaling needs positive parameter '" +
                          ensemble.parameter_names.at(p) + "'");
    out.scores.row(static_cast<Eigen::Index>(p)) *= th;
    if (out.window_scores)
      out.window_scores->row(static_cast<Eigen::Index>(p)) *= th;
  }
  return out;
}

}  // namespace lrsens
