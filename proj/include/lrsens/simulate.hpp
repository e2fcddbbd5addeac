#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "lrsens/error.hpp"
#include "lrsens/model.hpp"
#include "lrsens/rng.hpp"

namespace lrsens {

struct JumpEvent {
  double time = 0.0;
  std::size_t reaction = 0;

  friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

/// Path of a continuous-time Markov chain on [0, T]. Only events are stored;
/// states follow by replaying the stoichiometry from the initial state.
struct JumpTrajectory {
  State initial_state;
  std::vector<JumpEvent> events;
  double final_time = 0.0;

  /// Right-continuous state at time t (events at exactly t are applied).
  State state_at(const ReactionNetwork& network, double t) const;
  State final_state(const ReactionNetwork& network) const;
  /// Prefix of the path on [0, t].
  JumpTrajectory truncated(double t) const;

  friend bool operator==(const JumpTrajectory&,
                         const JumpTrajectory&) = default;
};

/// Fixed-step Euler-Maruyama path: t_n = n * T / N for n = 0..N, with the
/// standard normal increments that produced it.
struct GridTrajectory {
  double final_time = 0.0;
  std::size_t steps = 0;
  std::size_t dimension = 0;
  std::size_t noise_dimension = 0;
  std::vector<double> states;  // (steps + 1) x dimension
  std::vector<double> noise;   // steps x noise_dimension; row n-1 drives step n

  double dt() const { return final_time / static_cast<double>(steps); }
  std::span<const double> state(std::size_t n) const {
    return {states.data() + n * dimension, dimension};
  }
  /// Increment Delta B_n for n = 1..steps.
  std::span<const double> increment(std::size_t n) const {
    return {noise.data() + (n - 1) * noise_dimension, noise_dimension};
  }

  friend bool operator==(const GridTrajectory&,
                         const GridTrajectory&) = default;
};

namespace detail {

inline void apply_reaction(const ReactionNetwork& net, std::size_t j,
                           State& x) {
  for (const auto& [s, d] : net.net_change(j)) x[s] += d;
}

inline void check_network_args(const ReactionNetwork& net,
                               std::span<const double> theta, const State& x,
                               double final_time) {
  if (theta.size() != net.num_parameters())
    throw ArgumentError("parameter vector has wrong length");
  if (x.size() != net.num_species())
    throw ArgumentError("initial state has wrong length");
  for (auto v : x)
    if (v < 0) throw DomainError("negative initial population");
  for (double v : theta)
    if (v < 0.0) throw DomainError("negative rate constant");
  if (!(final_time > 0.0)) throw ArgumentError("final time must be positive");
}

}  // namespace detail

// Simulation drivers. An observer receives
//   hold(x, t0, t1)      state x is held on [t0, t1)
//   jump(x_before, j, t) reaction j fires at t; the driver then updates x
// and sees every instant of [0, T] exactly once.

/// Gillespie direct method. `x` holds the initial state and is left at the
/// final state.
template <class Observer>
void run_ssa(const ReactionNetwork& net, std::span<const double> theta,
             State& x, double final_time, RngStream& rng, Observer& obs) {
  detail::check_network_args(net, theta, x, final_time);
  const std::size_t nr = net.num_reactions();
  std::vector<double> a(nr);
  double t = 0.0;
  for (;;) {
    net.propensities(theta, x, a);
    double total = 0.0;
    for (double v : a) total += v;
    if (total <= 0.0) {
      obs.hold(x, t, final_time);
      return;
    }
    const double tau = rng.exponential() / total;
    const double u = rng.uniform() * total;
    if (t + tau >= final_time) {
      obs.hold(x, t, final_time);
      return;
    }
    const double t_next = t + tau;
    obs.hold(x, t, t_next);
    std::size_t j = 0;
    std::size_t last_positive = 0;
    double cum = 0.0;
    for (; j < nr; ++j) {
      if (a[j] > 0.0) last_positive = j;
      cum += a[j];
      if (u < cum && a[j] > 0.0) break;
    }
    if (j == nr) j = last_positive;
    obs.jump(x, j, t_next);
    detail::apply_reaction(net, j, x);
    t = t_next;
  }
}

/// Random-time-change simulation (modified next reaction method): channel j
/// fires at the jump points of its own unit-rate Poisson stream, read off at
/// internal time int_0^t a_j. Two runs fed equal streams are coupled; with
/// equal parameters they coincide exactly.
template <class Observer>
void run_time_change(const ReactionNetwork& net, std::span<const double> theta,
                     State& x, double final_time,
                     std::span<RngStream> channel_streams, Observer& obs) {
  detail::check_network_args(net, theta, x, final_time);
  const std::size_t nr = net.num_reactions();
  if (channel_streams.size() != nr)
    throw ArgumentError("need one random stream per reaction channel");
  std::vector<double> a(nr), internal(nr, 0.0), next_point(nr);
  for (std::size_t j = 0; j < nr; ++j)
    next_point[j] = channel_streams[j].exponential();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double t = 0.0;
  for (;;) {
    net.propensities(theta, x, a);
    double delta = kInf;
    std::size_t mu = nr;
    for (std::size_t j = 0; j < nr; ++j) {
      if (a[j] <= 0.0) continue;
      const double d = (next_point[j] - internal[j]) / a[j];
      if (d < delta) {
        delta = d;
        mu = j;
      }
    }
    if (mu == nr || t + delta >= final_time) {
      obs.hold(x, t, final_time);
      return;
    }
    const double t_next = t + delta;
    obs.hold(x, t, t_next);
    for (std::size_t j = 0; j < nr; ++j) internal[j] += a[j] * delta;
    internal[mu] = next_point[mu];
    next_point[mu] += channel_streams[mu].exponential();
    obs.jump(x, mu, t_next);
    detail::apply_reaction(net, mu, x);
    t = t_next;
  }
}

/// Replays a stored jump path through an observer.
template <class Observer>
void replay(const ReactionNetwork& net, const JumpTrajectory& traj,
            Observer& obs) {
  State x = traj.initial_state;
  double t = 0.0;
  for (const auto& ev : traj.events) {
    obs.hold(x, t, ev.time);
    obs.jump(x, ev.reaction, ev.time);
    detail::apply_reaction(net, ev.reaction, x);
    t = ev.time;
  }
  obs.hold(x, t, traj.final_time);
}

/// Reusable per-step buffers for Euler-Maruyama.
class EulerWorkspace {
 public:
  EulerWorkspace(const DiffusionModel& model)
      : drift(model.dimension()),
        sigma(model.dimension() * model.noise_dimension()),
        noise(model.noise_dimension()),
        next(model.dimension()) {}

  std::vector<double> drift;
  std::vector<double> sigma;
  std::vector<double> noise;
  std::vector<double> next;
};

// Euler-Maruyama observers receive
//   step(n, x_prev, dB, x_next, sigma)   for n = 1..N
// where x_next = x_prev + dt a(x_prev) + sqrt(dt) sigma(x_prev) dB and sigma
// is sigma(x_prev), row-major N x d.

/// `x` holds the initial state and is left at X_N.
template <class Observer>
void run_euler(const DiffusionModel& model, std::span<const double> theta,
               std::vector<double>& x, double final_time, std::size_t steps,
               RngStream& rng, Observer& obs) {
  if (steps == 0) throw ArgumentError("Euler scheme needs at least one step");
  if (!(final_time > 0.0)) throw ArgumentError("final time must be positive");
  if (x.size() != model.dimension())
    throw ArgumentError("initial state has wrong length");
  if (theta.size() != model.num_parameters())
    throw ArgumentError("parameter vector has wrong length");
  const std::size_t n_dim = model.dimension();
  const std::size_t d_dim = model.noise_dimension();
  const double dt = final_time / static_cast<double>(steps);
  const double sqdt = std::sqrt(dt);
  EulerWorkspace ws(model);
  for (std::size_t n = 1; n <= steps; ++n) {
    for (auto& z : ws.noise) z = rng.normal();
    model.drift(theta, x, ws.drift);
    model.diffusion(x, ws.sigma);
    for (std::size_t i = 0; i < n_dim; ++i) {
      double diff = 0.0;
      for (std::size_t k = 0; k < d_dim; ++k)
        diff += ws.sigma[i * d_dim + k] * ws.noise[k];
      ws.next[i] = x[i] + dt * ws.drift[i] + sqdt * diff;
      if (!std::isfinite(ws.next[i]))
        throw SimulationError(
            "Euler-Maruyama state became non-finite at step " +
                std::to_string(n),
            n);
    }
    obs.step(n, std::span<const double>(x), std::span<const double>(ws.noise),
             std::span<const double>(ws.next),
             std::span<const double>(ws.sigma));
    x.swap(ws.next);
  }
}

// Path generation.

JumpTrajectory ssa_path(const ReactionNetwork& network,
                        std::span<const double> theta, const State& x0,
                        double final_time, RngStream& rng);

GridTrajectory euler_path(const DiffusionModel& model,
                          std::span<const double> theta,
                          std::span<const double> x0, double final_time,
                          std::size_t steps, RngStream& rng);

/// How the two sides of a finite-difference pair share randomness.
enum class Coupling {
  kCommon,       // same streams on both sides
  kIndependent,  // unrelated streams (baseline for variance comparisons)
};

/// Paths at theta + eps e_k and theta - eps e_k, driven by the same noise
/// sequence. Both sides start from the stream (seed, stream).
std::pair<GridTrajectory, GridTrajectory> coupled_pair_euler(
    const DiffusionModel& model, std::span<const double> theta, std::size_t k,
    double eps, std::span<const double> x0, double final_time,
    std::size_t steps, std::uint64_t seed, StreamId stream,
    Coupling coupling = Coupling::kCommon);

/// Random-time-change coupled SSA pair: reaction channel j on both sides
/// uses the unit-rate Poisson stream (seed, {stream.domain, stream.replica,
/// j}). Throws DomainError if theta_k - eps < 0.
std::pair<JumpTrajectory, JumpTrajectory> coupled_pair_ssa(
    const ReactionNetwork& network, std::span<const double> theta,
    std::size_t k, double eps, const State& x0, double final_time,
    std::uint64_t seed, StreamId stream);

/// theta +/- eps e_k with bounds checks shared by both coupled samplers.
std::pair<std::vector<double>, std::vector<double>> perturbed_parameters(
    std::span<const double> theta, std::size_t k, double eps);

/// One random stream per reaction channel for the coupled SSA.
std::vector<RngStream> channel_streams(std::uint64_t seed, StreamId stream,
                                       std::size_t channels);

// Path functionals.

using StateFunction =
    std::function<std::vector<double>(std::span<const double>)>;

/// f = identity (the full state vector).
StateFunction state_identity();

/// f(X_T).
std::vector<double> observable_single(const ReactionNetwork& network,
                                      const JumpTrajectory& traj,
                                      const StateFunction& f);
std::vector<double> observable_single(const GridTrajectory& traj,
                                      const StateFunction& f);

/// (1/T) int_0^T f(X_t) dt: exact for jump paths, left-endpoint Riemann sum
/// for grid paths.
std::vector<double> observable_ergodic(const ReactionNetwork& network,
                                       const JumpTrajectory& traj,
                                       const StateFunction& f);
std::vector<double> observable_ergodic(const GridTrajectory& traj,
                                       const StateFunction& f);

}  // namespace lrsens
