#include "lrsens/simulate.hpp"

#include <algorithm>

namespace lrsens {

State JumpTrajectory::state_at(const ReactionNetwork& network,
                               double t) const {
  State x = initial_state;
  for (const auto& ev : events) {
    if (ev.time > t) break;
    detail::apply_reaction(network, ev.reaction, x);
  }
  return x;
}

State JumpTrajectory::final_state(const ReactionNetwork& network) const {
  return state_at(network, final_time);
}

JumpTrajectory JumpTrajectory::truncated(double t) const {
  if (!(t > 0.0) || t > final_time)
    throw ArgumentError("truncation time must lie in (0, T]");
  JumpTrajectory out;
  out.initial_state = initial_state;
  out.final_time = t;
  for (const auto& ev : events) {
    if (ev.time > t) break;
    out.events.push_back(ev);
  }
  return out;
}

namespace {

struct EventRecorder {
  std::vector<JumpEvent>* events;
  void hold(const State&, double, double) {}
  void jump(const State&, std::size_t j, double t) {
    events->push_back({t, j});
  }
};

struct GridRecorder {
  GridTrajectory* traj;
  void step(std::size_t, std::span<const double>, std::span<const double> dB,
            std::span<const double> next, std::span<const double>) {
    traj->noise.insert(traj->noise.end(), dB.begin(), dB.end());
    traj->states.insert(traj->states.end(), next.begin(), next.end());
  }
};

GridTrajectory grid_path(const DiffusionModel& model,
                         std::span<const double> theta,
                         std::span<const double> x0, double final_time,
                         std::size_t steps, RngStream& rng) {
  GridTrajectory traj;
  traj.final_time = final_time;
  traj.steps = steps;
  traj.dimension = model.dimension();
  traj.noise_dimension = model.noise_dimension();
  traj.states.reserve((steps + 1) * traj.dimension);
  traj.noise.reserve(steps * traj.noise_dimension);
  traj.states.assign(x0.begin(), x0.end());
  std::vector<double> x(x0.begin(), x0.end());
  GridRecorder rec{&traj};
  run_euler(model, theta, x, final_time, steps, rng, rec);
  return traj;
}

}  // namespace

JumpTrajectory ssa_path(const ReactionNetwork& network,
                        std::span<const double> theta, const State& x0,
                        double final_time, RngStream& rng) {
  JumpTrajectory traj;
  traj.initial_state = x0;
  traj.final_time = final_time;
  State x = x0;
  EventRecorder rec{&traj.events};
  run_ssa(network, theta, x, final_time, rng, rec);
  return traj;
}

GridTrajectory euler_path(const DiffusionModel& model,
                          std::span<const double> theta,
                          std::span<const double> x0, double final_time,
                          std::size_t steps, RngStream& rng) {
  return grid_path(model, theta, x0, final_time, steps, rng);
}

std::pair<std::vector<double>, std::vector<double>> perturbed_parameters(
    std::span<const double> theta, std::size_t k, double eps) {
  if (k >= theta.size()) throw ArgumentError("parameter index out of range");
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw ArgumentError("finite-difference step must be nonnegative");
  std::vector<double> plus(theta.begin(), theta.end());
  std::vector<double> minus(theta.begin(), theta.end());
  plus[k] += eps;
  minus[k] -= eps;
  return {std::move(plus), std::move(minus)};
}

std::pair<GridTrajectory, GridTrajectory> coupled_pair_euler(
    const DiffusionModel& model, std::span<const double> theta, std::size_t k,
    double eps, std::span<const double> x0, double final_time,
    std::size_t steps, std::uint64_t seed, StreamId stream,
    Coupling coupling) {
  auto [plus, minus] = perturbed_parameters(theta, k, eps);
  RngStream rng_plus(seed, stream);
  StreamId minus_id = stream;
  if (coupling == Coupling::kIndependent) minus_id.channel += 1;
  RngStream rng_minus(seed, minus_id);
  auto a = grid_path(model, plus, x0, final_time, steps, rng_plus);
  auto b = grid_path(model, minus, x0, final_time, steps, rng_minus);
  return {std::move(a), std::move(b)};
}

std::vector<RngStream> channel_streams(std::uint64_t seed, StreamId stream,
                                       std::size_t channels) {
  std::vector<RngStream> out;
  out.reserve(channels);
  for (std::size_t j = 0; j < channels; ++j)
    out.emplace_back(seed, StreamId{stream.domain, stream.replica, j});
  return out;
}

std::pair<JumpTrajectory, JumpTrajectory> coupled_pair_ssa(
    const ReactionNetwork& network, std::span<const double> theta,
    std::size_t k, double eps, const State& x0, double final_time,
    std::uint64_t seed, StreamId stream) {
  auto [plus, minus] = perturbed_parameters(theta, k, eps);
  if (minus[k] < 0.0)
    throw DomainError("perturbation drives parameter '" +
                      network.parameters().name(k) + "' negative");
  auto streams = channel_streams(seed, stream, network.num_reactions());
  auto run = [&](std::span<const double> th, std::vector<RngStream> rngs) {
    JumpTrajectory traj;
    traj.initial_state = x0;
    traj.final_time = final_time;
    State x = x0;
    EventRecorder rec{&traj.events};
    run_time_change(network, th, x, final_time, std::span<RngStream>(rngs),
                    rec);
    return traj;
  };
  auto a = run(plus, streams);
  auto b = run(minus, std::move(streams));
  return {std::move(a), std::move(b)};
}

StateFunction state_identity() {
  return [](std::span<const double> x) {
    return std::vector<double>(x.begin(), x.end());
  };
}

namespace {

std::vector<double> to_real(const State& x) {
  return std::vector<double>(x.begin(), x.end());
}

struct ErgodicAccumulator {
  const StateFunction* f;
  std::vector<double> integral;
  void hold(const State& x, double t0, double t1) {
    const auto v = (*f)(to_real(x));
    if (integral.empty()) integral.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) integral[i] += v[i] * (t1 - t0);
  }
  void jump(const State&, std::size_t, double) {}
};

}  // namespace

std::vector<double> observable_single(const ReactionNetwork& network,
                                      const JumpTrajectory& traj,
                                      const StateFunction& f) {
  return f(to_real(traj.final_state(network)));
}

std::vector<double> observable_single(const GridTrajectory& traj,
                                      const StateFunction& f) {
  return f(traj.state(traj.steps));
}

std::vector<double> observable_ergodic(const ReactionNetwork& network,
                                       const JumpTrajectory& traj,
                                       const StateFunction& f) {
  ErgodicAccumulator acc{&f, {}};
  replay(network, traj, acc);
  for (auto& v : acc.integral) v /= traj.final_time;
  return acc.integral;
}

std::vector<double> observable_ergodic(const GridTrajectory& traj,
                                       const StateFunction& f) {
  std::vector<double> sum;
  for (std::size_t n = 0; n < traj.steps; ++n) {
    const auto v = f(traj.state(n));
    if (sum.empty()) sum.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
  }
  for (auto& v : sum) v /= static_cast<double>(traj.steps);
  return sum;
}

}  // namespace lrsens
