#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lrsens/model.hpp"
#include "lrsens/score.hpp"
#include "lrsens/simulate.hpp"

namespace lrsens {

/// M replicas of (observables, score) at one final time T. Matrices are laid
/// out with replicas contiguous: final_values(i, r) is observable i of
/// replica r.
struct Ensemble {
  std::string model_id;
  double final_time = 0.0;
  std::vector<double> theta;
  std::uint64_t seed = 0;
  std::vector<std::string> observable_names;
  std::vector<std::string> parameter_names;

  RowMatrix final_values;    // m x M, f(X_T)
  RowMatrix ergodic_values;  // m x M, (1/T) int_0^T f(X_t) dt
  RowMatrix scores;          // P x M, W(X_{0:T})
  std::optional<double> window;
  std::optional<RowMatrix> window_scores;  // P x M, W(X_{T-window:T})

  std::size_t replicas() const {
    return static_cast<std::size_t>(scores.cols());
  }
  std::size_t num_observables() const { return observable_names.size(); }
  std::size_t num_parameters() const { return parameter_names.size(); }

  /// Throws ArgumentError if shapes disagree or M < 2.
  void validate() const;
};

/// Observables of M coupled pairs at theta +/- eps e_k.
struct CoupledEnsemble {
  std::string model_id;
  double final_time = 0.0;
  std::vector<double> theta;
  std::uint64_t seed = 0;
  std::size_t parameter = 0;
  std::string parameter_name;
  double epsilon = 0.0;
  std::vector<std::string> observable_names;

  RowMatrix final_plus, final_minus;      // m x M
  RowMatrix ergodic_plus, ergodic_minus;  // m x M

  std::size_t replicas() const {
    return static_cast<std::size_t>(final_plus.cols());
  }
  void validate() const;
};

struct EnsembleOptions {
  std::string model_id;
  /// Increasing, positive; the last one is the simulated horizon. One
  /// ensemble is produced per checkpoint from the same trajectories.
  std::vector<double> checkpoints;
  /// Truncation window T_d for windowed scores, if wanted.
  std::optional<double> window;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  /// Separates the random streams of unrelated ensembles in one run.
  std::uint64_t domain = 0;
  std::size_t workers = 1;
  /// Euler steps over the horizon (diffusions only).
  std::size_t steps = 0;
  ScoreSign sign = ScoreSign::kLogLikelihood;
};

/// Runs body(r) for r in [0, n) on `workers` threads. Output must be written
/// to per-index slots; the first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

/// One SSA pass per replica feeding every checkpoint. Replica r uses stream
/// (seed, {domain, r, 0}).
std::vector<Ensemble> simulate_lr_ensemble(const NetworkSetup& setup,
                                           std::span<const double> theta,
                                           const EnsembleOptions& options);
std::vector<Ensemble> simulate_lr_ensemble(const DiffusionSetup& setup,
                                           std::span<const double> theta,
                                           const EnsembleOptions& options);

/// Coupled pairs for parameter k. Networks use the random-time-change
/// coupling with channel streams (seed, {domain, r, j}).
std::vector<CoupledEnsemble> simulate_cfd_ensemble(
    const NetworkSetup& setup, std::span<const double> theta, std::size_t k,
    double eps, const EnsembleOptions& options);
std::vector<CoupledEnsemble> simulate_cfd_ensemble(
    const DiffusionSetup& setup, std::span<const double> theta, std::size_t k,
    double eps, const EnsembleOptions& options,
    Coupling coupling = Coupling::kCommon);

/// Copy whose scores are taken with respect to log theta (row p times
/// theta_p). Throws ArgumentError for nonpositive theta_p.
Ensemble rescale_scores(const Ensemble& ensemble);

}  // namespace lrsens
