#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lrsens/model.hpp"
#include "lrsens/simulate.hpp"

namespace lrsens {

/// Sign applied to the CTMC score. kLogLikelihood is the gradient of the
/// path log-likelihood, sum over jumps of grad log a_j minus the integral of
/// grad lambda; kReversed is its negative.
enum class ScoreSign { kLogLikelihood, kReversed };

inline double sign_factor(ScoreSign s) {
  return s == ScoreSign::kLogLikelihood ? 1.0 : -1.0;
}

/// One additive piece of a score. A point contribution (start == end) comes
/// from a CTMC jump or an Euler step ending at t_n; a rate contribution is
/// integrated over [start, end).
struct ScoreContribution {
  double start = 0.0;
  double end = 0.0;
  bool is_rate = false;
  std::vector<double> value;
};

/// Score W of one trajectory, optionally with its time-ordered pieces so that
/// windowed partial scores can be formed afterwards.
struct ScoreRecord {
  std::vector<double> total;
  double final_time = 0.0;
  double sign = 1.0;
  /// Euler step for grid-based records, 0 for jump paths.
  double grid_step = 0.0;
  bool windowed = false;
  std::vector<ScoreContribution> contributions;
};

// Building blocks shared by the offline scores and the fused ensemble loop.

/// out = grad_theta lambda(x), lambda = sum_j a_j.
void total_rate_gradient(const ReactionNetwork& net,
                         std::span<const double> theta,
                         std::span<const std::int64_t> x,
                         std::span<double> out);
/// out += grad_theta log a_j(x). Throws InconsistencyError when a_j(x) = 0.
void add_log_propensity_gradient(const ReactionNetwork& net,
                                 std::span<const double> theta,
                                 std::span<const std::int64_t> x,
                                 std::size_t j, std::span<double> out);

/// Solves sigma Gamma = grad_theta a for Gamma (d x P, row-major).
/// Square sigma: LU with a reciprocal condition check. Rectangular sigma:
/// minimum-norm least squares, rejected when the residual exceeds
/// 1e-8 * ||grad a||.
class GammaSolver {
 public:
  explicit GammaSolver(const DiffusionModel& model);

  /// sigma: N x d, gradient: N x P, gamma: d x P (all row-major). Throws
  /// NumericalError on a singular or ill-conditioned sigma.
  void solve(std::span<const double> sigma, std::span<const double> gradient,
             std::span<const double> state, std::span<double> gamma);

  static constexpr double kMinReciprocalCondition = 1e-12;
  static constexpr double kResidualTolerance = 1e-8;

 private:
  std::size_t n_, d_, p_;
  Eigen::MatrixXd sigma_, rhs_, gamma_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
};

/// Score of a jump path: s * (sum_jumps grad log a_j(X_{s-}) - int_0^T grad
/// lambda(X_s) ds), the integral evaluated exactly over holding intervals.
ScoreRecord ctmc_score(const JumpTrajectory& traj,
                       const ReactionNetwork& network,
                       std::span<const double> theta,
                       ScoreSign sign = ScoreSign::kLogLikelihood,
                       bool keep_window = false);

/// Score of an Euler-Maruyama path: sum_n Gamma(X_{n-1})^T sqrt(dt) dB_n.
ScoreRecord euler_score(const GridTrajectory& traj,
                        const DiffusionModel& model,
                        std::span<const double> theta,
                        bool keep_window = false);

/// Score restricted to (T - window, T]. Throws ArgumentError for a window
/// outside (0, T] and CapabilityError if the record was built without
/// windowing.
std::vector<double> truncated_score(const ScoreRecord& record, double window);

/// Score and observables of an i.i.d. sequence X_1..X_T with known
/// per-sample score w(x) = grad_theta log density.
struct IidRecord {
  std::vector<double> score;          // sum_t w(X_t)
  std::vector<double> final_value;    // f(X_T)
  std::vector<double> ergodic_value;  // (1/T) sum_t f(X_t)
};

using SampleFunction = std::function<std::vector<double>(double)>;

IidRecord iid_score(std::span<const double> samples, const SampleFunction& w,
                    const SampleFunction& f);

}  // namespace lrsens
