#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrsens/ensemble.hpp"
#include "lrsens/model.hpp"

namespace lrsens {

enum class EstimatorId {
  kI1,     // coupled finite difference, f(X_T)
  kI2,     // LR, f(X_T) W
  kI2bar,  // centered LR
  kI3,     // ergodic LR, f_bar W
  kI3bar,  // centered ergodic LR
  kI4,     // truncated LR, f(X_T) W(X_{T-T_d:T})
  kI4bar,  // centered truncated LR
  kI5,     // coupled finite difference, f_bar
  kCov,    // covariance LR
};

/// "I1", "I2", "I2bar", ..., "COV".
std::string_view estimator_name(EstimatorId id);
std::optional<EstimatorId> parse_estimator(std::string_view name);
bool is_finite_difference(EstimatorId id);
std::vector<EstimatorId> all_estimators();

enum class Centering {
  kNone,
  kPlugIn,       // c = sample mean of the same replicas
  kLeaveOneOut,  // replica r uses the mean of the other M - 1
};

/// Estimates for m observables x P parameters. Standard errors treat the
/// per-replica summands as i.i.d.; normalized_variance is their unbiased
/// sample variance, i.e. M * Var of the estimator.
struct SensitivityReport {
  EstimatorId estimator = EstimatorId::kI2;
  double final_time = 0.0;
  std::size_t replicas = 0;
  std::vector<std::string> observable_names;
  std::vector<std::string> parameter_names;
  /// Positions of the reported columns in the model's parameter vector.
  std::vector<std::size_t> parameter_indices;

  RowMatrix estimate;             // m x P
  RowMatrix standard_error;       // m x P
  RowMatrix normalized_variance;  // m x P

  // Covariance LR only.
  std::optional<RowMatrix> fim;                  // P x P, Cov(W)
  std::optional<RowMatrix> observable_variance;  // m x m, Cov(f_bar)
  std::optional<RowMatrix> covariance;  // (m+P) x (m+P), T Cov(f_bar, W/T)
  std::optional<std::vector<double>> screening_trace;  // m
  std::optional<RowMatrix> screening_parameter;        // m x P

  std::vector<std::string> warnings;
};

/// Summands z_r = (f_r - c_r) w_r and their mean, sample variance and
/// standard error.
struct ProductMoments {
  double mean = 0.0;
  double normalized_variance = 0.0;
  double standard_error = 0.0;
};
ProductMoments product_moments(std::span<const double> f,
                               std::span<const double> w, Centering centering);

/// I1: central difference of f(X_T) over coupled pairs.
SensitivityReport cfd_single(const CoupledEnsemble& pairs);
/// I5: central difference of the ergodic average.
SensitivityReport cfd_ergodic(const CoupledEnsemble& pairs);

/// I2 (Centering::kNone) or I2bar.
SensitivityReport lr_single(const Ensemble& ensemble,
                            Centering centering = Centering::kPlugIn);
/// I3 or I3bar.
SensitivityReport lr_ergodic(const Ensemble& ensemble,
                             Centering centering = Centering::kPlugIn);
/// I4 or I4bar with window T_d. T_d == T uses the full score and matches
/// lr_single exactly. Throws ArgumentError for T_d outside (0, T] and
/// CapabilityError if the ensemble lacks scores for that window.
SensitivityReport lr_truncated(const Ensemble& ensemble, double window,
                               Centering centering = Centering::kPlugIn);

/// T * Cov of (f_bar, W / T). Its m x P block is the centered ergodic LR,
/// its P x P block is Cov(W) / T. Fills fim, observable_variance,
/// covariance and the screening bounds. Throws ArgumentError if m or P is 0.
SensitivityReport covariance_lr(const Ensemble& ensemble);

/// Fills screening_trace = sqrt(Var(f_bar_i) tr FIM) and screening_parameter
/// = sqrt(Var(f_bar_i) FIM_pp). Negative variances are clamped to 0 with a
/// warning. Throws CapabilityError without fim/observable_variance.
void screening_bound(SensitivityReport& report);

/// Derivatives with respect to log theta: column p times theta_p.
/// `theta` holds the full parameter vector; parameter_indices select from
/// it. Throws ArgumentError for nonpositive theta_p.
SensitivityReport log_rescale(const SensitivityReport& report,
                              std::span<const double> theta);

/// Joins single-parameter reports (e.g. one CFD run per parameter) into one
/// report. All parts must share estimator, T, M and observables.
SensitivityReport merge_columns(const std::vector<SensitivityReport>& parts);

}  // namespace lrsens
