#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "lrsens/model.hpp"
#include "lrsens/simulate.hpp"

namespace lrsens {

/// M * Var of the sample mean, i.e. the unbiased sample variance of the
/// per-replica values. Throws ArgumentError for M < 2.
double normalized_variance(std::span<const double> values);

struct MeanEstimate {
  double mean = 0.0;
  double standard_deviation = 0.0;
  double standard_error = 0.0;
};
MeanEstimate mean_and_se(std::span<const double> values);

/// Biased autocorrelation estimator rho(l) for l = 0..max_lag. Throws
/// ArgumentError if the series is not longer than max_lag and
/// EstimationError for a constant series.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

/// Species count of a jump path sampled at t = k * step, k = 0..floor(T/step).
std::vector<double> sample_on_grid(const ReactionNetwork& network,
                                   const JumpTrajectory& traj,
                                   std::size_t species, double step);

struct DecorrelationOptions {
  /// Band half-width is band_width / sqrt(series length).
  double band_width = 3.0;
  /// Consecutive lags that must stay inside the band.
  std::size_t persistence = 5;
  double safety_factor = 3.0;
};

struct DecorrelationEstimate {
  double time = 0.0;  // safety_factor * lag * grid_step
  std::size_t lag = 0;
  bool low_confidence = false;
  std::string_view reason;
};

/// Decorrelation time from an ACF computed on a series of `series_length`
/// points with spacing grid_step. The entry lag is the first lag from which
/// rho stays inside the band for `persistence` lags. The estimate is flagged
/// when the ACF has a sustained negative lobe or leaves the band again for
/// `persistence` lags after entering it. Throws EstimationError if the ACF
/// never settles.
DecorrelationEstimate decorrelation_time(std::span<const double> rho,
                                         double grid_step,
                                         std::size_t series_length,
                                         const DecorrelationOptions& options =
                                             {});

/// Moments of one i.i.d. sample: f and per-sample score w.
struct IidMoments {
  double mean_f = 0.0;
  double mean_f2 = 0.0;
  double mean_w = 0.0;
  double mean_w2 = 0.0;
  double mean_fw = 0.0;
};

/// Leading-order normalized variances of the LR estimators on an i.i.d.
/// sequence of length T.
struct IidVariancePrediction {
  double single = 0.0;    // I2: T E[f^2] E[w^2]
  double ergodic = 0.0;   // I3: T (E f)^2 E[w^2]
  /// Centered ergodic, constant in T, under the two readings of the
  /// textbook formula E[f^2]E[w^2] + 2 E[fw]^2: with raw moments (a) and
  /// with centered moments (b).
  double centered_raw = 0.0;
  double centered_central = 0.0;
  /// Exact limit Var(f) E[w^2] + Cov(f, w)^2 for comparison.
  double centered_exact = 0.0;
};

IidVariancePrediction iid_variance_oracle(const IidMoments& moments, double T);

/// Reading closest to an observed centered-ergodic normalized variance:
/// 'a' (raw moments) or 'b' (centered moments).
char select_reading(const IidVariancePrediction& prediction, double observed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
/// Least-squares line through (x_i, y_i). Throws ArgumentError for fewer
/// than two points or constant x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace lrsens
