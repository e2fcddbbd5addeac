#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrsens {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid state or parameter value for a propensity/rate evaluation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-finite model output. Carries the state at which it happened.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::vector<double> state)
      : Error(what), state_(std::move(state)) {}
  const std::vector<double>& state() const { return state_; }

 private:
  std::vector<double> state_;
};

/// Trajectory blow-up or ill-posed step during time integration.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Trajectory and parameters do not belong together.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

/// Estimator requested on data that lacks the needed information.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A statistic is undefined for the given data (zero-variance series, ACF
/// that never decays, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrsens
