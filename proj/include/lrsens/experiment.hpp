#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrsens/estimators.hpp"
#include "lrsens/model.hpp"

namespace lrsens {

/// One batch experiment. Field names match the JSON keys.
struct ExperimentConfig {
  /// Builtin model id or a path to a .rxn file.
  std::string model;
  std::map<std::string, double> theta;
  std::optional<std::vector<double>> initial_state;
  std::vector<double> checkpoints;
  std::size_t replicas = 0;
  /// Coupled pairs per parameter for I1/I5; defaults to replicas.
  std::size_t cfd_replicas = 0;
  std::vector<EstimatorId> estimators;
  double epsilon = 0.01;
  std::optional<double> window;
  /// Euler steps up to the last checkpoint; defaults to the model's step
  /// size scaled to that horizon.
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  bool log_scale = false;
  /// Parameters differentiated by the finite-difference estimators;
  /// empty means all.
  std::vector<std::string> parameters;
  /// Directory that relative model paths resolve against.
  std::filesystem::path base_dir;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every setting, defaults included, as written into reports.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Resolves the model reference of a config (builtin id or .rxn path).
ModelSetup load_model(const ExperimentConfig& config);

struct ExperimentResult {
  ExperimentConfig config;
  /// Grouped by estimator in config order, checkpoints ascending.
  std::vector<std::pair<EstimatorId, std::vector<SensitivityReport>>> reports;
  std::vector<std::string> log;
};

/// Runs one LR pass (if any LR estimator is requested) feeding every LR
/// estimator at every checkpoint, plus one coupled ensemble per parameter
/// for the finite-difference estimators. Output does not depend on
/// `workers`.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::size_t workers = 1);

nlohmann::json report_to_json(const SensitivityReport& report);

/// Columns estimator,T,observable,parameter,estimate,standard_error,
/// normalized_variance; rows sorted by (estimator, T, observable, parameter).
std::string plotdata_csv(const ExperimentResult& result);

/// report_<est>.json, report_<est>.csv, plotdata.csv and run.log.
void write_outputs(const ExperimentResult& result,
                   const std::filesystem::path& out_dir);

/// Shortest decimal that reads back to the same double.
std::string format_number(double v);

}  // namespace lrsens
