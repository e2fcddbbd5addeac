#include "lrsens/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "lrsens/ensemble.hpp"
#include "lrsens/error.hpp"
#include "lrsens/kernels.hpp"
#include "lrsens/netparse.hpp"

namespace lrsens {

using nlohmann::json;

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

const std::set<std::string> kFields = {
    "model",     "theta",   "initial_state", "checkpoints", "replicas",
    "cfd_replicas", "estimators", "epsilon", "window",      "steps",
    "seed",      "log_scale", "parameters"};

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError("field '" + field + "' " + what);
}

const json& required(const json& j, const std::string& field) {
  if (!j.contains(field)) bad(field, "is required");
  return j.at(field);
}

double number_field(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(field, "must be finite");
  return d;
}

std::size_t count_field(const json& v, const std::string& field,
                        std::size_t minimum) {
  if (!v.is_number_integer()) bad(field, "must be an integer");
  if (v.is_number_unsigned()) {
    const auto n = v.get<std::uint64_t>();
    if (n < minimum) bad(field, "must be at least " + std::to_string(minimum));
    return static_cast<std::size_t>(n);
  }
  const auto n = v.get<std::int64_t>();
  if (n < static_cast<std::int64_t>(minimum))
    bad(field, "must be at least " + std::to_string(minimum));
  return static_cast<std::size_t>(n);
}

std::vector<std::string> string_list(const json& v, const std::string& field) {
  if (!v.is_array()) bad(field, "must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) bad(field, "must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

bool needs_window(EstimatorId id) {
  return id == EstimatorId::kI4 || id == EstimatorId::kI4bar;
}

json matrix_json(const RowMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_number(v[i]);
  }
  return out;
}

struct ResolvedModel {
  std::string kind;
  std::vector<double> theta;
  std::vector<std::string> parameter_names;
};

}  // namespace

ExperimentConfig parse_config(const json& j,
                              const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kFields.count(key)) bad(key, "is not a known setting");
  ExperimentConfig c;
  c.base_dir = base_dir;

  const json& model = required(j, "model");
  if (!model.is_string() || model.get<std::string>().empty())
    bad("model", "must be a non-empty string");
  c.model = model.get<std::string>();

  const json& cps = required(j, "checkpoints");
  if (!cps.is_array() || cps.empty())
    bad("checkpoints", "must be a non-empty array of times");
  double prev = 0.0;
  for (const auto& v : cps) {
    const double t = number_field(v, "checkpoints");
    if (!(t > prev)) bad("checkpoints", "must be positive and increasing");
    c.checkpoints.push_back(t);
    prev = t;
  }

  c.replicas = count_field(required(j, "replicas"), "replicas", 2);
  c.cfd_replicas = j.contains("cfd_replicas")
                       ? count_field(j.at("cfd_replicas"), "cfd_replicas", 2)
                       : c.replicas;

  const auto names = string_list(required(j, "estimators"), "estimators");
  if (names.empty()) bad("estimators", "must name at least one estimator");
  for (const auto& n : names) {
    const auto id = parse_estimator(n);
    if (!id) bad("estimators", "names unknown estimator '" + n + "'");
    if (std::find(c.estimators.begin(), c.estimators.end(), *id) !=
        c.estimators.end())
      bad("estimators", "lists '" + n + "' twice");
    c.estimators.push_back(*id);
  }

  if (j.contains("theta")) {
    const json& th = j.at("theta");
    if (!th.is_object()) bad("theta", "must map parameter names to values");
    for (const auto& [k, v] : th.items())
      c.theta[k] = number_field(v, "theta." + k);
  }
  if (j.contains("initial_state")) {
    const json& x = j.at("initial_state");
    if (!x.is_array() || x.empty())
      bad("initial_state", "must be a non-empty array");
    std::vector<double> xs;
    for (const auto& v : x) xs.push_back(number_field(v, "initial_state"));
    c.initial_state = std::move(xs);
  }
  if (j.contains("epsilon")) {
    c.epsilon = number_field(j.at("epsilon"), "epsilon");
    if (!(c.epsilon > 0.0)) bad("epsilon", "must be positive");
  }
  if (j.contains("window")) {
    const double w = number_field(j.at("window"), "window");
    if (!(w > 0.0)) bad("window", "must be positive");
    if (w > c.checkpoints.front())
      bad("window", "must not exceed the first checkpoint");
    c.window = w;
  }
  for (auto id : c.estimators)
    if (needs_window(id) && !c.window)
      bad("window", std::string("is required by estimator ") +
                        std::string(estimator_name(id)));
  if (j.contains("steps")) c.steps = count_field(j.at("steps"), "steps", 1);
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned() &&
        !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      bad("seed", "must be a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("log_scale")) {
    if (!j.at("log_scale").is_boolean()) bad("log_scale", "must be a boolean");
    c.log_scale = j.at("log_scale").get<bool>();
  }
  if (j.contains("parameters"))
    c.parameters = string_list(j.at("parameters"), "parameters");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " +
                      e.what());
  }
  return parse_config(j, path.parent_path());
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = c.model;
  json th = json::object();
  for (const auto& [k, v] : c.theta) th[k] = v;
  j["theta"] = th;
  j["initial_state"] =
      c.initial_state ? json(*c.initial_state) : json(nullptr);
  j["checkpoints"] = c.checkpoints;
  j["replicas"] = c.replicas;
  j["cfd_replicas"] = c.cfd_replicas;
  json est = json::array();
  for (auto id : c.estimators) est.push_back(std::string(estimator_name(id)));
  j["estimators"] = est;
  j["epsilon"] = c.epsilon;
  j["window"] = c.window ? json(*c.window) : json(nullptr);
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["log_scale"] = c.log_scale;
  j["parameters"] = c.parameters;
  return j;
}

ModelSetup load_model(const ExperimentConfig& c) {
  if (auto entry = find_builtin_model(c.model)) return entry->setup;
  std::filesystem::path p(c.model);
  if (p.extension() != ".rxn")
    throw ConfigError("field 'model' names no builtin model and no .rxn file: '" +
                      c.model + "'");
  if (p.is_relative()) p = c.base_dir / p;
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open model file '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ModelDocument doc;
  try {
    doc = parse_model(ss.str());
  } catch (const ParseError& e) {
    throw ConfigError(p.string() + ":" + e.what());
  }
  return NetworkSetup{std::move(doc.network), std::move(doc.initial_state),
                      std::move(doc.observables)};
}

namespace {

std::vector<double> resolve_theta(const ParameterVector& params,
                                  const ExperimentConfig& c) {
  std::vector<double> theta(params.values().begin(), params.values().end());
  for (const auto& [name, v] : c.theta) {
    const auto k = params.index_of(name);
    if (!k) bad("theta", "names unknown parameter '" + name + "'");
    theta[*k] = v;
  }
  return theta;
}

std::vector<std::size_t> resolve_parameters(const ParameterVector& params,
                                            const ExperimentConfig& c) {
  std::vector<std::size_t> out;
  if (c.parameters.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k) out.push_back(k);
    return out;
  }
  for (const auto& name : c.parameters) {
    const auto k = params.index_of(name);
    if (!k) bad("parameters", "names unknown parameter '" + name + "'");
    out.push_back(*k);
  }
  return out;
}

template <class Setup>
void apply_initial_state(Setup& setup, const ExperimentConfig& c);

template <>
void apply_initial_state(NetworkSetup& s, const ExperimentConfig& c) {
  if (!c.initial_state) return;
  if (c.initial_state->size() != s.network.num_species())
    bad("initial_state", "has wrong length");
  State x;
  for (double v : *c.initial_state) {
    if (v < 0.0 || v != std::floor(v) || v > 1e15)
      bad("initial_state", "must hold nonnegative integer counts");
    x.push_back(static_cast<std::int64_t>(v));
  }
  s.initial_state = std::move(x);
}

template <>
void apply_initial_state(DiffusionSetup& s, const ExperimentConfig& c) {
  if (!c.initial_state) return;
  if (c.initial_state->size() != s.model.dimension())
    bad("initial_state", "has wrong length");
  s.initial_state = *c.initial_state;
}

std::size_t resolve_steps(const NetworkSetup&, const ExperimentConfig&) {
  return 0;
}

std::size_t resolve_steps(const DiffusionSetup& s, const ExperimentConfig& c) {
  if (c.steps) return c.steps;
  const double dt = s.horizon / static_cast<double>(s.steps);
  return static_cast<std::size_t>(std::llround(c.checkpoints.back() / dt));
}

const ParameterVector& parameters_of(const NetworkSetup& s) {
  return s.network.parameters();
}
const ParameterVector& parameters_of(const DiffusionSetup& s) {
  return s.model.parameters();
}

std::string describe(const NetworkSetup& s) {
  return "network: " + std::to_string(s.network.num_species()) +
         " species, " + std::to_string(s.network.num_reactions()) +
         " reactions, " + std::to_string(s.network.num_parameters()) +
         " parameters";
}
std::string describe(const DiffusionSetup& s) {
  return "diffusion: dimension " + std::to_string(s.model.dimension()) +
         ", noise dimension " + std::to_string(s.model.noise_dimension()) +
         ", " + std::to_string(s.model.num_parameters()) + " parameters";
}

std::vector<CoupledEnsemble> cfd_for(const NetworkSetup& s,
                                     std::span<const double> theta,
                                     std::size_t k, double eps,
                                     const EnsembleOptions& o) {
  return simulate_cfd_ensemble(s, theta, k, eps, o);
}
std::vector<CoupledEnsemble> cfd_for(const DiffusionSetup& s,
                                     std::span<const double> theta,
                                     std::size_t k, double eps,
                                     const EnsembleOptions& o) {
  return simulate_cfd_ensemble(s, theta, k, eps, o, Coupling::kCommon);
}

SensitivityReport lr_report(EstimatorId id, const Ensemble& e,
                            std::optional<double> window) {
  switch (id) {
    case EstimatorId::kI2: return lr_single(e, Centering::kNone);
    case EstimatorId::kI2bar: return lr_single(e, Centering::kPlugIn);
    case EstimatorId::kI3: return lr_ergodic(e, Centering::kNone);
    case EstimatorId::kI3bar: return lr_ergodic(e, Centering::kPlugIn);
    case EstimatorId::kI4: return lr_truncated(e, *window, Centering::kNone);
    case EstimatorId::kI4bar:
      return lr_truncated(e, *window, Centering::kPlugIn);
    case EstimatorId::kCov: return covariance_lr(e);
    default: break;
  }
  throw ArgumentError("not a likelihood-ratio estimator");
}

template <class Setup>
ExperimentResult run_with(Setup setup, const ExperimentConfig& c,
                          std::size_t workers) {
  ExperimentResult result;
  result.config = c;
  apply_initial_state(setup, c);
  const ParameterVector& params = parameters_of(setup);
  const std::vector<double> theta = resolve_theta(params, c);
  const auto fd_params = resolve_parameters(params, c);

  const bool any_lr = std::any_of(c.estimators.begin(), c.estimators.end(),
                                  [](auto id) { return !is_finite_difference(id); });
  const bool any_fd = std::any_of(c.estimators.begin(), c.estimators.end(),
                                  is_finite_difference);
  const bool any_window = std::any_of(c.estimators.begin(), c.estimators.end(),
                                      needs_window);

  EnsembleOptions opts;
  opts.model_id = c.model;
  opts.checkpoints = c.checkpoints;
  opts.seed = c.seed;
  opts.workers = workers;
  opts.steps = resolve_steps(setup, c);
  if (any_window) opts.window = c.window;

  // Reports echo every setting with defaults resolved.
  ExperimentConfig& resolved = result.config;
  for (std::size_t p = 0; p < params.size(); ++p)
    resolved.theta[params.name(p)] = theta[p];
  resolved.initial_state.emplace(setup.initial_state.begin(),
                                 setup.initial_state.end());
  resolved.steps = opts.steps;
  resolved.parameters.clear();
  for (std::size_t k : fd_params) resolved.parameters.push_back(params.name(k));

  auto& log = result.log;
  log.push_back("model " + c.model + " (" + describe(setup) + ")");
  log.push_back("seed " + std::to_string(c.seed));
  log.push_back("checkpoints " + join_numbers(c.checkpoints));
  if (opts.steps)
    log.push_back("euler steps " + std::to_string(opts.steps));
  log.push_back(std::string("reduction kernels ") +
                std::string(kernels::isa_name(kernels::active_isa())));

  std::vector<Ensemble> lr;
  std::size_t total = 0;
  if (any_lr) {
    opts.replicas = c.replicas;
    opts.domain = 0;
    lr = simulate_lr_ensemble(setup, theta, opts);
    total += c.replicas;
    log.push_back("lr pass: " + std::to_string(c.replicas) +
                  " trajectories shared by all likelihood-ratio estimators");
  }

  // per parameter, per checkpoint
  std::vector<std::vector<CoupledEnsemble>> fd;
  if (any_fd) {
    opts.replicas = c.cfd_replicas;
    opts.window.reset();
    for (std::size_t k : fd_params) {
      opts.domain = 1 + k;
      fd.push_back(cfd_for(setup, theta, k, c.epsilon, opts));
      total += 2 * c.cfd_replicas;
      log.push_back("cfd pass for " + params.name(k) + ": " +
                    std::to_string(2 * c.cfd_replicas) + " trajectories");
    }
  }
  log.push_back("trajectories total " + std::to_string(total));

  for (auto id : c.estimators) {
    std::vector<SensitivityReport> per_t;
    for (std::size_t t = 0; t < c.checkpoints.size(); ++t) {
      SensitivityReport r;
      if (is_finite_difference(id)) {
        std::vector<SensitivityReport> cols;
        for (const auto& per_param : fd)
          cols.push_back(id == EstimatorId::kI1 ? cfd_single(per_param[t])
                                                : cfd_ergodic(per_param[t]));
        r = merge_columns(cols);
      } else {
        r = lr_report(id, lr[t], c.window);
      }
      if (c.log_scale) r = log_rescale(r, theta);
      per_t.push_back(std::move(r));
    }
    log.push_back("estimator " + std::string(estimator_name(id)) + ": " +
                  std::to_string(per_t.size()) + " checkpoints");
    result.reports.emplace_back(id, std::move(per_t));
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                std::size_t workers) {
  ModelSetup setup = load_model(config);
  return std::visit(
      [&](auto& s) { return run_with(std::move(s), config, workers); }, setup);
}

json report_to_json(const SensitivityReport& r) {
  json j;
  j["T"] = r.final_time;
  j["replicas"] = r.replicas;
  j["observables"] = r.observable_names;
  j["parameters"] = r.parameter_names;
  j["estimate"] = matrix_json(r.estimate);
  j["standard_error"] = matrix_json(r.standard_error);
  j["normalized_variance"] = matrix_json(r.normalized_variance);
  if (r.fim) j["fim"] = matrix_json(*r.fim);
  if (r.observable_variance)
    j["observable_variance"] = matrix_json(*r.observable_variance);
  if (r.covariance) j["covariance"] = matrix_json(*r.covariance);
  if (r.screening_trace) j["screening_trace"] = *r.screening_trace;
  if (r.screening_parameter)
    j["screening_parameter"] = matrix_json(*r.screening_parameter);
  j["warnings"] = r.warnings;
  return j;
}

namespace {

struct Row {
  std::string estimator;
  double T;
  std::string observable, parameter;
  double estimate, se, nvar;

  auto key() const { return std::tie(estimator, T, observable, parameter); }
};

std::vector<Row> rows_of(EstimatorId id,
                         const std::vector<SensitivityReport>& reports) {
  std::vector<Row> rows;
  for (const auto& r : reports)
    for (Eigen::Index i = 0; i < r.estimate.rows(); ++i)
      for (Eigen::Index p = 0; p < r.estimate.cols(); ++p)
        rows.push_back({std::string(estimator_name(id)), r.final_time,
                        r.observable_names[i], r.parameter_names[p],
                        r.estimate(i, p), r.standard_error(i, p),
                        r.normalized_variance(i, p)});
  return rows;
}

std::string rows_csv(std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.key() < b.key(); });
  std::string out =
      "estimator,T,observable,parameter,estimate,standard_error,"
      "normalized_variance\n";
  for (const auto& r : rows)
    out += r.estimator + "," + format_number(r.T) + "," + r.observable + "," +
           r.parameter + "," + format_number(r.estimate) + "," +
           format_number(r.se) + "," + format_number(r.nvar) + "\n";
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << content;
}

}  // namespace

std::string plotdata_csv(const ExperimentResult& result) {
  std::vector<Row> rows;
  for (const auto& [id, reports] : result.reports) {
    auto r = rows_of(id, reports);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows_csv(std::move(rows));
}

void write_outputs(const ExperimentResult& result,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const json settings = config_to_json(result.config);
  for (const auto& [id, reports] : result.reports) {
    const std::string name(estimator_name(id));
    json j;
    j["estimator"] = name;
    j["settings"] = settings;
    j["results"] = json::array();
    for (const auto& r : reports) j["results"].push_back(report_to_json(r));
    write_file(out_dir / ("report_" + name + ".json"), j.dump(2) + "\n");
    write_file(out_dir / ("report_" + name + ".csv"),
               rows_csv(rows_of(id, reports)));
  }
  write_file(out_dir / "plotdata.csv", plotdata_csv(result));
  std::string log;
  for (const auto& line : result.log) log += line + "\n";
  write_file(out_dir / "run.log", log);
}

}  // namespace lrsens
