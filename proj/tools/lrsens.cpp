// Batch runner for likelihood-ratio sensitivity experiments.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "lrsens/error.hpp"
#include "lrsens/experiment.hpp"
#include "lrsens/netparse.hpp"

namespace {

std::size_t default_workers() {
  if (const char* env = std::getenv("LRSENS_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid LRSENS_WORKERS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run_command(const std::string& config_path,
                const std::optional<std::uint64_t>& seed,
                std::size_t workers, const std::string& out_dir) {
  auto config = lrsens::load_config(config_path);
  if (seed) config.seed = *seed;
  const auto result = lrsens::run_experiment(config, workers);
  lrsens::write_outputs(result, out_dir);
  for (const auto& line : result.log) std::cout << line << "\n";
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

int parse_command(const std::string& path, bool canonical) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    return 1;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const auto doc = lrsens::parse_model(ss.str());
    if (canonical) {
      std::cout << lrsens::serialize_model(doc);
    } else {
      std::cout << path << ": ok, " << doc.network.num_species()
                << " species, " << doc.network.num_reactions()
                << " reactions, " << doc.network.num_parameters()
                << " parameters\n";
    }
    return 0;
  } catch (const lrsens::ParseError& e) {
    std::cerr << path << ":" << e.what() << "\n";
    return 1;
  }
}

int list_command() {
  for (const auto& entry : lrsens::builtin_models())
    std::cout << entry.id << "\t" << entry.description << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-ratio sensitivity analysis of stochastic dynamics"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::size_t workers = default_workers();
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--workers", workers,
                  "worker threads (default: LRSENS_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory");

  auto* parse = app.add_subcommand("parse", "validate a .rxn model file");
  std::string rxn_path;
  bool canonical = false;
  parse->add_option("file", rxn_path, "model file")->required();
  parse->add_flag("--canonical", canonical, "print the canonical form");

  auto* list = app.add_subcommand("list-models", "list builtin models");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, seed, workers, out_dir);
    if (*parse) return parse_command(rxn_path, canonical);
    if (*list) return list_command();
  } catch (const lrsens::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
