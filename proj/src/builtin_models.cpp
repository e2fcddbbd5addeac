#include "lrsens/model.hpp"

namespace lrsens {

DiffusionModel logistic_model(double growth, double capacity, double noise) {
  ParameterVector params({"nu", "K"}, {growth, capacity});
  auto drift = [](std::span<const double> th, std::span<const double> x,
                  std::span<double> out) {
    out[0] = th[0] * x[0] * (1.0 - x[0] / th[1]);
  };
  auto diffusion = [noise](std::span<const double> x, std::span<double> out) {
    out[0] = noise * x[0];
  };
  auto gradient = [](std::span<const double> th, std::span<const double> x,
                     std::span<double> out) {
    out[0] = x[0] * (1.0 - x[0] / th[1]);
    out[1] = th[0] * x[0] * x[0] / (th[1] * th[1]);
  };
  return DiffusionModel("logistic-sde", 1, 1, std::move(params), drift,
                        diffusion, gradient);
}

ReactionNetwork p53_network() {
  enum : std::size_t { kX, kY0, kY };
  enum : std::size_t { kBx, kAx, kAk, kK, kBy, kA0, kAy };
  ParameterVector params({"b_x", "a_x", "a_k", "k", "b_y", "a_0", "a_y"},
                         {90.0, 0.002, 1.7, 0.01, 1.1, 0.8, 0.8});
  std::vector<Reaction> reactions = {
      {"R1", {}, {{kX, 1}}, {MassActionTerm{kBx}}},
      {"R2",
       {{kX, 1}},
       {},
       {MassActionTerm{kAx}, MichaelisMentenTerm{kAk, kK, kX, kY}}},
      {"R3", {{kX, 1}}, {{kX, 1}, {kY0, 1}}, {MassActionTerm{kBy}}},
      {"R4", {{kY0, 1}}, {{kY, 1}}, {MassActionTerm{kA0}}},
      {"R5", {{kY, 1}}, {}, {MassActionTerm{kAy}}},
  };
  return ReactionNetwork({"x", "y0", "y"}, std::move(reactions),
                         std::move(params));
}

State p53_initial_state() { return {38, 53, 53}; }

ReactionNetwork birth_death_network(double birth, double death) {
  ParameterVector params({"b", "d"}, {birth, death});
  std::vector<Reaction> reactions = {
      {"birth", {}, {{0, 1}}, {MassActionTerm{0}}},
      {"death", {{0, 1}}, {}, {MassActionTerm{1}}},
  };
  return ReactionNetwork({"X"}, std::move(reactions), std::move(params));
}

State birth_death_initial_state() { return {10}; }

std::vector<CatalogEntry> builtin_models() {
  std::vector<CatalogEntry> out;
  {
    DiffusionSetup s{logistic_model(), {93.0}, ObservableSet::identity({"X"}),
                     12000, 60.0};
    out.push_back({"logistic-sde",
                   "logistic SDE with linear multiplicative noise; theta = "
                   "(nu, K) = (1, 100), mu = 0.1, X0 = 93",
                   std::move(s)});
  }
  {
    auto net = p53_network();
    auto obs = ObservableSet::identity(net.species());
    out.push_back({"p53-network",
                   "p53/Mdm2 oscillator; 3 species, 5 reactions, 7 parameters",
                   NetworkSetup{std::move(net), p53_initial_state(),
                                std::move(obs)}});
  }
  {
    auto net = birth_death_network();
    auto obs = ObservableSet::identity(net.species());
    out.push_back({"birth-death-network",
                   "immigration-death; b = 10, d = 1, stationary law "
                   "Poisson(b/d)",
                   NetworkSetup{std::move(net), birth_death_initial_state(),
                                std::move(obs)}});
  }
  return out;
}

std::optional<CatalogEntry> find_builtin_model(std::string_view id) {
  for (auto& e : builtin_models())
    if (e.id == id) return e;
  return std::nullopt;
}

}  // namespace lrsens
