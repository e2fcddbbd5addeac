#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace lrsens {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Population vector of a reaction network.
using State = std::vector<std::int64_t>;

/// Named, position-indexed model parameters. Estimators work on dense
/// gradients, so position is the primary key; names exist for I/O.
class ParameterVector {
 public:
  ParameterVector() = default;
  /// Throws ArgumentError on length mismatch, duplicate or empty names, or
  /// non-finite values.
  ParameterVector(std::vector<std::string> names, std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }
  double value(std::size_t i) const { return values_.at(i); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Copy with entry `i` replaced.
  ParameterVector with_value(std::size_t i, double v) const;
  ParameterVector with_values(std::vector<double> values) const;

  friend bool operator==(const ParameterVector&,
                         const ParameterVector&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

struct SpeciesCount {
  std::size_t species = 0;
  std::int64_t count = 1;

  friend bool operator==(const SpeciesCount&, const SpeciesCount&) = default;
};

/// k * prod_s C(x_s, alpha_s) over the reaction's reactants.
struct MassActionTerm {
  std::size_t rate = 0;

  friend bool operator==(const MassActionTerm&,
                         const MassActionTerm&) = default;
};

/// V * x_A / (K + x_A), optionally multiplied by a modifier population x_M
/// (enzyme-mediated degradation such as Mdm2-driven p53 decay).
struct MichaelisMentenTerm {
  std::size_t max_rate = 0;
  std::size_t half_saturation = 0;
  std::size_t substrate = 0;
  std::optional<std::size_t> modifier;

  friend bool operator==(const MichaelisMentenTerm&,
                         const MichaelisMentenTerm&) = default;
};

using RateTerm = std::variant<MassActionTerm, MichaelisMentenTerm>;

/// A reaction's propensity is the sum of its rate terms.
struct Reaction {
  std::string name;
  std::vector<SpeciesCount> reactants;
  std::vector<SpeciesCount> products;
  std::vector<RateTerm> rate;

  friend bool operator==(const Reaction&, const Reaction&) = default;
};

/// Immutable reaction network. Safe to share between simulation threads.
class ReactionNetwork {
 public:
  ReactionNetwork() = default;
  /// Validates species/parameter references; throws ArgumentError.
  ReactionNetwork(std::vector<std::string> species,
                  std::vector<Reaction> reactions, ParameterVector parameters);

  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const ParameterVector& parameters() const { return parameters_; }
  std::size_t num_species() const { return species_.size(); }
  std::size_t num_reactions() const { return reactions_.size(); }
  std::size_t num_parameters() const { return parameters_.size(); }

  /// Sparse net state change of reaction j (products - reactants).
  const std::vector<std::pair<std::size_t, std::int64_t>>& net_change(
      std::size_t j) const {
    return net_change_[j];
  }

  /// True if any rate term reads parameter p.
  bool parameter_used(std::size_t p) const { return parameter_used_.at(p); }

  ReactionNetwork with_parameters(ParameterVector parameters) const;

  // Unchecked hot-path evaluation: the caller guarantees sizes and a
  // nonnegative state. Throws DomainError for a vanishing Michaelis-Menten
  // denominator or a negative result.
  double propensity(std::size_t j, std::span<const double> theta,
                    std::span<const std::int64_t> x) const;
  void propensities(std::span<const double> theta,
                    std::span<const std::int64_t> x,
                    std::span<double> out) const;
  /// out[p] += scale * d a_j / d theta_p for every parameter read by j.
  void add_propensity_gradient(std::size_t j, std::span<const double> theta,
                               std::span<const std::int64_t> x, double scale,
                               std::span<double> out) const;

  friend bool operator==(const ReactionNetwork& a, const ReactionNetwork& b) {
    return a.species_ == b.species_ && a.reactions_ == b.reactions_ &&
           a.parameters_ == b.parameters_;
  }

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  ParameterVector parameters_;
  std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> net_change_;
  std::vector<bool> parameter_used_;
};

/// C(n, k) computed exactly in integer arithmetic; 0 when n < k.
double binomial(std::int64_t n, std::int64_t k);

/// Propensities a_j(x) at the network's own parameters. Throws DomainError
/// for a negative population.
std::vector<double> propensity(const ReactionNetwork& network,
                               std::span<const std::int64_t> state);
std::vector<double> propensity(const ReactionNetwork& network,
                               std::span<const double> theta,
                               std::span<const std::int64_t> state);

/// reactions x parameters matrix of d a_j / d theta_p.
Eigen::MatrixXd propensity_gradient(const ReactionNetwork& network,
                                    std::span<const std::int64_t> state);
Eigen::MatrixXd propensity_gradient(const ReactionNetwork& network,
                                    std::span<const double> theta,
                                    std::span<const std::int64_t> state);

/// SDE dX = a(theta, X) dt + sigma(X) dB with X in R^N and B in R^d.
/// Matrices are passed as row-major flat spans: sigma is N x d, the drift
/// gradient N x P.
class DiffusionModel {
 public:
  using DriftFn = std::function<void(std::span<const double> theta,
                                     std::span<const double> x,
                                     std::span<double> out)>;
  using DiffusionFn =
      std::function<void(std::span<const double> x, std::span<double> out)>;

  DiffusionModel(std::string name, std::size_t dimension,
                 std::size_t noise_dimension, ParameterVector parameters,
                 DriftFn drift, DiffusionFn diffusion, DriftFn drift_gradient);

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t noise_dimension() const { return noise_dimension_; }
  std::size_t num_parameters() const { return parameters_.size(); }
  const ParameterVector& parameters() const { return parameters_; }
  DiffusionModel with_parameters(ParameterVector parameters) const;

  void drift(std::span<const double> theta, std::span<const double> x,
             std::span<double> out) const {
    drift_(theta, x, out);
  }
  void diffusion(std::span<const double> x, std::span<double> out) const {
    diffusion_(x, out);
  }
  void drift_gradient(std::span<const double> theta, std::span<const double> x,
                      std::span<double> out) const {
    drift_gradient_(theta, x, out);
  }

 private:
  std::string name_;
  std::size_t dimension_;
  std::size_t noise_dimension_;
  ParameterVector parameters_;
  DriftFn drift_;
  DiffusionFn diffusion_;
  DriftFn drift_gradient_;
};

// Checked evaluations; non-finite output raises NumericalError with the state.
std::vector<double> drift_eval(const DiffusionModel& model,
                               std::span<const double> theta,
                               std::span<const double> state);
RowMatrix diffusion_eval(const DiffusionModel& model,
                         std::span<const double> state);
RowMatrix drift_gradient_eval(const DiffusionModel& model,
                              std::span<const double> theta,
                              std::span<const double> state);

/// Linear observables f(x) = C x over a model state. The default is the
/// identity, i.e. the full state vector.
struct ObservableSet {
  std::vector<std::string> names;
  RowMatrix weights;  // m x N

  static ObservableSet identity(const std::vector<std::string>& state_names);
  std::size_t size() const { return names.size(); }

  template <class T>
  void apply(std::span<const T> x, std::span<double> out) const {
    for (Eigen::Index i = 0; i < weights.rows(); ++i) {
      double acc = 0.0;
      for (Eigen::Index s = 0; s < weights.cols(); ++s)
        acc += weights(i, s) * static_cast<double>(x[s]);
      out[i] = acc;
    }
  }

  friend bool operator==(const ObservableSet& a, const ObservableSet& b) {
    return a.names == b.names && a.weights == b.weights;
  }
};

// Built-in models.

/// dX = nu X (1 - X/K) dt + mu X dB. theta = (nu, K); the noise level mu is
/// a structural constant because the score requires sigma independent of
/// theta.
DiffusionModel logistic_model(double growth = 1.0, double capacity = 100.0,
                              double noise = 0.1);

/// Simplified p53 / Mdm2 oscillator: species (x, y0, y) = (p53,
/// Mdm2-precursor, Mdm2), parameters (b_x, a_x, a_k, k, b_y, a_0, a_y).
ReactionNetwork p53_network();
/// Near the deterministic fixed point (38, 53, 53).
State p53_initial_state();

/// Immigration-death: 0 -> X at rate b, X -> 0 at rate d X.
ReactionNetwork birth_death_network(double birth = 10.0, double death = 1.0);
/// Starts at the stationary mean b/d.
State birth_death_initial_state();

struct NetworkSetup {
  ReactionNetwork network;
  State initial_state;
  ObservableSet observables;
};

struct DiffusionSetup {
  DiffusionModel model;
  std::vector<double> initial_state;
  ObservableSet observables;
  /// Default Euler step count over the default horizon.
  std::size_t steps = 0;
  double horizon = 0.0;
};

using ModelSetup = std::variant<NetworkSetup, DiffusionSetup>;

struct CatalogEntry {
  std::string id;
  std::string description;
  ModelSetup setup;
};

/// logistic-sde, p53-network, birth-death-network.
std::vector<CatalogEntry> builtin_models();
std::optional<CatalogEntry> find_builtin_model(std::string_view id);

}  // namespace lrsens
