#include "lrsens/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "lrsens/error.hpp"

namespace lrsens {

ParameterVector::ParameterVector(std::vector<std::string> names,
                                 std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (names_.size() != values_.size())
    throw ArgumentError("parameter names and values differ in length");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ArgumentError("empty parameter name");
    if (!seen.insert(n).second)
      throw ArgumentError("duplicate parameter name '" + n + "'");
  }
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw ArgumentError("parameter '" + names_[i] + "' is not finite");
}

std::optional<std::size_t> ParameterVector::index_of(
    std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

ParameterVector ParameterVector::with_value(std::size_t i, double v) const {
  auto values = values_;
  values.at(i) = v;
  return ParameterVector(names_, std::move(values));
}

ParameterVector ParameterVector::with_values(std::vector<double> values) const {
  return ParameterVector(names_, std::move(values));
}

__extension__ using Wide = unsigned __int128;

double binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < k) return 0.0;
  if (k == 0) return 1.0;
  if (k > n - k) k = n - k;
  // c * (n - i) is divisible by (i + 1) at every step.
  Wide c = 1;
  for (std::int64_t i = 0; i < k; ++i) {
    c = c * static_cast<Wide>(n - i);
    c /= static_cast<Wide>(i + 1);
  }
  return static_cast<double>(c);
}

namespace {

std::vector<std::size_t> referenced_parameters(const RateTerm& term) {
  if (const auto* ma = std::get_if<MassActionTerm>(&term)) return {ma->rate};
  const auto& mm = std::get<MichaelisMentenTerm>(term);
  return {mm.max_rate, mm.half_saturation};
}

double mass_action_factor(const Reaction& r, std::span<const std::int64_t> x) {
  double f = 1.0;
  for (const auto& sc : r.reactants) {
    const std::int64_t n = x[sc.species];
    if (n < sc.count) return 0.0;
    f *= sc.count == 1 ? static_cast<double>(n) : binomial(n, sc.count);
  }
  return f;
}

// A reaction cannot fire without its reactants, whatever its rate law.
bool reactants_available(const Reaction& r, std::span<const std::int64_t> x) {
  for (const auto& sc : r.reactants)
    if (x[sc.species] < sc.count) return false;
  return true;
}

[[noreturn]] void throw_mm_denominator(const Reaction& r) {
  throw DomainError("Michaelis-Menten denominator K + x vanishes in reaction '" +
                    r.name + "'");
}

void check_state(const ReactionNetwork& net, std::span<const std::int64_t> x) {
  if (x.size() != net.num_species())
    throw ArgumentError("state has " + std::to_string(x.size()) +
                        " entries, network has " +
                        std::to_string(net.num_species()) + " species");
  for (std::size_t s = 0; s < x.size(); ++s)
    if (x[s] < 0)
      throw DomainError("negative population for species '" +
                        net.species()[s] + "'");
}

void check_theta(const ReactionNetwork& net, std::span<const double> theta) {
  if (theta.size() != net.num_parameters())
    throw ArgumentError("parameter vector has wrong length");
}

}  // namespace

ReactionNetwork::ReactionNetwork(std::vector<std::string> species,
                                 std::vector<Reaction> reactions,
                                 ParameterVector parameters)
    : species_(std::move(species)),
      reactions_(std::move(reactions)),
      parameters_(std::move(parameters)) {
  std::set<std::string> seen;
  for (const auto& s : species_)
    if (!seen.insert(s).second)
      throw ArgumentError("duplicate species '" + s + "'");
  parameter_used_.assign(parameters_.size(), false);
  const std::size_t ns = species_.size();
  for (const auto& r : reactions_) {
    if (r.rate.empty())
      throw ArgumentError("reaction '" + r.name + "' has no rate terms");
    std::vector<std::int64_t> delta(ns, 0);
    for (const auto& sc : r.reactants) {
      if (sc.species >= ns)
        throw ArgumentError("reaction '" + r.name +
                            "' references an unknown species");
      if (sc.count <= 0)
        throw ArgumentError("reaction '" + r.name +
                            "' has a nonpositive stoichiometric coefficient");
      delta[sc.species] -= sc.count;
    }
    for (const auto& sc : r.products) {
      if (sc.species >= ns)
        throw ArgumentError("reaction '" + r.name +
                            "' references an unknown species");
      if (sc.count <= 0)
        throw ArgumentError("reaction '" + r.name +
                            "' has a nonpositive stoichiometric coefficient");
      delta[sc.species] += sc.count;
    }
    for (const auto& term : r.rate) {
      for (std::size_t p : referenced_parameters(term)) {
        if (p >= parameters_.size())
          throw ArgumentError("reaction '" + r.name +
                              "' references an unknown parameter");
        parameter_used_[p] = true;
      }
      if (const auto* mm = std::get_if<MichaelisMentenTerm>(&term)) {
        if (mm->substrate >= ns || (mm->modifier && *mm->modifier >= ns))
          throw ArgumentError("reaction '" + r.name +
                              "' references an unknown species");
      }
    }
    std::vector<std::pair<std::size_t, std::int64_t>> sparse;
    for (std::size_t s = 0; s < ns; ++s)
      if (delta[s] != 0) sparse.emplace_back(s, delta[s]);
    net_change_.push_back(std::move(sparse));
  }
  for (std::size_t i = 0; i < parameters_.size(); ++i)
    if (parameters_.value(i) < 0.0)
      throw DomainError("negative rate constant '" + parameters_.name(i) +
                        "'");
}

ReactionNetwork ReactionNetwork::with_parameters(
    ParameterVector parameters) const {
  if (parameters.size() != parameters_.size())
    throw ArgumentError("parameter vector has wrong length");
  return ReactionNetwork(species_, reactions_, std::move(parameters));
}

double ReactionNetwork::propensity(std::size_t j,
                                   std::span<const double> theta,
                                   std::span<const std::int64_t> x) const {
  const Reaction& r = reactions_[j];
  if (!reactants_available(r, x)) return 0.0;
  double a = 0.0;
  for (const auto& term : r.rate) {
    if (const auto* ma = std::get_if<MassActionTerm>(&term)) {
      a += theta[ma->rate] * mass_action_factor(r, x);
    } else {
      const auto& mm = std::get<MichaelisMentenTerm>(term);
      const double xa = static_cast<double>(x[mm.substrate]);
      const double den = theta[mm.half_saturation] + xa;
      if (den == 0.0) throw_mm_denominator(r);
      double v = theta[mm.max_rate] * xa / den;
      if (mm.modifier) v *= static_cast<double>(x[*mm.modifier]);
      a += v;
    }
  }
  if (a < 0.0)
    throw DomainError("negative propensity in reaction '" + r.name + "'");
  return a;
}

void ReactionNetwork::propensities(std::span<const double> theta,
                                   std::span<const std::int64_t> x,
                                   std::span<double> out) const {
  for (std::size_t j = 0; j < reactions_.size(); ++j)
    out[j] = propensity(j, theta, x);
}

void ReactionNetwork::add_propensity_gradient(std::size_t j,
                                              std::span<const double> theta,
                                              std::span<const std::int64_t> x,
                                              double scale,
                                              std::span<double> out) const {
  const Reaction& r = reactions_[j];
  if (!reactants_available(r, x)) return;
  for (const auto& term : r.rate) {
    if (const auto* ma = std::get_if<MassActionTerm>(&term)) {
      out[ma->rate] += scale * mass_action_factor(r, x);
    } else {
      const auto& mm = std::get<MichaelisMentenTerm>(term);
      const double xa = static_cast<double>(x[mm.substrate]);
      const double den = theta[mm.half_saturation] + xa;
      if (den == 0.0) throw_mm_denominator(r);
      const double mod =
          mm.modifier ? static_cast<double>(x[*mm.modifier]) : 1.0;
      out[mm.max_rate] += scale * mod * xa / den;
      out[mm.half_saturation] -=
          scale * theta[mm.max_rate] * mod * xa / (den * den);
    }
  }
}

std::vector<double> propensity(const ReactionNetwork& network,
                               std::span<const std::int64_t> state) {
  return propensity(network, network.parameters().values(), state);
}

std::vector<double> propensity(const ReactionNetwork& network,
                               std::span<const double> theta,
                               std::span<const std::int64_t> state) {
  check_state(network, state);
  check_theta(network, theta);
  std::vector<double> out(network.num_reactions());
  network.propensities(theta, state, out);
  return out;
}

Eigen::MatrixXd propensity_gradient(const ReactionNetwork& network,
                                    std::span<const std::int64_t> state) {
  return propensity_gradient(network, network.parameters().values(), state);
}

Eigen::MatrixXd propensity_gradient(const ReactionNetwork& network,
                                    std::span<const double> theta,
                                    std::span<const std::int64_t> state) {
  check_state(network, state);
  check_theta(network, theta);
  Eigen::MatrixXd g =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(network.num_reactions()),
                            static_cast<Eigen::Index>(network.num_parameters()));
  std::vector<double> row(network.num_parameters());
  for (std::size_t j = 0; j < network.num_reactions(); ++j) {
    std::fill(row.begin(), row.end(), 0.0);
    network.add_propensity_gradient(j, theta, state, 1.0, row);
    for (std::size_t p = 0; p < row.size(); ++p)
      g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) = row[p];
  }
  return g;
}

DiffusionModel::DiffusionModel(std::string name, std::size_t dimension,
                               std::size_t noise_dimension,
                               ParameterVector parameters, DriftFn drift,
                               DiffusionFn diffusion, DriftFn drift_gradient)
    : name_(std::move(name)),
      dimension_(dimension),
      noise_dimension_(noise_dimension),
      parameters_(std::move(parameters)),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      drift_gradient_(std::move(drift_gradient)) {
  if (dimension_ == 0 || noise_dimension_ == 0)
    throw ArgumentError("diffusion model needs positive dimensions");
  if (!drift_ || !diffusion_ || !drift_gradient_)
    throw ArgumentError("diffusion model callbacks must be set");
}

DiffusionModel DiffusionModel::with_parameters(
    ParameterVector parameters) const {
  if (parameters.size() != parameters_.size())
    throw ArgumentError("parameter vector has wrong length");
  DiffusionModel copy = *this;
  copy.parameters_ = std::move(parameters);
  return copy;
}

namespace {

void require_finite(std::span<const double> values, const char* what,
                    std::span<const double> state) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << what << " is not finite at state (";
      for (std::size_t i = 0; i < state.size(); ++i)
        os << (i ? ", " : "") << state[i];
      os << ")";
      throw NumericalError(os.str(), {state.begin(), state.end()});
    }
  }
}

void check_model_args(const DiffusionModel& m, std::span<const double> theta,
                      std::span<const double> x) {
  if (x.size() != m.dimension())
    throw ArgumentError("state dimension does not match the model");
  if (theta.size() != m.num_parameters())
    throw ArgumentError("parameter vector has wrong length");
}

}  // namespace

std::vector<double> drift_eval(const DiffusionModel& model,
                               std::span<const double> theta,
                               std::span<const double> state) {
  check_model_args(model, theta, state);
  std::vector<double> out(model.dimension());
  model.drift(theta, state, out);
  require_finite(out, "drift", state);
  return out;
}

RowMatrix diffusion_eval(const DiffusionModel& model,
                         std::span<const double> state) {
  if (state.size() != model.dimension())
    throw ArgumentError("state dimension does not match the model");
  RowMatrix out(static_cast<Eigen::Index>(model.dimension()),
                static_cast<Eigen::Index>(model.noise_dimension()));
  model.diffusion(state, {out.data(), static_cast<std::size_t>(out.size())});
  require_finite({out.data(), static_cast<std::size_t>(out.size())},
                 "diffusion", state);
  return out;
}

RowMatrix drift_gradient_eval(const DiffusionModel& model,
                              std::span<const double> theta,
                              std::span<const double> state) {
  check_model_args(model, theta, state);
  RowMatrix out(static_cast<Eigen::Index>(model.dimension()),
                static_cast<Eigen::Index>(model.num_parameters()));
  model.drift_gradient(theta, state,
                       {out.data(), static_cast<std::size_t>(out.size())});
  require_finite({out.data(), static_cast<std::size_t>(out.size())},
                 "drift gradient", state);
  return out;
}

ObservableSet ObservableSet::identity(
    const std::vector<std::string>& state_names) {
  ObservableSet o;
  o.names = state_names;
  const auto n = static_cast<Eigen::Index>(state_names.size());
  o.weights = RowMatrix::Identity(n, n);
  return o;
}

}  // namespace lrsens
