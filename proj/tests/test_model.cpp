#include <cmath>
#include <random>

#include "doctest.h"
#include "lrsens/error.hpp"
#include "lrsens/model.hpp"

using namespace lrsens;

namespace {

ReactionNetwork dimerization(double k) {
  ParameterVector params({"k"}, {k});
  return ReactionNetwork({"A", "B"},
                         {{"dimer", {{0, 2}}, {{1, 1}}, {MassActionTerm{0}}}},
                         params);
}

}  // namespace

TEST_CASE("parameter vector validation") {
  CHECK_THROWS_AS(ParameterVector({"a", "b"}, {1.0}), ArgumentError);
  CHECK_THROWS_AS(ParameterVector({"a", "a"}, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(ParameterVector({""}, {1.0}), ArgumentError);
  CHECK_THROWS_AS(ParameterVector({"a"}, {NAN}), ArgumentError);
  ParameterVector p({"a", "b"}, {1.0, 2.0});
  CHECK(p.index_of("b") == 1u);
  CHECK_FALSE(p.index_of("c"));
  CHECK(p.with_value(0, 5.0).value(0) == 5.0);
}

TEST_CASE("network validation") {
  ParameterVector p({"k"}, {1.0});
  CHECK_THROWS_AS(
      ReactionNetwork({"A"}, {{"r", {{3, 1}}, {}, {MassActionTerm{0}}}}, p),
      ArgumentError);
  CHECK_THROWS_AS(
      ReactionNetwork({"A"}, {{"r", {{0, 1}}, {}, {MassActionTerm{4}}}}, p),
      ArgumentError);
  CHECK_THROWS_AS(ReactionNetwork({"A"}, {{"r", {{0, 1}}, {}, {}}}, p),
                  ArgumentError);
  CHECK_THROWS_AS(ReactionNetwork({"A"}, {{"r", {{0, 1}}, {}, {MassActionTerm{0}}}},
                                  ParameterVector({"k"}, {-1.0})),
                  DomainError);
}

TEST_CASE("mass-action propensity uses binomial coefficients") {
  const auto net = dimerization(2.0);
  CHECK(propensity(net, State{4, 0})[0] == 12.0);
  CHECK(propensity(net, State{1, 0})[0] == 0.0);
  CHECK(propensity(net, State{0, 0})[0] == 0.0);
  CHECK_THROWS_AS(propensity(net, State{-1, 0}), DomainError);
  CHECK(binomial(10, 3) == 120.0);
  CHECK(binomial(3, 5) == 0.0);
  CHECK(binomial(1000000, 2) == 499999500000.0);
}

TEST_CASE("p53 propensities") {
  const auto net = p53_network();
  CHECK(net.num_species() == 3);
  CHECK(net.num_reactions() == 5);
  CHECK(net.num_parameters() == 7);
  const std::vector<double> expected = {90, 0.002, 1.7, 0.01, 1.1, 0.8, 0.8};
  const auto v = net.parameters().values();
  CHECK(std::vector<double>(v.begin(), v.end()) == expected);

  // x = 10, y0 = 3, y = 5
  const State x{10, 3, 5};
  const auto a = propensity(net, x);
  CHECK(a[0] == 90.0);
  // 0.002 * 10 + 1.7 * 5 * 10 / 10.01 = 0.02 + 85 / 10.01
  CHECK(a[1] == doctest::Approx(8.511508491508492).epsilon(1e-14));
  CHECK(a[2] == doctest::Approx(11.0));
  CHECK(a[3] == doctest::Approx(2.4));
  CHECK(a[4] == doctest::Approx(4.0));
}

TEST_CASE("p53 R2 gradient matches the closed form") {
  const auto net = p53_network();
  const State x{10, 3, 5};
  const auto g = propensity_gradient(net, x);
  const double xv = 10, y = 5, k = 0.01, ak = 1.7;
  CHECK(g(1, 0) == 0.0);
  CHECK(g(1, 1) == doctest::Approx(xv));
  CHECK(g(1, 2) == doctest::Approx(xv * y / (xv + k)));
  CHECK(g(1, 3) == doctest::Approx(-ak * xv * y / ((xv + k) * (xv + k))));
  for (int p = 4; p < 7; ++p) CHECK(g(1, p) == 0.0);
}

TEST_CASE("gradient columns vanish for unreferenced parameters") {
  const auto net = p53_network();
  const auto g = propensity_gradient(net, State{20, 30, 40});
  for (Eigen::Index j = 0; j < g.rows(); ++j)
    for (Eigen::Index p = 0; p < g.cols(); ++p) {
      bool referenced = false;
      for (const auto& term : net.reactions()[j].rate) {
        if (auto* ma = std::get_if<MassActionTerm>(&term))
          referenced = referenced || ma->rate == std::size_t(p);
        else {
          const auto& mm = std::get<MichaelisMentenTerm>(term);
          referenced = referenced || mm.max_rate == std::size_t(p) ||
                       mm.half_saturation == std::size_t(p);
        }
      }
      if (!referenced) CHECK(g(j, p) == 0.0);
    }
}

TEST_CASE("mass-action homogeneity: k da/dk == a exactly") {
  const auto net = birth_death_network(3.7, 0.9);
  for (std::int64_t n : {0, 1, 5, 17, 1000}) {
    const State x{n};
    const auto a = propensity(net, x);
    const auto g = propensity_gradient(net, x);
    CHECK(3.7 * g(0, 0) == a[0]);
    CHECK(0.9 * g(1, 1) == a[1]);
  }
}

TEST_CASE("propensity gradient matches central differences") {
  const auto net = p53_network();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pop(0, 200);
  const auto base = net.parameters().values();
  const std::vector<double> theta(base.begin(), base.end());
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const State x{pop(rng), pop(rng), pop(rng)};
    const auto g = propensity_gradient(net, theta, x);
    for (std::size_t p = 0; p < theta.size(); ++p) {
      auto up = theta, dn = theta;
      const double step = h * std::max(1.0, theta[p]);
      up[p] += step;
      dn[p] -= step;
      if (dn[p] < 0.0) continue;
      const auto au = propensity(net, up, x);
      const auto ad = propensity(net, dn, x);
      for (std::size_t j = 0; j < net.num_reactions(); ++j) {
        const double fd = (au[j] - ad[j]) / (2 * step);
        CHECK(g(j, p) == doctest::Approx(fd).epsilon(1e-6).scale(1e-9));
      }
    }
  }
}

TEST_CASE("Michaelis-Menten vanishing denominator is a domain error") {
  ParameterVector p({"V", "K"}, {1.0, 0.0});
  ReactionNetwork net(
      {"S"}, {{"mm", {}, {{0, 1}}, {MichaelisMentenTerm{0, 1, 0, std::nullopt}}}},
      p);
  CHECK_THROWS_AS(propensity(net, State{0}), DomainError);
  CHECK(propensity(net, State{2})[0] == doctest::Approx(1.0));
}

TEST_CASE("logistic drift, diffusion and gradient") {
  const auto m = logistic_model();
  const std::vector<double> th = {1.0, 100.0};
  const std::vector<double> x = {93.0};
  CHECK(drift_eval(m, th, x)[0] == doctest::Approx(6.51));
  CHECK(diffusion_eval(m, x)(0, 0) == doctest::Approx(9.3));
  const std::vector<double> atk = {100.0};
  CHECK(drift_gradient_eval(m, th, atk)(0, 0) == 0.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 200.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> s = {u(rng)};
    const auto g = drift_gradient_eval(m, th, s);
    for (std::size_t p = 0; p < 2; ++p) {
      auto up = th, dn = th;
      const double h = 1e-6 * th[p];
      up[p] += h;
      dn[p] -= h;
      const double fd =
          (drift_eval(m, up, s)[0] - drift_eval(m, dn, s)[0]) / (2 * h);
      CHECK(g(0, static_cast<Eigen::Index>(p)) ==
            doctest::Approx(fd).epsilon(1e-6).scale(1e-9));
    }
  }
}

TEST_CASE("non-finite model output raises a numerical error with the state") {
  const auto m = logistic_model();
  const std::vector<double> th = {1.0, 0.0};
  const std::vector<double> x = {5.0};
  try {
    drift_eval(m, th, x);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.state() == x);
  }
}

TEST_CASE("logistic stationary mean and its nu-sensitivity by quadrature") {
  // Stationary density ~ x^{2 nu / mu^2 - 2} exp(-2 nu x / (mu^2 K)).
  auto mean = [](double nu) {
    const double mu = 0.1, K = 100.0;
    const double a = 2 * nu / (mu * mu) - 2, b = 2 * nu / (mu * mu * K);
    double z = 0, m = 0;
    const double h = 0.01;
    for (double x = h / 2; x < 400.0; x += h) {
      const double w = std::exp(a * std::log(x) - b * x - (a * std::log(99.0) - b * 99.0));
      z += w;
      m += w * x;
    }
    return m / z;
  };
  CHECK(mean(1.0) == doctest::Approx(99.5).epsilon(1e-6));
  const double h = 1e-3;
  CHECK((mean(1.0 + h) - mean(1.0 - h)) / (2 * h) ==
        doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("builtin catalog") {
  const auto all = builtin_models();
  REQUIRE(all.size() == 3);
  CHECK(find_builtin_model("logistic-sde"));
  CHECK(find_builtin_model("p53-network"));
  CHECK(find_builtin_model("birth-death-network"));
  CHECK_FALSE(find_builtin_model("egfr"));
  const auto bd = birth_death_network();
  CHECK(propensity(bd, State{7}) == std::vector<double>{10.0, 7.0});
}
