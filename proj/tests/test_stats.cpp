#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "lrsens/error.hpp"
#include "lrsens/model.hpp"
#include "lrsens/simulate.hpp"
#include "lrsens/stats.hpp"

using namespace lrsens;

namespace {

std::vector<double> ar1(double phi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(n);
  double v = z(rng) / std::sqrt(1 - phi * phi);
  for (auto& s : x) {
    s = v;
    v = phi * v + z(rng);
  }
  return x;
}

// Midpoint rule on [0, upper].
template <class F>
double integrate(F f, double upper) {
  const std::size_t n = 200000;
  const double h = upper / n;
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += f((i + 0.5) * h);
  return acc * h;
}

}  // namespace

TEST_CASE("normalized variance") {
  const std::vector<double> c(10, 3.0);
  CHECK(normalized_variance(c) == 0.0);
  CHECK_THROWS_AS(normalized_variance(std::vector<double>{1.0}), ArgumentError);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(100000);
  for (auto& x : v) x = z(rng);
  CHECK(normalized_variance(v) == doctest::Approx(1.0).epsilon(0.03));
  const auto m = mean_and_se(v);
  CHECK(m.standard_error == doctest::Approx(m.standard_deviation / std::sqrt(1e5)));
  CHECK(std::abs(m.mean) <= 3 * m.standard_error);
}

TEST_CASE("acf of an AR(1) process") {
  const auto x = ar1(0.9, 1000000, 2);
  const auto r = acf(x, 20);
  CHECK(r[0] == 1.0);
  for (std::size_t l = 0; l <= 20; ++l)
    CHECK(std::abs(r[l] - std::pow(0.9, double(l))) <= 0.02);
}

TEST_CASE("acf of white noise stays inside the band") {
  const auto x = ar1(0.0, 20000, 3);
  const auto r = acf(x, 200);
  const double band = 3.0 / std::sqrt(20000.0);
  std::size_t outside = 0;
  for (std::size_t l = 1; l <= 200; ++l) outside += std::abs(r[l]) > band;
  CHECK(outside <= 4);
  const auto d = decorrelation_time(r, 1.0, x.size());
  CHECK_FALSE(d.low_confidence);
  CHECK(d.lag <= 2);
  CHECK(d.time == 3.0 * double(d.lag));
}

TEST_CASE("acf is invariant under affine maps") {
  const auto x = ar1(0.5, 5000, 4);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = -3.0 * x[i] + 17.0;
  const auto a = acf(x, 30), b = acf(y, 30);
  for (std::size_t l = 0; l <= 30; ++l) CHECK(a[l] == doctest::Approx(b[l]).epsilon(1e-12));
}

TEST_CASE("acf errors") {
  const std::vector<double> c(100, 2.0);
  CHECK_THROWS_AS(acf(c, 10), EstimationError);
  const std::vector<double> s = {1, 2, 3};
  CHECK_THROWS_AS(acf(s, 3), ArgumentError);
}

TEST_CASE("decorrelation time of an AR(1) process") {
  const std::size_t n = 100000;
  const auto x = ar1(0.9, n, 5);
  const auto r = acf(x, 400);
  const auto d = decorrelation_time(r, 1.0, n);
  const double band = 3.0 / std::sqrt(double(n));
  const double closed = 3.0 * (-1.0 / std::log(0.9)) * std::log(1.0 / band);
  CHECK(d.time >= closed / 2);
  CHECK(d.time <= closed * 2);

  DecorrelationOptions o;
  double previous = 0;
  for (double f : {1.0, 2.0, 3.0, 5.0}) {
    o.safety_factor = f;
    const auto e = decorrelation_time(r, 1.0, n, o);
    CHECK(e.time > previous);
    CHECK(e.lag == d.lag);
    previous = e.time;
  }
}

TEST_CASE("an ACF that never settles has no estimate") {
  std::vector<double> rho(100, 0.9);
  rho[0] = 1.0;
  CHECK_THROWS_AS(decorrelation_time(rho, 1.0, 1000), EstimationError);
}

TEST_CASE("oscillating p53 ACF over a short window is flagged") {
  const auto net = p53_network();
  const auto v = net.parameters().values();
  const std::vector<double> th(v.begin(), v.end());
  const double T = 200.0, step = T / 2048;
  RngStream rng(6, {});
  const auto traj = ssa_path(net, th, p53_initial_state(), T, rng);
  const auto s = sample_on_grid(net, traj, 1, step);
  CHECK(s.size() == 2049);
  const auto d = decorrelation_time(acf(s, 1000), step, s.size());
  CHECK(d.low_confidence);
}

TEST_CASE("sample_on_grid reads the right-continuous state") {
  const auto net = birth_death_network();
  const JumpTrajectory t{State{2}, {{1.0, 0}, {2.5, 1}}, 3.0};
  CHECK(sample_on_grid(net, t, 0, 1.0) == std::vector<double>{2, 3, 3, 2});
}

TEST_CASE("iid variance oracle") {
  const auto zero = iid_variance_oracle({0, 0, 0, 1, 0}, 10.0);
  CHECK(zero.single == 0.0);
  CHECK(zero.ergodic == 0.0);
  CHECK(zero.centered_raw == 0.0);
  CHECK(zero.centered_central == 0.0);

  // Exponential(1) moments with f(x) = x, w(x) = 1 - x, by quadrature.
  auto pdf = [](double x) { return std::exp(-x); };
  IidMoments m;
  m.mean_f = integrate([&](double x) { return x * pdf(x); }, 60.0);
  m.mean_f2 = integrate([&](double x) { return x * x * pdf(x); }, 60.0);
  m.mean_w = integrate([&](double x) { return (1 - x) * pdf(x); }, 60.0);
  m.mean_w2 = integrate([&](double x) { return (1 - x) * (1 - x) * pdf(x); }, 60.0);
  m.mean_fw = integrate([&](double x) { return x * (1 - x) * pdf(x); }, 60.0);
  CHECK(m.mean_f == doctest::Approx(1.0));
  CHECK(m.mean_f2 == doctest::Approx(2.0));
  CHECK(m.mean_w2 == doctest::Approx(1.0));
  CHECK(m.mean_fw == doctest::Approx(-1.0));
  CHECK(std::abs(m.mean_w) < 1e-8);

  const auto p = iid_variance_oracle({1, 2, 0, 1, -1}, 100.0);
  CHECK(p.single == doctest::Approx(200.0));
  CHECK(p.ergodic == doctest::Approx(100.0));
  CHECK(p.centered_raw == doctest::Approx(4.0));
  CHECK(p.centered_central == doctest::Approx(3.0));
  CHECK(p.centered_exact == doctest::Approx(2.0));
  CHECK(select_reading(p, 3.9) == 'a');
  CHECK(select_reading(p, 2.9) == 'b');
}

TEST_CASE("linear fit") {
  const std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
  const auto f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK_THROWS_AS(linear_fit(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  ArgumentError);
  CHECK_THROWS_AS(linear_fit(std::vector<double>{1.0, 1.0},
                             std::vector<double>{1.0, 2.0}),
                  ArgumentError);
}
