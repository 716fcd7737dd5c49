#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "wittenlab/potential.hpp"

using namespace wittenlab;
using testing::chain;
using testing::raised;

namespace {

// Central difference of `f` along axis i, step h.
template <class F>
double central(F&& f, Point x, std::size_t i, double h = 1e-4) {
  x[i] += h;
  const double up = f(x);
  x[i] -= 2 * h;
  return (up - f(x)) / (2 * h);
}

Point random_point(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Point x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("gaussian closed forms") {
  const auto lat = chain(3);
  const auto m = gaussian_potential(lat);
  const Point zero(3, 0.0);
  CHECK(m.value(zero) == 0.0);
  const Point x = random_point(3, 1);
  CHECK(m.hessian(x).isApprox(Eigen::MatrixXd::Identity(3, 3)));
  const std::size_t third[] = {0, 1, 2};
  CHECK(m.partial(x, third) == 0.0);
  const std::size_t diag3[] = {1, 1, 1};
  CHECK(m.partial(x, diag3) == 0.0);
  CHECK(m.laplacian(x) == doctest::Approx(3.0));
}

TEST_CASE("kac values at the origin") {
  const auto lat = chain(2);
  const auto m = kac_potential(lat, 0.05);
  const Point zero(2, 0.0);
  CHECK(m.value(zero) == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> grad(2);
  m.gradient(zero, grad);
  CHECK(grad[0] == 0.0);
  CHECK(grad[1] == 0.0);
  const auto h = m.hessian(zero);
  CHECK(h(0, 0) == doctest::Approx(0.95));
  CHECK(h(1, 1) == doctest::Approx(0.95));
  CHECK(h(0, 1) == doctest::Approx(-0.05));
  CHECK(h(1, 0) == doctest::Approx(-0.05));
  CHECK(raised([&] { kac_potential(lat, 0.0); }) == ErrorKind::invalid_parameter);
  CHECK(raised([&] { kac_potential(lat, -1.0); }) == ErrorKind::invalid_parameter);
}

TEST_CASE("kac derivatives match finite differences") {
  const auto lat = chain(3);
  const auto m = kac_potential(lat, 0.1);
  const Point x = random_point(3, 7);
  std::vector<double> grad(3);
  m.gradient(x, grad);
  const auto h = m.hessian(x);
  CHECK((h - h.transpose()).norm() == 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(grad[i] == doctest::Approx(central([&](const Point& p) { return m.value(p); }, x, i)).epsilon(1e-7));
    const std::size_t one[] = {i};
    CHECK(m.partial(x, one) == doctest::Approx(grad[i]));
    for (std::size_t j = 0; j < 3; ++j) {
      auto gj = [&](const Point& p) {
        std::vector<double> g(3);
        m.gradient(p, g);
        return g[j];
      };
      CHECK(h(i, j) == doctest::Approx(central(gj, x, i)).epsilon(1e-6));
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t ijk[] = {i, j, k};
        auto hij = [&](const Point& p) { return m.hessian(p)(i, j); };
        CHECK(m.partial(x, ijk) == doctest::Approx(central(hij, x, k)).epsilon(1e-5).scale(1e-6));
        const std::size_t ijkk[] = {i, j, k, k};
        auto third = [&](const Point& p) { return m.partial(p, ijk); };
        CHECK(m.partial(x, ijkk) == doctest::Approx(central(third, x, k)).epsilon(1e-5).scale(1e-6));
      }
    }
  }
  const std::size_t five[] = {0, 0, 0, 0, 0};
  CHECK(raised([&] { m.partial(x, five); }) == ErrorKind::unsupported_order);
}

TEST_CASE("delta energy agrees with two evaluations") {
  const auto m = kac_potential(chain(4), 0.05);
  Point x = random_point(4, 3);
  const double before = m.value(x);
  const double d = m.delta_energy(x, 2, 0.7);
  x[2] = 0.7;
  CHECK(d == doctest::Approx(m.value(x) - before).epsilon(1e-12));
}

TEST_CASE("tilting") {
  const auto lat = chain(2);
  const auto base = gaussian_potential(lat);
  const auto x1 = Observable::coordinate(lat, 0);
  const auto same = tilt_potential(base, x1, 0.0);
  const Point x = random_point(2, 11);
  CHECK(same.value(x) == doctest::Approx(base.value(x)));

  const auto tilted = tilt_potential(base, x1, 0.3);
  std::vector<double> grad(2);
  tilted.gradient(x, grad);
  CHECK(grad[0] == doctest::Approx(x[0] - 0.3));
  CHECK(grad[1] == doctest::Approx(x[1]));

  const auto kac = kac_potential(lat, 0.05);
  const auto bump = Observable::bump(lat, {0, 1}, {0.0, 0.0}, 1.0);
  const double T = tilt_bound(kac, bump, default_samples(2, 6.0));
  CHECK(T > 0.0);
  const auto kt = tilt_potential(kac, bump, 0.5 * T);
  CHECK((kt.hessian(x) - (kac.hessian(x) - 0.5 * T * bump.hessian(x))).norm() < 1e-12);
  CHECK(raised([&] { tilt_potential(kac, bump, 1.5 * T); }) == ErrorKind::convexity_risk);
  TiltOptions allow;
  allow.allow_outside_bound = true;
  CHECK(!tilt_potential(kac, bump, 1.5 * T, allow).warnings().empty());
}

TEST_CASE("convexity margin") {
  const auto lat = chain(2);
  const auto samples = default_samples(2, 6.0, 200);
  CHECK(convexity_margin(gaussian_potential(lat), unit_weight(*lat), samples) == doctest::Approx(1.0));
  const auto kac = kac_potential(lat, 0.05);
  CHECK(convexity_margin(kac, unit_weight(*lat), samples) == doctest::Approx(0.9));
  const auto w = exponential_weight(*lat, 0.3, make_subset(*lat, {0}));
  CHECK(convexity_margin(gaussian_potential(lat), w, samples) == doctest::Approx(1.0));

  const auto lat4 = chain(4);
  const double m4 = convexity_margin(kac_potential(lat4, 0.05), unit_weight(*lat4), default_samples(4, 6.0));
  CHECK(m4 > 0.0);
  CHECK(m4 < 1.0);
}

TEST_CASE("growth condition") {
  const auto lat = chain(2);
  const auto s = make_subset(*lat, {0});
  const std::vector<Point> origin = {Point(2, 0.0)};
  CHECK(growth_condition_report(gaussian_potential(lat), 2, 0.3, s, default_samples(2, 6.0, 50)) == 0.0);
  const auto kac = kac_potential(lat, 0.05);
  CHECK(growth_condition_report(kac, 2, 0.3, s, origin) == doctest::Approx(0.0).scale(1e-15));
  CHECK(growth_condition_report(kac, 2, 0.3, s, default_samples(2, 3.0, 50)) > 0.0);
  CHECK(raised([&] { growth_condition_report(kac, 4, 0.3, s, origin); }) == ErrorKind::unsupported_order);
}

TEST_CASE("observable partials") {
  const auto lat = chain(3);
  const auto b = Observable::bump(lat, {0, 2}, {0.5, -0.3}, 1.2);
  const Point x = random_point(3, 5);
  std::vector<double> grad(3);
  b.gradient(x, grad);
  CHECK(grad[1] == 0.0);
  for (std::size_t i : {std::size_t{0}, std::size_t{2}}) {
    CHECK(grad[i] == doctest::Approx(central([&](const Point& p) { return b.value(p); }, x, i)).epsilon(1e-7));
  }
  const auto sq = Observable::coordinate_square(lat, 1);
  CHECK(sq.hessian(x)(1, 1) == doctest::Approx(2.0));
  CHECK(Observable::linear(lat, {0, 1}, {1.0, 2.0}).is_affine());
  CHECK(!b.is_affine());
  CHECK(Observable::constant(lat, 3.0).plus_constant(1.0).value(x) == doctest::Approx(4.0));
  CHECK(raised([&] { Observable::linear(lat, {1, 1}, {1.0, 1.0}); }) == ErrorKind::invalid_input);
}

}
