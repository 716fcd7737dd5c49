#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "wittenlab/oracle.hpp"

using namespace wittenlab;
using testing::chain;
using testing::raised;

namespace {

double relative_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0, n = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d += (a[k] - b[k]) * (a[k] - b[k]);
    n += b[k] * b[k];
  }
  return std::sqrt(d / n);
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("direct one-form solve") {
  const auto lat = chain(2);
  const WittenSystem g(build_grid(lat, 6.0, 17), gaussian_potential(lat));
  SolverConfig cfg;
  cfg.rel_tolerance = 1e-12;
  const auto e1 = g.weighted_gradient(Observable::coordinate(lat, 0));
  CHECK(relative_distance(g.solve_w1(e1, cfg).first.values, dense_solve_w1(g, e1).values) < 1e-10);

  const WittenSystem k(build_grid(lat, 6.0, 17), kac_potential(lat, 0.05));
  cfg.rel_tolerance = 1e-8;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 5; ++trial) {
    OneFormField rhs(k.grid());
    for (auto& v : rhs.values) v = normal(rng);
    const auto dense = dense_solve_w1(k, rhs);
    const auto [iter, rep] = k.solve_w1(rhs, cfg);
    CHECK(rep.converged);
    CHECK(relative_distance(iter.values, dense.values) <= 10 * cfg.rel_tolerance);
  }

  const WittenSystem big(build_grid(lat, 6.0, 257), gaussian_potential(lat));
  CHECK(raised([&] { dense_solve_w1(big, OneFormField(big.grid())); }) == ErrorKind::resource);
  const WittenSystem mid(build_grid(lat, 6.0, 65), gaussian_potential(lat));
  CHECK(raised([&] { dense_w1_lowest_eigenvalue(mid); }) == ErrorKind::resource);
}

TEST_CASE("lowest eigenvalue of the assembled operator") {
  const auto lat = chain(2);
  const WittenSystem g(build_grid(lat, 6.0, 33), gaussian_potential(lat));
  CHECK(dense_w1_lowest_eigenvalue(g) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("finite-difference derivatives of the log partition") {
  const auto lat = chain(2);
  const auto grid = build_grid(lat, 6.0, 65);
  const auto g = make_perturbed_system(grid, gaussian_potential(lat), Observable::coordinate(lat, 0), 0.0);
  CHECK(fd_theta_derivative(g, 2).value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(fd_theta_derivative(g, 3).value) < 1e-6);
  CHECK(std::abs(fd_theta_derivative(g, 1).value) < 1e-6);
  CHECK(raised([&] { fd_theta_derivative(g, 5); }) == ErrorKind::unsupported_order);
  CHECK(raised([&] { fd_theta_derivative(g, 2, 0.0); }) == ErrorKind::invalid_parameter);
  const auto edge = retilt(g, 0.99);
  CHECK(raised([&] { fd_theta_derivative(edge, 2, 0.05); }) == ErrorKind::window);

  const auto k = make_perturbed_system(grid, kac_potential(lat, 0.05), Observable::linear(lat, {0, 1}, {1.0, 1.0}), 0.0);
  const auto coarse = fd_theta_derivative(k, 2, 2e-2);
  const auto fine = fd_theta_derivative(k, 2, 1e-2);
  CHECK(coarse.value > 2.0);
  CHECK(std::abs(coarse.value - fine.value) <= 4 * coarse.error_estimate + 1e-12);
}

TEST_CASE("difference quotient of v") {
  const auto lat = chain(2);
  const auto grid = build_grid(lat, 6.0, 33);
  SolverConfig cfg;
  cfg.rel_tolerance = 1e-10;
  const auto g = make_perturbed_system(grid, gaussian_potential(lat), Observable::coordinate(lat, 0), 0.0);
  const auto q = fd_v_derivative(g, 1e-2, cfg);
  const auto v = g.tilted->weighted_gradient(g.g);
  CHECK(std::sqrt(dot(q.values, q.values)) < 1e-3 * std::sqrt(dot(v.values, v.values)));
  CHECK(raised([&] { fd_v_derivative(g, 0.0, cfg); }) == ErrorKind::invalid_parameter);
  CHECK(raised([&] { fd_v_derivative(g, 2.0, cfg); }) == ErrorKind::window);
}

}
