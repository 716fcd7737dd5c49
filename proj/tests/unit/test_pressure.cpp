#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wittenlab/correlation.hpp"
#include "wittenlab/oracle.hpp"
#include "wittenlab/pressure.hpp"

using namespace wittenlab;
using testing::chain;
using testing::raised;

namespace {

SolverConfig tight() {
  SolverConfig cfg;
  cfg.rel_tolerance = 1e-10;
  return cfg;
}

PerturbedSystem gaussian_x0(int sites, int m, double t = 0.0) {
  const auto lat = chain(sites);
  return make_perturbed_system(build_grid(lat, 6.0, m), gaussian_potential(lat), Observable::coordinate(lat, 0), t);
}

PerturbedSystem kac_sum(int m, double t = 0.0) {
  const auto lat = chain(2);
  return make_perturbed_system(build_grid(lat, 6.0, m), kac_potential(lat, 0.05),
                               Observable::linear(lat, {0, 1}, {1.0, 1.0}), t);
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("pressure") {

TEST_CASE("log partition") {
  const auto one = gaussian_x0(1, 65);
  CHECK(log_partition(one) == doctest::Approx(0.5 * std::log(2 * M_PI)).epsilon(1e-4));
  const auto two = gaussian_x0(2, 65);
  const double base = log_partition(two);
  for (double t : {-0.4, 0.1, 0.3}) {
    CHECK(std::abs(log_partition_at(two, t) - base - 0.5 * t * t) < 1e-4);
    CHECK(log_partition(retilt(two, t)) == doctest::Approx(log_partition_at(two, t)).epsilon(1e-12));
  }
  const auto lat = chain(2);
  CHECK(raised([&] {
          make_perturbed_system(build_grid(lat, 6.0, 17), gaussian_potential(lat), Observable::coordinate(lat, 0), 1.5);
        }) == ErrorKind::convexity_risk);
}

TEST_CASE("A_g on simple inputs") {
  const auto sys = gaussian_x0(1, 129);
  const auto& grid = sys.grid();
  const auto& psi = sys.tilted->ground().field;
  const auto u = sample_scalar(grid, [](std::span<const double> x) { return x[0] * std::exp(-x[0] * x[0] / 4); });
  const auto r = apply_a_g(sys, u, tight());
  CHECK(distance(r.values, psi.values) < 1e-3 * norm(psi.values));

  ScalarField c = psi;
  for (auto& v : c.values) v *= 3.0;
  CHECK(testing::max_abs(apply_a_g(sys, c, tight()).values) < 1e-3);
}

TEST_CASE("A_g agrees with a direct solve") {
  const auto sys = kac_sum(17);
  const auto& grid = sys.grid();
  const auto& w = *sys.tilted;
  ScalarField u(grid);
  const auto gv = sample_observable(grid, sys.g);
  for (std::size_t i = 0; i < u.size(); ++i) u.values[i] = gv.values[i] * w.ground().field.values[i];
  const auto iter = apply_a_g(sys, u, tight());

  const auto V = dense_solve_w1(w, twisted_gradient(u, w.sampled()));
  ScalarField direct(grid);
  std::vector<double> x(2), dg(2);
  for (std::size_t i = 0; i < direct.size(); ++i) {
    grid->node(i, x);
    sys.g.gradient(x, dg);
    direct.values[i] = V.component(0)[i] * dg[0] + V.component(1)[i] * dg[1];
  }
  CHECK(distance(iter.values, direct.values) < 1e-8 * norm(direct.values));
}

TEST_CASE("gaussian derivatives of the log partition") {
  const auto sys = gaussian_x0(2, 65);
  const auto seq = theta_sequence(sys, 4, tight());
  REQUIRE(seq.theta.size() == 4);
  CHECK(std::abs(seq.theta[0]) < 1e-12);
  CHECK(seq.theta[1] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(seq.theta[2]) < 1e-3);
  CHECK(std::abs(seq.theta[3]) < 1e-3);
  CHECK(seq.reports.size() == 3);
  CHECK(theta_derivative(sys, 2, tight()) == doctest::Approx(seq.theta[1]));

  CHECK(pressure_coefficient(sys, 2, tight()) == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(std::abs(pressure_coefficient(sys, 3, tight())) < 1e-3);
  CHECK(raised([&] { pressure_coefficient(sys, 1, tight()); }) == ErrorKind::arity);
  CHECK(raised([&] { theta_derivative(sys, 0, tight()); }) == ErrorKind::invalid_parameter);
  CHECK(raised([&] { theta_derivative(sys, 6, tight()); }) == ErrorKind::unsupported_order);
}

TEST_CASE("kac derivatives of the log partition") {
  const auto sys = kac_sum(65);
  const auto cfg = tight();
  const auto seq = theta_sequence(sys, 4, cfg);
  CHECK(std::abs(seq.theta[0]) < 1e-10);
  CHECK(std::abs(seq.theta[2]) < 1e-3);

  // second derivative is the variance of g
  const auto cov = covariance_hs(*sys.tilted, sys.g, sys.g, cfg);
  CHECK(seq.theta[1] == doctest::Approx(cov.value).epsilon(1e-3));

  for (int n : {2, 4}) {
    const auto fd = fd_theta_derivative(sys, n, 2e-2);
    const double theta = seq.theta[n - 1];
    CHECK(std::abs(theta - fd.value) <= std::max(1e-3, 0.01 * std::abs(fd.value)));
  }

  // a_n bookkeeping
  const double a4 = pressure_coefficient(sys, 4, cfg);
  CHECK(a4 * 4 * 2 * 6 == doctest::Approx(seq.theta[3]).epsilon(1e-10));

  const auto rep = taylor_report(sys, 4, cfg, 2e-2);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.coefficients_a_n.size() == 3);
  CHECK(rep.root_sequence.size() == 3);
  for (const auto& row : rep.rows) {
    if (row.n >= 2) CHECK(row.within_tolerance);
  }
}

TEST_CASE("tilted evaluation point") {
  const auto sys = gaussian_x0(2, 65, 0.3);
  const auto seq = theta_sequence(sys, 2, tight());
  CHECK(seq.theta[0] == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(seq.theta[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("parameter derivative of v") {
  const auto g = gaussian_x0(2, 33);
  const auto pw = param_derivative_w(g, tight());
  CHECK(norm(pw.w.values) < 1e-3 * norm(pw.v.values));

  const auto lat = chain(2);
  const auto grid = build_grid(lat, 6.0, 33);
  const auto c = make_perturbed_system(grid, kac_potential(lat, 0.05), Observable::constant(lat, 1.0), 0.0);
  const auto pc = param_derivative_w(c, tight());
  CHECK(testing::max_abs(pc.v.values) == 0.0);
  CHECK(testing::max_abs(pc.w.values) == 0.0);

  const auto k = make_perturbed_system(grid, kac_potential(lat, 0.05), Observable::coordinate(lat, 0), 0.0);
  const auto pk = param_derivative_w(k, tight());
  const auto q1 = fd_v_derivative(k, 1e-2, tight());
  const auto q2 = fd_v_derivative(k, 5e-3, tight());
  const double ratio = distance(q1.values, pk.w.values) / distance(q2.values, pk.w.values);
  CHECK(ratio >= 1.6);
  CHECK(ratio <= 2.4);
}

TEST_CASE("divergence at the origin") {
  const auto lat = chain(2);
  const auto grid = build_grid(lat, 6.0, 65);
  const auto model = gaussian_potential(lat);
  const auto x0 = make_perturbed_system(grid, model, Observable::coordinate(lat, 0), 0.0);
  CHECK(raised([&] { divergence_identity_check(x0, 1, tight()); }) == ErrorKind::assumption_not_met);

  const auto bump = make_perturbed_system(grid, model, Observable::bump(lat, {0, 1}, {0.0, 0.0}, 1.0), 0.0);
  const auto one = divergence_identity_check(bump, 1, tight());
  CHECK(one.residual <= 1e-3);
  CHECK(one.theta == doctest::Approx(gibbs_mean(*bump.tilted, bump.g).value).epsilon(1e-8));
  CHECK(divergence_identity_check(bump, 2, tight()).residual <= 1e-2);
}

}
