#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wittenlab/correlation.hpp"

using namespace wittenlab;
using testing::chain;
using testing::raised;

namespace {

struct Fixture {
  std::shared_ptr<const LatticeSpec> lat;
  WittenSystem sys;
  SolverConfig cfg;

  Fixture(int sites, std::optional<double> nu, int m, double L = 6.0)
      : lat(chain(sites)),
        sys(build_grid(lat, L, m), nu ? kac_potential(lat, *nu) : gaussian_potential(lat)) {
    cfg.rel_tolerance = 1e-10;
  }
  Observable x(std::size_t i) const { return Observable::coordinate(lat, i); }
};

}  // namespace

TEST_SUITE("correlation") {

TEST_CASE("gibbs means") {
  const Fixture g(2, std::nullopt, 33);
  CHECK(std::abs(gibbs_mean(g.sys, g.x(0)).value) < 1e-12);
  CHECK(gibbs_mean(g.sys, Observable::coordinate_square(g.lat, 0)).value == doctest::Approx(1.0).epsilon(1e-3));
  const Fixture k(2, 0.05, 33);
  CHECK(std::abs(gibbs_mean(k.sys, k.x(0)).value) < 1e-10);
}

TEST_CASE("covariance through the one-form solve") {
  const Fixture g(2, std::nullopt, 33);
  CHECK(covariance_hs(g.sys, g.x(0), g.x(0), g.cfg).value == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(covariance_hs(g.sys, g.x(0), g.x(1), g.cfg).value) < 1e-3);
  CHECK(std::abs(covariance_hs(g.sys, g.x(0), Observable::constant(g.lat, 4.0), g.cfg).value) < 1e-10);

  const Fixture k(2, 0.05, 65);
  const auto hs = covariance_hs(k.sys, k.x(0), k.x(1), k.cfg);
  const Observable pair[] = {k.x(0), k.x(1)};
  const auto quad = truncated_correlation(k.sys, pair);
  CHECK(hs.value > 0.0);
  CHECK(hs.method == Method::hs_formula);
  CHECK(hs.value == doctest::Approx(quad.value).epsilon(1e-3));
}

TEST_CASE("truncated correlations by quadrature") {
  const Fixture g(2, std::nullopt, 33);
  const Observable xx[] = {g.x(0), g.x(0)};
  CHECK(truncated_correlation(g.sys, xx).value == doctest::Approx(1.0).epsilon(1e-3));
  const Observable with_const[] = {g.x(0), Observable::constant(g.lat, 1.5), g.x(1)};
  CHECK(std::abs(truncated_correlation(g.sys, with_const).value) < 1e-12);
  const Observable three[] = {g.x(0), g.x(1), g.x(0)};
  CHECK(std::abs(truncated_correlation(g.sys, three).value) < 1e-10);
  const Observable one[] = {g.x(0)};
  CHECK(raised([&] { truncated_correlation(g.sys, one); }) == ErrorKind::arity);
}

TEST_CASE("three-point decomposition") {
  const Fixture g(2, std::nullopt, 33);
  CHECK(std::abs(threepoint_hs(g.sys, g.x(0), g.x(1), g.x(0), g.cfg).value) < 1e-3);
  CHECK(std::abs(threepoint_hs(g.sys, g.x(0), Observable::constant(g.lat, 1.0), g.x(1), g.cfg).value) < 1e-10);

  const Fixture k(3, 0.1, 33);
  const auto b0 = Observable::bump(k.lat, {0}, {0.5}, 1.0);
  const auto b1 = Observable::bump(k.lat, {1}, {0.5}, 1.0);
  const auto b2 = Observable::bump(k.lat, {2}, {-0.3}, 1.2);
  ThreePointTerms terms;
  const auto hs = threepoint_hs(k.sys, b0, b1, b2, k.cfg, &terms);
  const Observable gs[] = {b0, b1, b2};
  const auto quad = truncated_correlation(k.sys, gs);
  CHECK(hs.value == doctest::Approx(terms.t1 + terms.t2 + terms.t3 + terms.t4));
  const double tol = std::abs(quad.value) < 1e-2 ? 1e-4 : 0.02 * std::abs(quad.value);
  CHECK(std::abs(hs.value - quad.value) <= tol);
  CHECK(hs.value == doctest::Approx(quad.value).epsilon(0.02));
}

TEST_CASE("intermediate identity") {
  const Fixture g(2, std::nullopt, 33);
  CHECK(intermediate_identity_check(g.sys, g.x(0), Observable::constant(g.lat, 2.0), g.cfg) < 1e-10);
  CHECK(intermediate_identity_check(g.sys, g.x(0), g.x(0), g.cfg) <= 1e-3);
  const Fixture k(2, 0.05, 33);
  CHECK(intermediate_identity_check(k.sys, k.x(1), k.x(0), k.cfg) <= 1e-3);
}

TEST_CASE("weighted derivative reports") {
  const Fixture g(2, std::nullopt, 65);
  const auto r = weighted_gradient_report(g.sys, g.x(0), 0.2, g.cfg);
  CHECK(r.sup_value == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.credible_nodes > 0);
  const auto flat = weighted_gradient_report(g.sys, g.x(0), 0.0, g.cfg);
  CHECK(std::isfinite(flat.sup_value));
  const auto both = Observable::linear(g.lat, {0, 1}, {1.0, 1.0});
  CHECK(raised([&] { weighted_gradient_report(g.sys, both, 0.2, g.cfg); }) == ErrorKind::support);

  CHECK(weighted_higher_report(g.sys, g.x(0), 2, 0.2, g.cfg).sup_value <= 1e-3);
  CHECK(raised([&] { weighted_higher_report(g.sys, g.x(0), 4, 0.2, g.cfg); }) == ErrorKind::unsupported_order);

  const Fixture k(3, 0.05, 17, 5.0);
  const auto second = weighted_higher_report(k.sys, k.x(0), 2, 0.2, k.cfg);
  CHECK(std::isfinite(second.sup_value));
  CHECK(second.sup_value > 0.0);
}

TEST_CASE("decay fit") {
  std::vector<DecayPoint> pts;
  for (int d = 1; d <= 5; ++d) pts.push_back({d, 3.0 * std::exp(-0.7 * d), 0.0});
  const auto fit = decay_fit(pts);
  CHECK(fit.kappa_est == doctest::Approx(0.7));
  CHECK(fit.prefactor_C == doctest::Approx(3.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(monotone_within_errors(pts));

  const std::vector<DecayPoint> single = {{1, 0.5, 0.0}};
  CHECK(raised([&] { decay_fit(single); }) == ErrorKind::insufficient_data);

  // points under twice their error bar are dropped
  pts.push_back({6, 1e-4, 1e-3});
  CHECK(decay_fit(pts).excluded == 1);
  const std::vector<DecayPoint> rising = {{1, 0.1, 0.001}, {2, 0.2, 0.001}};
  CHECK(!monotone_within_errors(rising));
}

TEST_CASE("three-point envelope") {
  const Fixture g(4, std::nullopt, 9);
  const std::size_t js[] = {1, 2};
  const std::size_t ks[] = {2, 3};
  const auto env = threepoint_bound_check(g.sys, 0, js, ks);
  CHECK(env.samples.size() == 3);
  CHECK(env.C < 1e-10);
  CHECK(env.within_three_se);
  const std::size_t dup[] = {1, 1};
  CHECK(raised([&] { threepoint_bound_check(g.sys, 0, dup, ks); }) == ErrorKind::invalid_input);
  const std::size_t self[] = {0};
  CHECK(raised([&] { threepoint_bound_check(g.sys, 0, self, ks); }) == ErrorKind::invalid_input);

  std::vector<ThreePointSample> synthetic;
  for (std::size_t j = 1; j <= 3; ++j) {
    for (std::size_t k = j + 1; k <= 4; ++k) {
      const int dj = static_cast<int>(j), dk = static_cast<int>(k);
      synthetic.push_back({j, k, dj, dk, 2.0 * (std::exp(-0.5 * dj) + std::exp(-0.5 * dk)), 1e-3});
    }
  }
  const auto fit = envelope_fit(synthetic);
  CHECK(fit.kappa1 == doctest::Approx(0.5));
  CHECK(fit.C == doctest::Approx(2.0));
  CHECK(fit.within_three_se);
}

}
