#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "wittenlab/correlation.hpp"
#include "wittenlab/mcmc.hpp"

using namespace wittenlab;
using testing::chain;
using testing::raised;

namespace {

McmcConfig quick() {
  McmcConfig cfg;
  cfg.chain_length = 40000;
  cfg.burn_in = 2000;
  cfg.chains = 4;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_SUITE("mcmc") {

TEST_CASE("gaussian moments") {
  const auto lat = chain(2);
  const auto model = gaussian_potential(lat);
  const auto m1 = mcmc_expectation(model, [](std::span<const double> x) { return x[0]; }, quick());
  CHECK(std::abs(m1.mean) <= 3 * m1.standard_error);
  const auto m2 = mcmc_expectation(model, [](std::span<const double> x) { return x[1] * x[1]; }, quick());
  CHECK(std::abs(m2.mean - 1.0) <= 3 * m2.standard_error);
  CHECK(m2.standard_error > 0.0);
  CHECK(m2.acceptance_rate > 0.05);
  CHECK(m2.acceptance_rate < 0.95);
  CHECK(m2.effective_sample_size > 0.0);
}

TEST_CASE("kac covariance agrees with quadrature") {
  const auto lat = chain(2);
  const auto model = kac_potential(lat, 0.05);
  const auto est = mcmc_truncated_correlations(model, {{0, 1}, {0, 0}}, quick());
  const WittenSystem sys(build_grid(lat, 6.0, 65), model);
  const Observable pair[] = {Observable::coordinate(lat, 0), Observable::coordinate(lat, 1)};
  const double quad = truncated_correlation(sys, pair).value;
  CHECK(std::abs(est[0].mean - quad) <= 3 * est[0].standard_error);
  const Observable same[] = {pair[0], pair[0]};
  CHECK(std::abs(est[1].mean - truncated_correlation(sys, same).value) <= 3 * est[1].standard_error);
}

TEST_CASE("conditional averaging") {
  // independent gaussian sites: every factor is averaged exactly
  const auto g = mcmc_truncated_correlations(gaussian_potential(chain(2)), {{0, 1}, {0, 0}}, quick());
  CHECK(std::abs(g[0].mean) < 1e-12);
  CHECK(g[1].mean == doctest::Approx(1.0).epsilon(1e-10));

  const auto model = kac_potential(chain(4), 0.1);
  const std::vector<std::vector<std::size_t>> tuples = {{0, 2}, {0, 3}, {0, 2, 3}};
  auto plain_cfg = quick();
  plain_cfg.rao_blackwell = false;
  auto rb_cfg = quick();
  rb_cfg.thinning = 4;
  const auto plain = mcmc_truncated_correlations(model, tuples, plain_cfg);
  const auto rb = mcmc_truncated_correlations(model, tuples, rb_cfg);
  for (std::size_t q = 0; q < tuples.size(); ++q) {
    CAPTURE(q);
    const double se = std::hypot(plain[q].standard_error, rb[q].standard_error);
    CHECK(std::abs(plain[q].mean - rb[q].mean) <= 3 * se);
    CHECK(rb[q].standard_error < 0.5 * plain[q].standard_error);
  }
}

TEST_CASE("fixed seeds give identical chains") {
  const auto model = kac_potential(chain(3), 0.1);
  const auto fn = [](std::span<const double> x) { return x[0] * x[2]; };
  const auto a = mcmc_expectation(model, fn, quick());
  const auto b = mcmc_expectation(model, fn, quick());
  CHECK(a.mean == b.mean);
  CHECK(a.standard_error == b.standard_error);
  auto other = quick();
  other.seed = 8;
  CHECK(mcmc_expectation(model, fn, other).mean != a.mean);
}

TEST_CASE("configuration checks") {
  const auto model = gaussian_potential(chain(1));
  const auto fn = [](std::span<const double> x) { return x[0]; };
  auto cfg = quick();
  cfg.burn_in = cfg.chain_length;
  CHECK(raised([&] { mcmc_expectation(model, fn, cfg); }) == ErrorKind::invalid_parameter);
  cfg = quick();
  cfg.proposal_std = 0.0;
  CHECK(raised([&] { mcmc_expectation(model, fn, cfg); }) == ErrorKind::invalid_parameter);
  CHECK(raised([&] { mcmc_truncated_correlations(model, {{0, 0, 0, 0}}, quick()); }) == ErrorKind::arity);
}

TEST_CASE("untuned proposals are flagged") {
  auto cfg = quick();
  cfg.tune = false;
  cfg.proposal_std = 100.0;
  const auto e = mcmc_expectation(gaussian_potential(chain(1)), [](std::span<const double> x) { return x[0]; }, cfg);
  CHECK(!e.warnings.empty());
}

}
