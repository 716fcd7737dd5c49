#include <random>

#include <benchmark/benchmark.h>

#include "wittenlab/mcmc.hpp"
#include "wittenlab/witten.hpp"

namespace wl = wittenlab;

namespace {

std::shared_ptr<const wl::LatticeSpec> chain(int n) {
  const int shape[] = {n};
  return std::make_shared<const wl::LatticeSpec>(wl::build_lattice(1, shape));
}

// Kac chain of range(0) sites on a grid of range(1) points per site.
wl::WittenSystem kac_system(const benchmark::State& state) {
  const auto lat = chain(static_cast<int>(state.range(0)));
  return wl::WittenSystem(wl::build_grid(lat, 6.0, static_cast<int>(state.range(1))), wl::kac_potential(lat, 0.05));
}

void BM_apply_w1(benchmark::State& state) {
  const auto sys = kac_system(state);
  const std::size_t n = sys.grid()->total_points * sys.grid()->dims();
  std::vector<double> v(n, 1.0), out(n);
  for (auto _ : state) {
    sys.apply_w1_raw(v, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_apply_w1)->Args({2, 129})->Args({3, 33})->Args({4, 17})->Unit(benchmark::kMillisecond);

void BM_solve_w1(benchmark::State& state) {
  const auto sys = kac_system(state);
  const auto rhs = sys.weighted_gradient(wl::Observable::coordinate(sys.grid()->lattice, 0));
  wl::SolverConfig cfg;
  for (auto _ : state) {
    auto [v, rep] = sys.solve_w1(rhs, cfg);
    benchmark::DoNotOptimize(v.values.data());
    state.counters["iterations"] = static_cast<double>(rep.iterations);
  }
}
BENCHMARK(BM_solve_w1)->Args({2, 65})->Args({3, 33})->Unit(benchmark::kMillisecond);

void BM_mcmc_sweeps(benchmark::State& state) {
  const auto model = wl::kac_potential(chain(static_cast<int>(state.range(0))), 0.1);
  wl::McmcConfig cfg;
  cfg.chain_length = 20000;
  cfg.burn_in = 1000;
  cfg.chains = 1;
  cfg.tune = false;
  for (auto _ : state) {
    const auto e = wl::mcmc_expectation(model, [](std::span<const double> x) { return x[0]; }, cfg);
    benchmark::DoNotOptimize(e.mean);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.chain_length));
}
BENCHMARK(BM_mcmc_sweeps)->Arg(6)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
