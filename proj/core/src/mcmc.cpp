#include "wittenlab/mcmc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "wittenlab/detail/parallel.hpp"
#include "wittenlab/error.hpp"

namespace wittenlab {

namespace {

constexpr std::size_t batches_per_chain = 32;
constexpr double target_acceptance = 0.4;

using Stats = std::function<void(std::span<const double>, double*)>;

struct ChainOutput {
  std::vector<double> batch_means;  // batches_per_chain × stats
  std::vector<double> raw_sum_sq;   // per stat, over all samples
  std::vector<double> raw_sum;
  std::size_t samples = 0;
  double acceptance = 0.0;
};

class Sampler {
 public:
  Sampler(const PotentialModel& model, std::uint64_t seed, double step)
      : model_(model), rng_(seed), x_(model.size(), 0.0), step_(step) {}

  // one sweep; returns accepted moves
  std::size_t sweep() {
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double y = x_[i] + step_ * normal_(rng_);
      const double d = model_.delta_energy(x_, i, y);
      if (d <= 0.0 || uniform_(rng_) < std::exp(-d)) {
        x_[i] = y;
        ++accepted;
      }
    }
    return accepted;
  }

  std::span<const double> state() const { return x_; }
  void set_step(double s) { step_ = s; }

 private:
  const PotentialModel& model_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::vector<double> x_;
  double step_;
};

// Short pre-run that steers the acceptance rate towards the target.
double tune_step(const PotentialModel& model, const McmcConfig& cfg) {
  if (!cfg.tune) return cfg.proposal_std;
  double step = cfg.proposal_std;
  Sampler s(model, splitmix64(cfg.seed ^ 0x74756e65ULL), step);
  const std::size_t block = 250;
  for (int round = 0; round < 24; ++round) {
    std::size_t acc = 0;
    for (std::size_t k = 0; k < block; ++k) acc += s.sweep();
    const double rate = static_cast<double>(acc) / static_cast<double>(block * model.size());
    step *= std::exp(1.5 * (rate - target_acceptance));
    step = std::clamp(step, 1e-3, 1e3);
    s.set_step(step);
  }
  return step;
}

ChainOutput run_chain(const PotentialModel& model, const McmcConfig& cfg, std::size_t chain,
                      double step, std::size_t n_stats, const Stats& stats) {
  Sampler s(model, splitmix64(cfg.seed + chain), step);
  for (std::size_t k = 0; k < cfg.burn_in; ++k) s.sweep();

  const std::size_t recorded = (cfg.chain_length - cfg.burn_in) / cfg.thinning;
  const std::size_t batch = recorded / batches_per_chain;
  ChainOutput out;
  out.batch_means.assign(batches_per_chain * n_stats, 0.0);
  out.raw_sum.assign(n_stats, 0.0);
  out.raw_sum_sq.assign(n_stats, 0.0);
  std::vector<double> buf(n_stats), acc(n_stats);
  std::size_t accepted = 0;
  for (std::size_t b = 0; b < batches_per_chain; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < batch; ++k) {
      for (std::size_t th = 0; th < cfg.thinning; ++th) accepted += s.sweep();
      stats(s.state(), buf.data());
      for (std::size_t q = 0; q < n_stats; ++q) {
        acc[q] += buf[q];
        out.raw_sum[q] += buf[q];
        out.raw_sum_sq[q] += buf[q] * buf[q];
      }
    }
    for (std::size_t q = 0; q < n_stats; ++q) {
      out.batch_means[b * n_stats + q] = acc[q] / static_cast<double>(batch);
    }
  }
  out.samples = batch * batches_per_chain;
  out.acceptance = static_cast<double>(accepted) /
                   static_cast<double>(out.samples * cfg.thinning * model.size());
  return out;
}

std::vector<ChainOutput> run_chains(const PotentialModel& model, const McmcConfig& cfg, double step,
                                    std::size_t n_stats, const Stats& stats) {
  cfg.validate();
  const std::size_t recorded = (cfg.chain_length - cfg.burn_in) / cfg.thinning;
  if (recorded < batches_per_chain) {
    fail(ErrorKind::invalid_parameter, "oracle.mcmc",
         "need at least 32 recorded samples per chain for batch means");
  }
  std::vector<ChainOutput> chains(cfg.chains);
  detail::parallel_for(cfg.chains, [&](std::size_t c) {
    chains[c] = run_chain(model, cfg, c, step, n_stats, stats);
  });
  return chains;
}

// Combines per-batch values of one quantity into an estimate.
McmcEstimate summarize(const std::vector<double>& batch_values, double raw_variance,
                       double acceptance, double step) {
  McmcEstimate e;
  const double count = static_cast<double>(batch_values.size());
  double mean = 0.0;
  for (double v : batch_values) mean += v;
  mean /= count;
  double ss = 0.0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (count - 1.0));
  e.mean = mean;
  e.standard_error = sd / std::sqrt(count);
  e.acceptance_rate = acceptance;
  e.proposal_std = step;
  e.effective_sample_size =
      e.standard_error > 0.0 ? raw_variance / (e.standard_error * e.standard_error) : 0.0;
  if (acceptance < 0.05 || acceptance > 0.95) {
    std::ostringstream os;
    os << "acceptance rate " << acceptance << " outside [0.05, 0.95]; proposal needs tuning";
    e.warnings.push_back(os.str());
  }
  return e;
}

double mean_acceptance(const std::vector<ChainOutput>& chains) {
  double a = 0.0;
  for (const auto& c : chains) a += c.acceptance;
  return a / static_cast<double>(chains.size());
}

double raw_variance(const std::vector<ChainOutput>& chains, std::size_t q) {
  double s = 0.0, s2 = 0.0, n = 0.0;
  for (const auto& c : chains) {
    s += c.raw_sum[q];
    s2 += c.raw_sum_sq[q];
    n += static_cast<double>(c.samples);
  }
  const double m = s / n;
  return std::max(0.0, s2 / n - m * m);
}

// Window and node count for the single-site conditional quadrature. The window
// is centred on the current value, which is itself a draw from that law.
constexpr int conditional_nodes = 101;
constexpr double conditional_half_width = 16.0;

// Moments 1..orders of x_i under its law given the other coordinates.
void conditional_moments(const PotentialModel& model, std::span<const double> x, std::size_t i,
                         int orders, double* out) {
  std::array<double, conditional_nodes> y{}, logw{};
  const double h = 2.0 * conditional_half_width / (conditional_nodes - 1);
  double top = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < conditional_nodes; ++k) {
    y[k] = x[i] - conditional_half_width + h * k;
    logw[k] = -model.delta_energy(x, i, y[k]);
    top = std::max(top, logw[k]);
  }
  std::fill(out, out + orders, 0.0);
  double z = 0.0;
  for (int k = 0; k < conditional_nodes; ++k) {
    const double w = std::exp(logw[k] - top);
    z += w;
    double p = 1.0;
    for (int o = 0; o < orders; ++o) {
      p *= y[k];
      out[o] += w * p;
    }
  }
  for (int o = 0; o < orders; ++o) out[o] /= z;
}

// A monomial split into sites replaced by conditional moments and sites read
// off the sample. The averaged sites never share an interaction clique.
struct MonomialPlan {
  std::vector<std::pair<std::size_t, int>> averaged, sampled;
};

std::vector<MonomialPlan> plan_monomials(const PotentialModel& model,
                                         const std::vector<std::vector<std::size_t>>& list,
                                         bool rao_blackwell) {
  const std::size_t n = model.size();
  std::vector<char> linked(n * n, 0);
  for (const auto& clique : model.interaction_cliques()) {
    for (std::size_t a : clique) {
      for (std::size_t b : clique) linked[a * n + b] = 1;
    }
  }
  std::vector<MonomialPlan> plans;
  for (const auto& mono : list) {
    std::map<std::size_t, int> power;
    for (std::size_t i : mono) ++power[i];
    MonomialPlan plan;
    for (const auto& [i, k] : power) {
      bool free = rao_blackwell;
      for (const auto& [j, kj] : plan.averaged) free = free && !linked[i * n + j];
      (free ? plan.averaged : plan.sampled).emplace_back(i, k);
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void McmcConfig::validate() const {
  if (!(burn_in < chain_length)) {
    fail(ErrorKind::invalid_parameter, "oracle.mcmc", "burn_in must be below chain_length");
  }
  if (!(proposal_std > 0.0) || !std::isfinite(proposal_std)) {
    fail(ErrorKind::invalid_parameter, "oracle.mcmc", "proposal_std must be positive");
  }
  if (thinning < 1) fail(ErrorKind::invalid_parameter, "oracle.mcmc", "thinning must be >= 1");
  if (chains < 1) fail(ErrorKind::invalid_parameter, "oracle.mcmc", "chains must be >= 1");
}

McmcEstimate mcmc_expectation(const PotentialModel& model, const PointFunction& fn,
                              const McmcConfig& cfg) {
  cfg.validate();
  const double step = tune_step(model, cfg);
  const auto chains = run_chains(model, cfg, step, 1,
                                 [&](std::span<const double> x, double* out) { out[0] = fn(x); });
  std::vector<double> batches;
  for (const auto& c : chains) batches.insert(batches.end(), c.batch_means.begin(), c.batch_means.end());
  return summarize(batches, raw_variance(chains, 0), mean_acceptance(chains), step);
}

std::vector<McmcEstimate> mcmc_truncated_correlations(
    const PotentialModel& model, const std::vector<std::vector<std::size_t>>& tuples,
    const McmcConfig& cfg) {
  cfg.validate();
  // every sub-monomial any tuple needs
  std::map<std::vector<std::size_t>, std::size_t> monomials;
  for (const auto& t : tuples) {
    if (t.empty() || t.size() > 3) {
      fail(ErrorKind::arity, "oracle.mcmc_truncated_correlations",
           "tuples must have 1 to 3 sites");
    }
    for (std::size_t i : t) model.lattice().require_index(i, "oracle.mcmc_truncated_correlations");
    const std::size_t k = t.size();
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      std::vector<std::size_t> mono;
      for (std::size_t q = 0; q < k; ++q) {
        if (mask & (1u << q)) mono.push_back(t[q]);
      }
      std::sort(mono.begin(), mono.end());
      monomials.emplace(mono, 0);
    }
  }
  std::vector<std::vector<std::size_t>> list;
  for (auto& [mono, idx] : monomials) {
    idx = list.size();
    list.push_back(mono);
  }

  const auto plans = plan_monomials(model, list, cfg.rao_blackwell);
  std::vector<int> orders(model.size(), 0);
  for (const auto& plan : plans) {
    for (const auto& [i, k] : plan.averaged) orders[i] = std::max(orders[i], k);
  }
  const int max_order = *std::max_element(orders.begin(), orders.end());

  const double step = tune_step(model, cfg);
  // chains may run concurrently, so the moment table lives per thread
  const Stats stats = [&](std::span<const double> x, double* out) {
    thread_local std::vector<double> moments;
    moments.assign(model.size() * std::max(max_order, 1), 0.0);
    for (std::size_t i = 0; i < model.size(); ++i) {
      if (orders[i] > 0) conditional_moments(model, x, i, orders[i], &moments[i * max_order]);
    }
    for (std::size_t q = 0; q < plans.size(); ++q) {
      double p = 1.0;
      for (const auto& [i, k] : plans[q].averaged) p *= moments[i * max_order + k - 1];
      for (const auto& [i, k] : plans[q].sampled) p *= std::pow(x[i], k);
      out[q] = p;
    }
  };
  const auto chains = run_chains(model, cfg, step, list.size(), stats);

  auto id = [&](std::vector<std::size_t> mono) {
    std::sort(mono.begin(), mono.end());
    return monomials.at(mono);
  };
  std::vector<McmcEstimate> out;
  for (const auto& t : tuples) {
    std::vector<double> values;
    for (const auto& c : chains) {
      for (std::size_t b = 0; b < batches_per_chain; ++b) {
        const double* m = c.batch_means.data() + b * list.size();
        double v = 0.0;
        if (t.size() == 1) {
          v = m[id({t[0]})];
        } else if (t.size() == 2) {
          v = m[id({t[0], t[1]})] - m[id({t[0]})] * m[id({t[1]})];
        } else {
          const double a = m[id({t[0]})], bb = m[id({t[1]})], cc = m[id({t[2]})];
          v = m[id({t[0], t[1], t[2]})] - a * m[id({t[1], t[2]})] - bb * m[id({t[0], t[2]})] -
              cc * m[id({t[0], t[1]})] + 2.0 * a * bb * cc;
        }
        values.push_back(v);
      }
    }
    out.push_back(summarize(values, raw_variance(chains, id(t)), mean_acceptance(chains), step));
  }
  return out;
}

}  // namespace wittenlab
