#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wittenlab/potential.hpp"

namespace wittenlab {

/// Single-site random-walk Metropolis on the untruncated ℝ^Λ. Lengths are in
/// sweeps (|Λ| site updates each).
struct McmcConfig {
  std::size_t chain_length = 200000;
  std::size_t burn_in = 5000;
  double proposal_std = 1.5;
  std::uint64_t seed = 12345;
  std::size_t thinning = 1;
  std::size_t chains = 4;
  bool tune = true;
  // Correlation estimates average each factor over its exact single-site
  // conditional law where the sites do not interact. Same chain, lower variance.
  bool rao_blackwell = true;

  void validate() const;
};

struct McmcEstimate {
  double mean = 0.0;
  double standard_error = 0.0;  // 32 batch means per chain
  double acceptance_rate = 0.0;
  double effective_sample_size = 0.0;
  double proposal_std = 0.0;  // after tuning
  std::vector<std::string> warnings;
};

using PointFunction = std::function<double(std::span<const double>)>;

McmcEstimate mcmc_expectation(const PotentialModel& model, const PointFunction& fn,
                              const McmcConfig& cfg);

/// Truncated correlations ⟨x_{i₁}, …, x_{i_k}⟩ (k = 1..3) of coordinate
/// observables from one set of chains. Each batch forms the truncated value
/// from its own moment estimates.
std::vector<McmcEstimate> mcmc_truncated_correlations(
    const PotentialModel& model, const std::vector<std::vector<std::size_t>>& tuples,
    const McmcConfig& cfg);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace wittenlab
