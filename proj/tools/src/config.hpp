#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "wittenlab/mcmc.hpp"
#include "wittenlab/witten.hpp"

namespace wlab {

inline constexpr int config_schema_version = 1;

/// A parsed experiment file. `raw` is the effective configuration after
/// command-line overrides; it is what the config hash covers.
struct Experiment {
  nlohmann::json raw;
  std::shared_ptr<const wittenlab::LatticeSpec> lattice;
  std::optional<wittenlab::PotentialModel> potential;
  std::map<std::string, wittenlab::Observable> observables;
  double half_width = 6.0;
  int points = 33;
  wittenlab::GridOptions grid_options;
  wittenlab::SolverConfig solver;
  wittenlab::McmcConfig mcmc;
  std::uint64_t seed = 20240611;

  const wittenlab::Observable& observable(const std::string& name, const std::string& path) const;
  /// Section of `commands`, or an empty object.
  nlohmann::json command(const std::string& name) const;
  wittenlab::GridPtr build_grid() const;
};

/// Validates every field and cross-reference. Problems raise a config error
/// whose message starts with the JSON path of the offending field.
Experiment parse_experiment(nlohmann::json config, std::optional<std::uint64_t> seed_override = {});
Experiment load_experiment(const std::string& path, std::optional<std::uint64_t> seed_override = {});

/// FNV-1a over the compact dump of the effective configuration.
std::uint64_t config_hash(const nlohmann::json& config);

}  // namespace wlab
