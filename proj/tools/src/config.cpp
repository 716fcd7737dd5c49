#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wittenlab/error.hpp"

namespace wlab {

using nlohmann::json;
using wittenlab::ErrorKind;
using wittenlab::fail;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  fail(ErrorKind::config, "cli.config", path + ": " + msg);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) bad(path + "/" + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
  return j.contains(key) ? number(j.at(key), path + "/" + key) : fallback;
}

std::int64_t integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::size_t count(const json& j, const std::string& path) {
  const auto v = integer(j, path);
  if (v < 0) bad(path, "must be non-negative");
  return static_cast<std::size_t>(v);
}

std::size_t count_or(const json& j, const std::string& key, std::size_t fallback, const std::string& path) {
  return j.contains(key) ? count(j.at(key), path + "/" + key) : fallback;
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

std::size_t site(const json& j, const wittenlab::LatticeSpec& lattice, const std::string& path) {
  const std::size_t s = count(j, path);
  if (s >= lattice.size()) {
    bad(path, "site " + std::to_string(s) + " outside the lattice of " + std::to_string(lattice.size()) + " sites");
  }
  return s;
}

std::vector<std::size_t> sites(const json& j, const wittenlab::LatticeSpec& lattice, const std::string& path) {
  if (!j.is_array() || j.empty()) bad(path, "expected a non-empty list of sites");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(site(j[k], lattice, path + "/" + std::to_string(k)));
  return out;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], path + "/" + std::to_string(k)));
  return out;
}

// Library validation errors inside a section are reported at that section.
template <class F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const wittenlab::Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    bad(path, e.what());
  }
}

wittenlab::Observable parse_observable(const json& j, const std::shared_ptr<const wittenlab::LatticeSpec>& lat,
                                       const std::string& path) {
  using wittenlab::Observable;
  const std::string kind = text(field(j, "kind", path), path + "/kind");
  return at_path(path, [&]() -> Observable {
    if (kind == "coordinate") return Observable::coordinate(lat, site(field(j, "site", path), *lat, path + "/site"));
    if (kind == "coordinate_square") {
      return Observable::coordinate_square(lat, site(field(j, "site", path), *lat, path + "/site"));
    }
    if (kind == "linear") {
      auto s = sites(field(j, "sites", path), *lat, path + "/sites");
      auto c = numbers(field(j, "coefficients", path), path + "/coefficients");
      if (c.size() != s.size()) bad(path + "/coefficients", "needs one coefficient per site");
      return Observable::linear(lat, std::move(s), std::move(c));
    }
    if (kind == "bump") {
      auto s = sites(field(j, "sites", path), *lat, path + "/sites");
      std::vector<double> c = j.contains("center") ? numbers(j.at("center"), path + "/center")
                                                   : std::vector<double>(s.size(), 0.0);
      if (c.size() != s.size()) bad(path + "/center", "needs one coordinate per site");
      const double w = number_or(j, "width", 1.0, path);
      if (!(w > 0.0)) bad(path + "/width", "must be positive");
      return Observable::bump(lat, std::move(s), std::move(c), w);
    }
    if (kind == "constant") return Observable::constant(lat, number(field(j, "value", path), path + "/value"));
    bad(path + "/kind", "unknown observable kind '" + kind + "'");
  });
}

}  // namespace

const wittenlab::Observable& Experiment::observable(const std::string& name, const std::string& path) const {
  const auto it = observables.find(name);
  if (it == observables.end()) bad(path, "unknown observable '" + name + "'");
  return it->second;
}

json Experiment::command(const std::string& name) const {
  if (raw.contains("commands") && raw.at("commands").contains(name)) return raw.at("commands").at(name);
  return json::object();
}

wittenlab::GridPtr Experiment::build_grid() const {
  return wittenlab::build_grid(lattice, half_width, points, grid_options);
}

Experiment parse_experiment(json config, std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) bad("", "top level must be an object");
  if (config.contains("schema_version") && integer(config.at("schema_version"), "/schema_version") != config_schema_version) {
    bad("/schema_version", "unsupported schema version");
  }
  if (seed_override) config["seed"] = *seed_override;

  Experiment e;
  e.seed = config.contains("seed") ? static_cast<std::uint64_t>(count(config.at("seed"), "/seed")) : e.seed;

  const json& lat = field(config, "lattice", "");
  const int dim = static_cast<int>(integer(field(lat, "dimension", "/lattice"), "/lattice/dimension"));
  const json& shape_j = field(lat, "shape", "/lattice");
  if (!shape_j.is_array()) bad("/lattice/shape", "expected a list of extents");
  std::vector<int> shape;
  for (std::size_t k = 0; k < shape_j.size(); ++k) {
    shape.push_back(static_cast<int>(integer(shape_j[k], "/lattice/shape/" + std::to_string(k))));
  }
  e.lattice = at_path("/lattice", [&] {
    return std::make_shared<const wittenlab::LatticeSpec>(wittenlab::build_lattice(dim, shape));
  });

  const json& pot = field(config, "potential", "");
  const std::string kind = text(field(pot, "kind", "/potential"), "/potential/kind");
  e.potential = at_path("/potential", [&] {
    if (kind == "gaussian") return wittenlab::gaussian_potential(e.lattice);
    if (kind == "kac") return wittenlab::kac_potential(e.lattice, number(field(pot, "nu", "/potential"), "/potential/nu"));
    bad("/potential/kind", "unknown potential kind '" + kind + "'");
  });

  if (config.contains("observables")) {
    const json& obs = config.at("observables");
    if (!obs.is_object()) bad("/observables", "expected an object of named observables");
    for (const auto& [name, spec] : obs.items()) {
      e.observables.emplace(name, parse_observable(spec, e.lattice, "/observables/" + name));
    }
  }

  if (config.contains("grid")) {
    const json& g = config.at("grid");
    e.half_width = number_or(g, "half_width", e.half_width, "/grid");
    if (g.contains("points")) e.points = static_cast<int>(integer(g.at("points"), "/grid/points"));
    if (g.contains("stencil_order")) {
      e.grid_options.stencil_order = static_cast<int>(integer(g.at("stencil_order"), "/grid/stencil_order"));
      if (e.grid_options.stencil_order != 2 && e.grid_options.stencil_order != 4) {
        bad("/grid/stencil_order", "must be 2 or 4");
      }
    }
    e.grid_options.memory_budget_bytes = number_or(g, "memory_budget_bytes", e.grid_options.memory_budget_bytes, "/grid");
  }
  if (!(e.half_width > 0.0)) bad("/grid/half_width", "must be positive");
  if (e.points < 3 || e.points % 2 == 0) bad("/grid/points", "must be odd and at least 3");

  e.solver.seed = e.seed;
  if (config.contains("solver")) {
    const json& s = config.at("solver");
    e.solver.rel_tolerance = number_or(s, "rel_tolerance", e.solver.rel_tolerance, "/solver");
    if (s.contains("max_iterations") && !s.at("max_iterations").is_null()) {
      e.solver.max_iterations = count(s.at("max_iterations"), "/solver/max_iterations");
    }
    if (s.contains("preconditioner")) {
      const std::string p = text(s.at("preconditioner"), "/solver/preconditioner");
      if (p == "none") {
        e.solver.preconditioner = wittenlab::Preconditioner::none;
      } else if (p == "diagonal") {
        e.solver.preconditioner = wittenlab::Preconditioner::diagonal;
      } else {
        bad("/solver/preconditioner", "expected 'none' or 'diagonal'");
      }
    }
  }
  at_path("/solver", [&] { e.solver.validate(); return 0; });

  e.mcmc.seed = e.seed;
  if (config.contains("oracle") && config.at("oracle").contains("mcmc")) {
    const json& m = config.at("oracle").at("mcmc");
    const std::string p = "/oracle/mcmc";
    e.mcmc.chain_length = count_or(m, "chain_length", e.mcmc.chain_length, p);
    e.mcmc.burn_in = count_or(m, "burn_in", e.mcmc.burn_in, p);
    e.mcmc.proposal_std = number_or(m, "proposal_std", e.mcmc.proposal_std, p);
    e.mcmc.thinning = count_or(m, "thinning", e.mcmc.thinning, p);
    e.mcmc.chains = count_or(m, "chains", e.mcmc.chains, p);
    if (m.contains("tune")) {
      if (!m.at("tune").is_boolean()) bad(p + "/tune", "expected true or false");
      e.mcmc.tune = m.at("tune").get<bool>();
    }
    if (m.contains("rao_blackwell")) {
      if (!m.at("rao_blackwell").is_boolean()) bad(p + "/rao_blackwell", "expected true or false");
      e.mcmc.rao_blackwell = m.at("rao_blackwell").get<bool>();
    }
  }
  at_path("/oracle/mcmc", [&] { e.mcmc.validate(); return 0; });

  if (config.contains("commands") && !config.at("commands").is_object()) bad("/commands", "expected an object");
  e.raw = std::move(config);
  return e;
}

Experiment load_experiment(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cli.config", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, "cli.config", path + ": " + e.what());
  }
  return parse_experiment(std::move(j), seed_override);
}

std::uint64_t config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace wlab
