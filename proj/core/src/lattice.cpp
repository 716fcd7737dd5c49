#include "wittenlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "wittenlab/error.hpp"

namespace wittenlab {

namespace {

int l1(const Site& a, const Site& b) {
  int d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

}  // namespace

LatticeSpec::LatticeSpec(int dimension, std::vector<int> shape)
    : dimension_(dimension), shape_(std::move(shape)) {
  if (dimension_ < 1) {
    fail(ErrorKind::invalid_geometry, "lattice.build_lattice", "dimension must be at least 1");
  }
  if (static_cast<int>(shape_.size()) != dimension_) {
    fail(ErrorKind::invalid_geometry, "lattice.build_lattice",
         "shape has " + std::to_string(shape_.size()) + " extents for dimension " +
             std::to_string(dimension_));
  }
  std::size_t count = 1;
  for (int extent : shape_) {
    if (extent < 1) {
      fail(ErrorKind::invalid_geometry, "lattice.build_lattice",
           "extent " + std::to_string(extent) + " is not positive");
    }
    count *= static_cast<std::size_t>(extent);
  }

  sites_.reserve(count);
  Site current(dimension_, 0);
  for (std::size_t n = 0; n < count; ++n) {
    sites_.push_back(current);
    for (int axis = dimension_ - 1; axis >= 0; --axis) {
      if (++current[axis] < shape_[axis]) break;
      current[axis] = 0;
    }
  }

  neighbors_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      if (l1(sites_[i], sites_[j]) == 1) {
        bonds_.emplace_back(i, j);
        neighbors_[i].push_back(j);
        neighbors_[j].push_back(i);
      }
    }
  }
}

const Site& LatticeSpec::site(std::size_t index) const {
  require_index(index, "lattice.site");
  return sites_[index];
}

const std::vector<std::size_t>& LatticeSpec::neighbors(std::size_t index) const {
  require_index(index, "lattice.neighbors");
  return neighbors_[index];
}

std::size_t LatticeSpec::index_of(const Site& site) const {
  if (static_cast<int>(site.size()) != dimension_) {
    fail(ErrorKind::unknown_site, "lattice.index_of", "site has wrong dimension");
  }
  std::size_t index = 0;
  for (int axis = 0; axis < dimension_; ++axis) {
    if (site[axis] < 0 || site[axis] >= shape_[axis]) {
      fail(ErrorKind::unknown_site, "lattice.index_of", "site outside the lattice box");
    }
    index = index * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(site[axis]);
  }
  return index;
}

void LatticeSpec::require_index(std::size_t index, const char* where) const {
  if (index >= sites_.size()) {
    fail(ErrorKind::unknown_site, where,
         "site index " + std::to_string(index) + " not in a lattice of " +
             std::to_string(sites_.size()) + " sites");
  }
}

LatticeSpec build_lattice(int dimension, std::span<const int> shape) {
  return LatticeSpec(dimension, std::vector<int>(shape.begin(), shape.end()));
}

int graph_distance(const LatticeSpec& lattice, std::size_t i, std::size_t j) {
  lattice.require_index(i, "lattice.graph_distance");
  lattice.require_index(j, "lattice.graph_distance");
  return l1(lattice.sites()[i], lattice.sites()[j]);
}

int graph_distance(const LatticeSpec& lattice, const Site& i, const Site& j) {
  return graph_distance(lattice, lattice.index_of(i), lattice.index_of(j));
}

bool SiteSubset::contains(std::size_t index) const {
  return std::binary_search(members.begin(), members.end(), index);
}

SiteSubset make_subset(const LatticeSpec& lattice, std::vector<std::size_t> members) {
  for (std::size_t m : members) lattice.require_index(m, "lattice.make_subset");
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  return SiteSubset{std::move(members)};
}

int set_distance(const LatticeSpec& lattice, std::size_t i, const SiteSubset& s) {
  if (s.empty()) fail(ErrorKind::empty_support, "lattice.set_distance", "subset is empty");
  int best = std::numeric_limits<int>::max();
  for (std::size_t j : s.members) best = std::min(best, graph_distance(lattice, i, j));
  return best;
}

int set_distance(const LatticeSpec& lattice, std::span<const std::size_t> indices,
                 const SiteSubset& s) {
  if (s.empty()) fail(ErrorKind::empty_support, "lattice.set_distance", "subset is empty");
  if (indices.empty()) {
    fail(ErrorKind::invalid_input, "lattice.set_distance", "index tuple is empty");
  }
  int best = std::numeric_limits<int>::max();
  for (std::size_t i : indices) best = std::min(best, set_distance(lattice, i, s));
  return best;
}

int subset_distance(const LatticeSpec& lattice, const SiteSubset& a, const SiteSubset& b) {
  if (a.empty() || b.empty()) {
    fail(ErrorKind::empty_support, "lattice.subset_distance", "subset is empty");
  }
  return set_distance(lattice, std::span<const std::size_t>(a.members), b);
}

bool WeightFunction::satisfies_ratio_bound(const LatticeSpec& lattice) const {
  if (values.size() != lattice.size()) return false;
  const double lo = std::exp(-lipschitz_lambda);
  const double hi = std::exp(lipschitz_lambda);
  // relative slack for the rounding in exp(κ d)
  constexpr double slack = 1e-12;
  for (const auto& [i, j] : lattice.bonds()) {
    for (double r : {values[i] / values[j], values[j] / values[i]}) {
      if (r < lo * (1 - slack) || r > hi * (1 + slack)) return false;
    }
  }
  return true;
}

WeightFunction unit_weight(const LatticeSpec& lattice) {
  return WeightFunction{std::vector<double>(lattice.size(), 1.0), 0.0};
}

WeightFunction exponential_weight(const LatticeSpec& lattice, double kappa, const SiteSubset& s) {
  if (!(kappa > 0)) {
    fail(ErrorKind::invalid_parameter, "lattice.exponential_weight", "kappa must be positive");
  }
  WeightFunction w;
  w.lipschitz_lambda = kappa;
  w.values.resize(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    w.values[i] = std::exp(kappa * set_distance(lattice, i, s));
  }
  return w;
}

double tuple_weight(const LatticeSpec& lattice, double kappa, const SiteSubset& s,
                    std::span<const std::size_t> indices) {
  return std::exp(kappa * set_distance(lattice, indices, s));
}

}  // namespace wittenlab
