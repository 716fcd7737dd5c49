#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace wittenlab {

using Site = std::vector<int>;
using Bond = std::pair<std::size_t, std::size_t>;

/// A box Λ ⊂ ℤ^d with free boundary. Sites are enumerated lexicographically
/// (first axis most significant); bonds join sites at ℓ¹-distance 1 and are
/// stored with the smaller index first.
class LatticeSpec {
 public:
  LatticeSpec(int dimension, std::vector<int> shape);

  int dimension() const { return dimension_; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return sites_.size(); }

  const Site& site(std::size_t index) const;
  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<std::size_t>& neighbors(std::size_t index) const;

  /// Index of `site`, or an unknown-site error when it lies outside Λ.
  std::size_t index_of(const Site& site) const;
  void require_index(std::size_t index, const char* where) const;

  friend bool operator==(const LatticeSpec& a, const LatticeSpec& b) {
    return a.dimension_ == b.dimension_ && a.shape_ == b.shape_;
  }

 private:
  int dimension_;
  std::vector<int> shape_;
  std::vector<Site> sites_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

LatticeSpec build_lattice(int dimension, std::span<const int> shape);

/// Graph (ℓ¹) distance on Λ. On a box with free boundary the two coincide.
int graph_distance(const LatticeSpec& lattice, std::size_t i, std::size_t j);
int graph_distance(const LatticeSpec& lattice, const Site& i, const Site& j);

struct SiteSubset {
  std::vector<std::size_t> members;  // sorted, unique

  bool empty() const { return members.empty(); }
  bool contains(std::size_t index) const;
};

SiteSubset make_subset(const LatticeSpec& lattice, std::vector<std::size_t> members);

int set_distance(const LatticeSpec& lattice, std::size_t i, const SiteSubset& s);

/// d({i₁,…,i_k}, S): the smallest distance from any listed index to S.
int set_distance(const LatticeSpec& lattice, std::span<const std::size_t> indices,
                 const SiteSubset& s);

/// Distance between two site sets, taken as the minimum over pairs.
int subset_distance(const LatticeSpec& lattice, const SiteSubset& a, const SiteSubset& b);

struct WeightFunction {
  std::vector<double> values;  // ρ(i), one per site
  double lipschitz_lambda = 0.0;

  /// e^{-λ} ≤ ρ(i)/ρ(j) ≤ e^{λ} on every bond.
  bool satisfies_ratio_bound(const LatticeSpec& lattice) const;
};

WeightFunction unit_weight(const LatticeSpec& lattice);
WeightFunction exponential_weight(const LatticeSpec& lattice, double kappa, const SiteSubset& s);

/// e^{κ d({i₁,…,i_k}, S)}, evaluated on demand for index tuples.
double tuple_weight(const LatticeSpec& lattice, double kappa, const SiteSubset& s,
                    std::span<const std::size_t> indices);

}  // namespace wittenlab
