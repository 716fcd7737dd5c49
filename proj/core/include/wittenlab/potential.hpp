#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wittenlab/lattice.hpp"
#include "wittenlab/observable.hpp"

namespace wittenlab {

enum class PotentialKind { gaussian, kac, tilted };

std::string to_string(PotentialKind kind);

using Point = std::vector<double>;

/// Φ(x) = x²/2 + Ψ(x) on ℝ^Λ. A tilted model is Φ - t g for a base model and
/// observable g. Models are immutable and cheap to copy.
class PotentialModel {
 public:
  PotentialKind kind() const { return kind_; }
  const LatticeSpec& lattice() const { return *lattice_; }
  const std::shared_ptr<const LatticeSpec>& lattice_ptr() const { return lattice_; }
  std::size_t size() const { return lattice_->size(); }
  double nu() const { return nu_; }

  /// Only valid for tilted models.
  const PotentialModel& base() const;
  const Observable& tilt_observable() const;
  double tilt() const { return t_; }

  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  double laplacian(std::span<const double> x) const;
  Eigen::MatrixXd hessian(std::span<const double> x) const;

  /// Upper-triangular (i ≤ j) positions where HessΦ can be nonzero, diagonal first.
  const std::vector<std::pair<std::size_t, std::size_t>>& hessian_pattern() const {
    return pattern_;
  }
  /// Hessian entries in hessian_pattern() order.
  void hessian_values(std::span<const double> x, std::span<double> out) const;

  /// Partial derivative along an index tuple of order 1..4.
  double partial(std::span<const double> x, std::span<const std::size_t> indices) const;

  /// Φ(x with x_i replaced by y) - Φ(x).
  double delta_energy(std::span<const double> x, std::size_t i, double y) const;

  /// Index sets on which all mixed partials of order ≥ 3 live.
  std::vector<std::vector<std::size_t>> interaction_cliques() const;

  const std::vector<std::string>& warnings() const { return warnings_; }
  std::string describe() const;

  friend PotentialModel gaussian_potential(std::shared_ptr<const LatticeSpec> lattice);
  friend PotentialModel kac_potential(std::shared_ptr<const LatticeSpec> lattice, double nu);
  friend struct TiltAccess;

 private:
  PotentialModel() = default;
  void build_pattern();

  PotentialKind kind_ = PotentialKind::gaussian;
  std::shared_ptr<const LatticeSpec> lattice_;
  double nu_ = 0.0;
  double c_ = 0.0;  // √(ν/2)
  std::shared_ptr<const PotentialModel> base_;
  std::shared_ptr<const Observable> g_;
  double t_ = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pattern_;
  std::vector<std::string> warnings_;
};

PotentialModel gaussian_potential(std::shared_ptr<const LatticeSpec> lattice);
PotentialModel kac_potential(std::shared_ptr<const LatticeSpec> lattice, double nu);

/// Low-discrepancy points in [-L, L]^n (Halton, first n primes as bases).
std::vector<Point> halton_samples(std::size_t n, std::size_t count, double half_width);
/// The origin followed by `count` Halton points in [-L, L]^n.
std::vector<Point> default_samples(std::size_t n, double half_width, std::size_t count = 1000);

double convexity_margin(const PotentialModel& model, const WeightFunction& weight,
                        const std::vector<Point>& samples);

/// δ̂_o / (1 + sup ‖Hess g‖₂) over the samples, δ̂_o the unweighted margin.
double tilt_bound(const PotentialModel& base, const Observable& g,
                  const std::vector<Point>& samples);

struct TiltOptions {
  std::optional<double> bound;  // computed from default samples when absent
  double sample_half_width = 6.0;
  bool allow_outside_bound = false;
};

PotentialModel tilt_potential(const PotentialModel& base, const Observable& g, double t,
                              const TiltOptions& options = {});

double growth_condition_report(const PotentialModel& model, int k, double kappa,
                               const SiteSubset& s, const std::vector<Point>& samples);

}  // namespace wittenlab
