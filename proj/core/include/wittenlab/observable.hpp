#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wittenlab/lattice.hpp"

namespace wittenlab {

enum class ObservableKind { coordinate, linear, bump, coordinate_square, constant };

std::string to_string(ObservableKind kind);

/// A smooth function g of the spins with lattice support S_g. Every kind is a
/// sum or product of one-variable factors, so partials of any order are exact.
class Observable {
 public:
  static Observable coordinate(std::shared_ptr<const LatticeSpec> lattice, std::size_t site);
  static Observable linear(std::shared_ptr<const LatticeSpec> lattice,
                           std::vector<std::size_t> sites, std::vector<double> coefficients);
  /// exp(-a |x_Γ - c|²) with a = 1/(2 width²).
  static Observable bump(std::shared_ptr<const LatticeSpec> lattice,
                         std::vector<std::size_t> sites, std::vector<double> center,
                         double width);
  static Observable coordinate_square(std::shared_ptr<const LatticeSpec> lattice,
                                      std::size_t site);
  static Observable constant(std::shared_ptr<const LatticeSpec> lattice, double value);

  /// Same observable shifted by a constant; gradients are unchanged.
  Observable plus_constant(double shift) const;

  ObservableKind kind() const { return kind_; }
  const LatticeSpec& lattice() const { return *lattice_; }
  const std::shared_ptr<const LatticeSpec>& lattice_ptr() const { return lattice_; }
  const SiteSubset& support() const { return support_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& center() const { return center_; }
  double bump_rate() const { return a_; }
  double offset() const { return offset_; }

  /// True when Hess g ≡ 0.
  bool is_affine() const;

  double value(std::span<const double> x) const;
  /// Writes the full |Λ|-length gradient.
  void gradient(std::span<const double> x, std::span<double> out) const;
  Eigen::MatrixXd hessian(std::span<const double> x) const;
  /// ∂^k g / ∂x_{i₁}…∂x_{i_k}, any k (empty tuple gives the value).
  double partial(std::span<const double> x, std::span<const std::size_t> indices) const;

  std::string describe() const;

 private:
  Observable() = default;

  std::shared_ptr<const LatticeSpec> lattice_;
  ObservableKind kind_ = ObservableKind::constant;
  SiteSubset support_;
  std::vector<double> coefficients_;  // aligned with support_.members
  std::vector<double> center_;        // aligned with support_.members
  double a_ = 0.0;
  double offset_ = 0.0;
};

}  // namespace wittenlab
