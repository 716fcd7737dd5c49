#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wittenlab/lattice.hpp"
#include "wittenlab/potential.hpp"

namespace wittenlab {

struct GridOptions {
  /// Accuracy of the difference operators inside the Witten Laplacians: 2 or 4.
  int stencil_order = 4;
  /// Bytes allowed for m^{|Λ|}·(|Λ|+2) doubles.
  double memory_budget_bytes = 4.0e9;
};

/// The box [-L, L]^Λ with m nodes per site, flattened row-major with site 0
/// as the slowest axis.
struct GridSpec {
  std::shared_ptr<const LatticeSpec> lattice;
  double half_width = 0.0;
  int points_per_site = 0;
  double spacing = 0.0;
  std::size_t total_points = 0;
  int stencil_order = 4;
  std::vector<std::size_t> strides;
  std::vector<double> weights;  // trapezoidal weight per node

  std::size_t dims() const { return strides.size(); }
  double coordinate(int k) const { return -half_width + k * spacing; }
  int axis_index(std::size_t node, std::size_t axis) const {
    return static_cast<int>((node / strides[axis]) % static_cast<std::size_t>(points_per_site));
  }
  void node(std::size_t index, std::span<double> x) const;
  std::size_t origin() const;
  /// Nodes from `node` to the nearest face, measured in grid steps.
  int face_distance(std::size_t index) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return *a.lattice == *b.lattice && a.half_width == b.half_width &&
           a.points_per_site == b.points_per_site && a.stencil_order == b.stencil_order;
  }
};

using GridPtr = std::shared_ptr<const GridSpec>;

GridPtr build_grid(std::shared_ptr<const LatticeSpec> lattice, double half_width, int points,
                   const GridOptions& options = {});

struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0);
  std::size_t size() const { return values.size(); }
};

/// |Λ| components stored one after the other.
struct OneFormField {
  GridPtr grid;
  std::vector<double> values;

  OneFormField() = default;
  explicit OneFormField(GridPtr g, double fill = 0.0);
  std::size_t components() const { return grid->dims(); }
  std::span<double> component(std::size_t i);
  std::span<const double> component(std::size_t i) const;
  ScalarField component_field(std::size_t i) const;
  void set_component(std::size_t i, const ScalarField& f);
};

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

/// Potential data sampled once per node: Φ, ∇Φ (component-major), the Witten
/// potential |∇Φ|²/4 - ΔΦ/2, and Hessian values in the model's pattern order.
struct SampledPotential {
  GridPtr grid;
  std::vector<std::pair<std::size_t, std::size_t>> pattern;
  std::vector<double> phi;
  std::vector<double> grad;
  std::vector<double> witten;
  std::vector<double> hessian;  // pattern.size() values per node, node-major

  double grad_at(std::size_t i, std::size_t node) const { return grad[i * phi.size() + node]; }
};

SampledPotential sample_potential(const GridPtr& grid, const PotentialModel& model);

ScalarField sample_scalar(const GridPtr& grid, const std::function<double(std::span<const double>)>& fn);
ScalarField sample_observable(const GridPtr& grid, const Observable& g);
/// e^{-Φ/2} times each component of ∇g.
OneFormField weighted_observable_gradient(const GridPtr& grid, const Observable& g,
                                          const ScalarField& density);

struct GroundDensity {
  ScalarField field;   // e^{-Φ/2}
  double norm_sq = 0;  // ∫ e^{-Φ} over the box
  double norm_sq_error = 0;
  double min_face_phi = 0;  // smallest Φ on the box faces
};

GroundDensity ground_density(const GridPtr& grid, const PotentialModel& model);
GroundDensity ground_density(const SampledPotential& sampled);

/// First derivative along one axis. Order 2: central inside, one-sided at
/// faces. Order 4: five-point inside, falling back to order 2 near faces.
ScalarField fd_partial(const ScalarField& field, std::size_t axis, int order = 2);
OneFormField fd_gradient(const ScalarField& field, int order = 2);
/// Negative adjoint of the zero-extended central difference.
ScalarField fd_divergence(const OneFormField& v, int order = 2);
/// Dirichlet-0 Laplacian, zero ghost values outside the box.
ScalarField fd_laplacian(const ScalarField& field, int order = 2);

/// ∇u + (∇Φ/2)u, the half-density form of the gradient. Uses the grid's
/// stencil order unless `order` is given.
OneFormField twisted_gradient(const ScalarField& field, const SampledPotential& sampled,
                              int order = 0);
OneFormField twisted_gradient(const ScalarField& field, const PotentialModel& model, int order = 0);

/// Trapezoidal quadrature. The error estimate compares with the rule on every
/// other node.
struct Quadrature {
  double value = 0;
  double error_estimate = 0;
};

Quadrature quadrature(const ScalarField& field);
double inner_product(const ScalarField& a, const ScalarField& b);
double inner_product(const OneFormField& a, const OneFormField& b);
/// Plain Euclidean dot product of the raw node values.
double dot(std::span<const double> a, std::span<const double> b);

void write_field_binary(const std::string& path, const GridSpec& grid, std::size_t components,
                        std::span<const double> values);
struct FieldFile {
  std::size_t sites = 0;
  int points_per_site = 0;
  double half_width = 0;
  std::size_t components = 0;
  std::vector<double> values;
};
FieldFile read_field_binary(const std::string& path);
void write_field_csv(const std::string& path, const ScalarField& field);

}  // namespace wittenlab
