#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wittenlab/grid.hpp"
#include "wittenlab/potential.hpp"

namespace wittenlab {

enum class Preconditioner { none, diagonal };

struct SolverConfig {
  double rel_tolerance = 1e-8;
  std::optional<std::size_t> max_iterations;  // default 10·√N
  Preconditioner preconditioner = Preconditioner::diagonal;
  std::uint64_t seed = 20240611;

  void validate() const;
  std::size_t iteration_limit(std::size_t unknowns) const;
};

struct SolveReport {
  std::string operation;
  std::size_t iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  double rayleigh_quotient_min_observed = 0.0;
};

struct ZeroFormSolution {
  ScalarField u;                 // half-density solution, e^{-Φ/2} f
  ScalarField f;                 // NaN outside the mask
  std::vector<std::uint8_t> mask;  // e^{-Φ} ≥ 1e-12
  double mean_g = 0.0;
  double mean_f = 0.0;
  SolveReport report;
};

/// Grid, model, and everything sampled from the model on that grid. All
/// linear algebra is in the half-density picture, where W⁽⁰⁾ and W⁽¹⁾ are
/// symmetric in the plain Euclidean product of node values.
class WittenSystem {
 public:
  WittenSystem(GridPtr grid, PotentialModel model);

  const GridPtr& grid() const { return grid_; }
  const PotentialModel& model() const { return model_; }
  const SampledPotential& sampled() const { return sampled_; }
  const GroundDensity& ground() const { return ground_; }
  /// δ̂_o: unweighted convexity margin on default samples in the grid box.
  double margin() const { return margin_; }

  ScalarField apply_w0(const ScalarField& u) const;
  OneFormField apply_w1(const OneFormField& v) const;
  void apply_w0_raw(std::span<const double> u, std::span<double> out) const;
  void apply_w1_raw(std::span<const double> v, std::span<double> out) const;

  std::pair<OneFormField, SolveReport> solve_w1(const OneFormField& rhs, const SolverConfig& cfg) const;
  /// W⁽⁰⁾u = rhs on the complement of the ground density.
  std::pair<ScalarField, SolveReport> solve_w0_projected(const ScalarField& rhs,
                                                         const SolverConfig& cfg) const;
  ZeroFormSolution solve_zero_form(const Observable& g, const SolverConfig& cfg) const;

  double spectral_gap_probe(std::size_t trials, const SolverConfig& cfg) const;

  /// Gibbs mean of sampled values with the box quadrature.
  double mean(const ScalarField& values) const;
  /// e^{-Φ/2}·∇g for an observable.
  OneFormField weighted_gradient(const Observable& g) const;

 private:
  GridPtr grid_;
  PotentialModel model_;
  SampledPotential sampled_;
  GroundDensity ground_;
  double margin_ = 0.0;
  std::vector<double> diag0_;
  std::vector<double> diag1_;
};

}  // namespace wittenlab
