#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "wittenlab/witten.hpp"

namespace wittenlab {

/// Φᵗ = Φ - t g on a grid. `tilted` carries the sampled tilted potential and
/// its ground density, so ⟨·⟩ below is always the tilted Gibbs mean.
struct PerturbedSystem {
  PotentialModel base;
  Observable g;
  double t = 0.0;
  double bound_T = 0.0;
  std::shared_ptr<const WittenSystem> tilted;

  const GridPtr& grid() const { return tilted->grid(); }
};

PerturbedSystem make_perturbed_system(const GridPtr& grid, const PotentialModel& base,
                                      const Observable& g, double t, const TiltOptions& options = {});

/// The same system at another t, sharing base, g, and the bound.
PerturbedSystem retilt(const PerturbedSystem& sys, double t);

/// θ(t) = log ∫ e^{-Φᵗ} over the box, by log-sum-exp.
double log_partition(const PerturbedSystem& sys);
/// θ at any s from the base potential samples, without rebuilding a system.
double log_partition_at(const PerturbedSystem& sys, double s);

/// e^{-Φᵗ/2}·A_g f from ũ = e^{-Φᵗ/2} f.
ScalarField apply_a_g(const PerturbedSystem& sys, const ScalarField& u, const SolverConfig& cfg,
                      SolveReport* report = nullptr);

struct ThetaSequence {
  std::vector<double> theta;             // θ⁽¹⁾ … θ⁽ⁿ⁾
  std::vector<double> moments;           // ⟨A_g^{k} g⟩, k = 0 … n-1
  std::vector<SolveReport> reports;      // one per A_g step
};

/// Runs the recursion once and returns every order up to n_max.
ThetaSequence theta_sequence(const PerturbedSystem& sys, int n_max, const SolverConfig& cfg,
                             int order_cap = 5);
double theta_derivative(const PerturbedSystem& sys, int n, const SolverConfig& cfg,
                        int order_cap = 5, std::vector<SolveReport>* reports = nullptr);
double pressure_coefficient(const PerturbedSystem& sys, int n, const SolverConfig& cfg);

struct TaylorRow {
  int n = 0;
  double theta_operator = 0.0;
  std::optional<double> theta_fd;
  double fd_error = 0.0;
  double gap = 0.0;           // |operator - fd|
  double relative_gap = 0.0;  // gap / max(|fd|, 1e-300)
  bool within_tolerance = false;
  std::optional<double> a_n;
};

struct TaylorReport {
  int n_max = 0;
  double t = 0.0;
  std::vector<double> theta_derivatives;
  std::vector<double> coefficients_a_n;  // n ≥ 2
  std::vector<std::optional<double>> oracle_derivatives;
  std::vector<double> oracle_errors;
  std::vector<double> root_sequence;     // |a_n|^{1/n}
  std::vector<SolveReport> per_step_solver_reports;
  std::vector<TaylorRow> rows;
};

TaylorReport taylor_report(const PerturbedSystem& sys, int n_max, const SolverConfig& cfg,
                           double fd_step = 1e-2, int order_cap = 5);

struct ParamDerivative {
  OneFormField v;  // e^{-Φᵗ/2} v(t)
  OneFormField w;  // e^{-Φᵗ/2} w(t)
  SolveReport v_report;
  SolveReport w_report;
};

/// Solves for w = dv/dt. sign = +1 uses Hess g·v + (∇g·∇)v on the right,
/// sign = -1 the variant with the second term subtracted.
ParamDerivative param_derivative_w(const PerturbedSystem& sys, const SolverConfig& cfg, int sign = +1);

struct DivergenceCheck {
  double theta = 0.0;         // operator value θ⁽ⁿ⁾(t)
  double divergence = 0.0;    // (n-1)!·div v_n(0), plus g(0) when n = 1
  double residual = 0.0;
};

DivergenceCheck divergence_identity_check(const PerturbedSystem& sys, int n, const SolverConfig& cfg);

}  // namespace wittenlab
