#pragma once

#include "wittenlab/mcmc.hpp"
#include "wittenlab/pressure.hpp"
#include "wittenlab/witten.hpp"

namespace wittenlab {

/// Largest N·|Λ| the direct solvers accept.
inline constexpr std::size_t dense_unknown_limit = 50000;

/// Direct sparse LU solve of the assembled W⁽¹⁾ system.
OneFormField dense_solve_w1(const WittenSystem& sys, const OneFormField& rhs);

/// Direct solve of W⁽⁰⁾u = rhs with u ⟂ e^{-Φ/2}, via the bordered system.
ScalarField dense_solve_w0_projected(const WittenSystem& sys, const ScalarField& rhs);

/// Smallest eigenvalue of the assembled W⁽¹⁾ (dense symmetric eigensolve).
double dense_w1_lowest_eigenvalue(const WittenSystem& sys);

struct FdDerivative {
  double value = 0.0;
  double error_estimate = 0.0;  // |Richardson - D(h/2)|
  double coarse = 0.0;          // D(h)
  double fine = 0.0;            // D(h/2)
};

/// Central differences of log_partition in t, Richardson-refined once.
FdDerivative fd_theta_derivative(const PerturbedSystem& sys, int n, double step = 1e-2);

/// (V(t+ε)e^{-εg/2} - V(t))/ε: the difference quotient of v in the
/// half-density picture of time t.
OneFormField fd_v_derivative(const PerturbedSystem& sys, double epsilon, const SolverConfig& cfg);

}  // namespace wittenlab
