#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wittenlab/mcmc.hpp"
#include "wittenlab/witten.hpp"

namespace wittenlab {

enum class Method { hs_formula, quadrature, mcmc };

std::string to_string(Method method);

struct CorrelationReport {
  double value = 0.0;
  Method method = Method::quadrature;
  std::vector<SolveReport> solver_reports;
  double error_estimate = 0.0;  // quadrature refinement delta or MCMC standard error
  std::vector<std::string> warnings;
};

CorrelationReport gibbs_mean(const WittenSystem& sys, const Observable& g);

/// ⟨W⁽¹⁾⁻¹(e^{-Φ/2}∇g), e^{-Φ/2}∇h⟩ / Z.
CorrelationReport covariance_hs(const WittenSystem& sys, const Observable& g, const Observable& h,
                                const SolverConfig& cfg);

/// ⟨(g₁-⟨g₁⟩)…(g_k-⟨g_k⟩)⟩ by box quadrature, 2 ≤ k ≤ 4.
CorrelationReport truncated_correlation(const WittenSystem& sys, std::span<const Observable> gs);

/// The four-term decomposition of the truncated three-point function, built
/// from one-form solves for ∇f₁, ∇f₂, ∇f₃.
struct ThreePointTerms {
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
  double hessian_asymmetry = 0;  // relative, before symmetrization
};

CorrelationReport threepoint_hs(const WittenSystem& sys, const Observable& g1, const Observable& g2,
                                const Observable& g3, const SolverConfig& cfg,
                                ThreePointTerms* terms = nullptr);

/// |⟨c(g-⟨g⟩)⟩ - ⟨∇f·∇c⟩| with f from the zero-form solve.
double intermediate_identity_check(const WittenSystem& sys, const Observable& c, const Observable& g,
                                   const SolverConfig& cfg);

struct WeightedDerivativeReport {
  int order_k = 1;
  double kappa = 0.0;
  double sup_value = 0.0;
  std::vector<double> argmax;        // node where the sup is attained
  std::size_t credible_nodes = 0;    // nodes the sup ranges over
  double credible_phi_limit = 0.0;   // Φ threshold of that region
  std::optional<ScalarField> per_node_profile;
  SolveReport solver_report;
};

/// Region where the truncated-box solution is trusted for derivative
/// reports: Φ well below its smallest face value, and away from the faces.
std::vector<std::uint8_t> credible_mask(const WittenSystem& sys, int stencil_reach,
                                        double* phi_limit = nullptr);

WeightedDerivativeReport weighted_gradient_report(const WittenSystem& sys, const Observable& g,
                                                  double kappa, const SolverConfig& cfg,
                                                  bool keep_profile = false);
WeightedDerivativeReport weighted_higher_report(const WittenSystem& sys, const Observable& g, int k,
                                                double kappa, const SolverConfig& cfg,
                                                bool keep_profile = false);

struct DecayPoint {
  int distance = 0;
  double magnitude = 0.0;
  double standard_error = 0.0;
};

struct DecayFitReport {
  std::vector<DecayPoint> pairs;  // used in the fit
  std::size_t excluded = 0;       // at or below the noise floor
  double kappa_est = 0.0;
  double prefactor_C = 0.0;
  double r_squared = 0.0;
};

/// Least squares on log-magnitudes. A point is dropped when its magnitude is
/// at most max(noise_floor, 2·standard_error).
DecayFitReport decay_fit(std::span<const DecayPoint> points, double noise_floor = 1e-12);

/// True when |c_{j+1}| - |c_j| ≤ 2·sqrt(se_j² + se_{j+1}²) for consecutive points.
bool monotone_within_errors(std::span<const DecayPoint> points);

struct ThreePointSample {
  std::size_t j = 0, k = 0;
  int d_ij = 0, d_ik = 0;
  double value = 0.0;
  double standard_error = 0.0;
};

struct EnvelopeFitReport {
  std::vector<ThreePointSample> samples;
  double C = 0.0;
  double kappa1 = 0.0;
  double chi_squared = 0.0;
  double max_residual_in_se = 0.0;  // max over samples of (|v| - C·env)/se
  bool within_three_se = false;
};

/// Fits |v| ≤ C[e^{-κ₁d_ij} + e^{-κ₁d_ik}]: C by weighted least squares at each
/// κ₁ of the grid, then the κ₁ with the smallest χ².
EnvelopeFitReport envelope_fit(std::vector<ThreePointSample> samples,
                               std::span<const double> kappa_grid = {});

/// Three-point truncated correlations of coordinates ⟨x_i, x_j, x_k⟩ for j ∈ js,
/// k ∈ ks (j < k), estimated by MCMC, then envelope-fitted.
EnvelopeFitReport threepoint_bound_check(const PotentialModel& model, std::size_t i,
                                         std::span<const std::size_t> js,
                                         std::span<const std::size_t> ks, const McmcConfig& cfg,
                                         std::span<const double> kappa_grid = {});

/// Same, with box quadrature on a grid.
EnvelopeFitReport threepoint_bound_check(const WittenSystem& sys, std::size_t i,
                                         std::span<const std::size_t> js,
                                         std::span<const std::size_t> ks,
                                         std::span<const double> kappa_grid = {});

}  // namespace wittenlab
