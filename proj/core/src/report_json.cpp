#include "wittenlab/report_json.hpp"

#include <cmath>

namespace wittenlab {

namespace {

// JSON has no NaN or infinity; those become null.
nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? number(*v) : nlohmann::json(nullptr);
}

}  // namespace

void to_json(nlohmann::json& j, const SolveReport& r) {
  j = {{"operation", r.operation},
       {"iterations", r.iterations},
       {"final_relative_residual", number(r.final_relative_residual)},
       {"converged", r.converged},
       {"rayleigh_quotient_min_observed", number(r.rayleigh_quotient_min_observed)}};
}

void to_json(nlohmann::json& j, const CorrelationReport& r) {
  j = {{"value", number(r.value)},
       {"method", to_string(r.method)},
       {"error_estimate", number(r.error_estimate)},
       {"solver_reports", r.solver_reports},
       {"warnings", r.warnings}};
}

void to_json(nlohmann::json& j, const ThreePointTerms& r) {
  j = {{"t1", number(r.t1)},
       {"t2", number(r.t2)},
       {"t3", number(r.t3)},
       {"t4", number(r.t4)},
       {"hessian_asymmetry", number(r.hessian_asymmetry)}};
}

void to_json(nlohmann::json& j, const WeightedDerivativeReport& r) {
  j = {{"order_k", r.order_k},
       {"kappa", r.kappa},
       {"sup_value", number(r.sup_value)},
       {"argmax", r.argmax},
       {"credible_nodes", r.credible_nodes},
       {"credible_phi_limit", number(r.credible_phi_limit)},
       {"solver_report", r.solver_report}};
}

void to_json(nlohmann::json& j, const DecayPoint& r) {
  j = {{"distance", r.distance},
       {"magnitude", number(r.magnitude)},
       {"standard_error", number(r.standard_error)}};
}

void to_json(nlohmann::json& j, const DecayFitReport& r) {
  j = {{"pairs", r.pairs},
       {"excluded", r.excluded},
       {"kappa_est", number(r.kappa_est)},
       {"prefactor_C", number(r.prefactor_C)},
       {"r_squared", number(r.r_squared)}};
}

void to_json(nlohmann::json& j, const ThreePointSample& r) {
  j = {{"j", r.j},
       {"k", r.k},
       {"d_ij", r.d_ij},
       {"d_ik", r.d_ik},
       {"value", number(r.value)},
       {"standard_error", number(r.standard_error)}};
}

void to_json(nlohmann::json& j, const EnvelopeFitReport& r) {
  j = {{"samples", r.samples},
       {"C", number(r.C)},
       {"kappa1", number(r.kappa1)},
       {"chi_squared", number(r.chi_squared)},
       {"max_residual_in_se", number(r.max_residual_in_se)},
       {"within_three_se", r.within_three_se}};
}

void to_json(nlohmann::json& j, const McmcEstimate& r) {
  j = {{"mean", number(r.mean)},
       {"standard_error", number(r.standard_error)},
       {"acceptance_rate", number(r.acceptance_rate)},
       {"effective_sample_size", number(r.effective_sample_size)},
       {"proposal_std", number(r.proposal_std)},
       {"warnings", r.warnings}};
}

void to_json(nlohmann::json& j, const TaylorRow& r) {
  j = {{"n", r.n},
       {"theta_operator", number(r.theta_operator)},
       {"theta_fd", optional_number(r.theta_fd)},
       {"fd_error", number(r.fd_error)},
       {"gap", number(r.gap)},
       {"relative_gap", number(r.relative_gap)},
       {"within_tolerance", r.within_tolerance},
       {"a_n", optional_number(r.a_n)}};
}

void to_json(nlohmann::json& j, const TaylorReport& r) {
  nlohmann::json oracle = nlohmann::json::array();
  for (const auto& v : r.oracle_derivatives) oracle.push_back(optional_number(v));
  j = {{"n_max", r.n_max},
       {"t", r.t},
       {"theta_derivatives", r.theta_derivatives},
       {"coefficients_a_n", r.coefficients_a_n},
       {"oracle_derivatives", oracle},
       {"oracle_errors", r.oracle_errors},
       {"root_sequence", r.root_sequence},
       {"per_step_solver_reports", r.per_step_solver_reports},
       {"rows", r.rows}};
}

void to_json(nlohmann::json& j, const DivergenceCheck& r) {
  j = {{"theta", number(r.theta)}, {"divergence", number(r.divergence)}, {"residual", number(r.residual)}};
}

nlohmann::json describe_grid(const GridSpec& grid) {
  return {{"sites", grid.dims()},
          {"half_width", grid.half_width},
          {"points_per_site", grid.points_per_site},
          {"spacing", grid.spacing},
          {"total_points", grid.total_points},
          {"stencil_order", grid.stencil_order}};
}

}  // namespace wittenlab
