#include "wittenlab/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wittenlab/detail/grid_loops.hpp"
#include "wittenlab/error.hpp"
#include "wittenlab/oracle.hpp"

namespace wittenlab {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// ∇g at every node, component-major, without any weight.
OneFormField plain_gradient(const GridPtr& grid, const Observable& g) {
  return weighted_observable_gradient(grid, g, ScalarField(grid, 1.0));
}

// ⟨f⟩ from ũ = e^{-Φ/2} f.
double half_density_mean(const WittenSystem& sys, const ScalarField& u) {
  return inner_product(u, sys.ground().field) / sys.ground().norm_sq;
}

double log_sum_exp(const GridSpec& grid, const std::vector<double>& phi, const char* where) {
  double lo = std::numeric_limits<double>::infinity();
  for (double p : phi) {
    if (!std::isfinite(p)) fail(ErrorKind::evaluation, where, "potential is not finite on the grid");
    lo = std::min(lo, p);
  }
  const double* w = grid.weights.data();
  const double s = detail::deterministic_sum(phi.size(), [&](std::size_t i) { return w[i] * std::exp(lo - phi[i]); });
  return -lo + std::log(s);
}

void require_converged(const SolveReport& rep) {
  if (!rep.converged) {
    std::ostringstream os;
    os << "relative residual " << rep.final_relative_residual << " after " << rep.iterations << " iterations";
    fail(ErrorKind::non_convergence, rep.operation, os.str());
  }
}

}  // namespace

PerturbedSystem make_perturbed_system(const GridPtr& grid, const PotentialModel& base,
                                      const Observable& g, double t, const TiltOptions& options) {
  if (!grid) fail(ErrorKind::invalid_input, "pressure.perturbed_system", "no grid");
  PerturbedSystem sys{base, g, t, 0.0, nullptr};
  sys.bound_T = options.bound ? *options.bound
                              : tilt_bound(base, g, default_samples(base.size(), options.sample_half_width));
  TiltOptions opts = options;
  opts.bound = sys.bound_T;
  sys.tilted = std::make_shared<const WittenSystem>(grid, tilt_potential(base, g, t, opts));
  if (!(sys.tilted->margin() > 0.0)) {
    std::ostringstream os;
    os << "tilted convexity margin " << sys.tilted->margin() << " is not positive";
    fail(ErrorKind::convexity_risk, "pressure.perturbed_system", os.str());
  }
  return sys;
}

PerturbedSystem retilt(const PerturbedSystem& sys, double t) {
  TiltOptions opts;
  opts.bound = sys.bound_T;
  return make_perturbed_system(sys.grid(), sys.base, sys.g, t, opts);
}

double log_partition(const PerturbedSystem& sys) {
  return log_sum_exp(*sys.grid(), sys.tilted->sampled().phi, "pressure.log_partition");
}

double log_partition_at(const PerturbedSystem& sys, double s) {
  const auto& phi_t = sys.tilted->sampled().phi;
  const ScalarField gv = sample_observable(sys.grid(), sys.g);
  std::vector<double> phi(phi_t.size());
  const double shift = s - sys.t;
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = phi_t[i] - shift * gv.values[i];
  return log_sum_exp(*sys.grid(), phi, "pressure.log_partition");
}

ScalarField apply_a_g(const PerturbedSystem& sys, const ScalarField& u, const SolverConfig& cfg,
                      SolveReport* report) {
  const WittenSystem& w = *sys.tilted;
  require_same_grid(*w.grid(), *u.grid, "pressure.apply_a_g");
  for (double x : u.values) {
    if (!std::isfinite(x)) fail(ErrorKind::evaluation, "pressure.apply_a_g", "input field is not finite");
  }
  const OneFormField G = twisted_gradient(u, w.sampled());
  auto [V, rep] = w.solve_w1(G, cfg);
  rep.operation = "pressure.apply_a_g";
  if (report) *report = rep;

  const OneFormField dg = plain_gradient(w.grid(), sys.g);
  ScalarField out(w.grid());
  const std::size_t n = w.grid()->dims();
  for (std::size_t k = 0; k < n; ++k) {
    const auto vk = V.component(k);
    const auto gk = dg.component(k);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += vk[i] * gk[i];
  }
  return out;
}

ThetaSequence theta_sequence(const PerturbedSystem& sys, int n_max, const SolverConfig& cfg,
                             int order_cap) {
  if (n_max < 1) fail(ErrorKind::invalid_parameter, "pressure.theta_derivative", "n must be >= 1");
  if (n_max > order_cap) {
    std::ostringstream os;
    os << "order " << n_max << " exceeds the configured cap " << order_cap;
    fail(ErrorKind::unsupported_order, "pressure.theta_derivative", os.str());
  }
  const WittenSystem& w = *sys.tilted;
  const auto& psi = w.ground().field;
  ScalarField u = sample_observable(w.grid(), sys.g);
  for (std::size_t i = 0; i < u.size(); ++i) u.values[i] *= psi.values[i];

  ThetaSequence seq;
  seq.moments.push_back(half_density_mean(w, u));
  for (int k = 1; k < n_max; ++k) {
    SolveReport rep;
    u = apply_a_g(sys, u, cfg, &rep);
    require_converged(rep);
    seq.reports.push_back(rep);
    seq.moments.push_back(half_density_mean(w, u));
  }
  for (int n = 1; n <= n_max; ++n) seq.theta.push_back(factorial(n - 1) * seq.moments[n - 1]);
  return seq;
}

double theta_derivative(const PerturbedSystem& sys, int n, const SolverConfig& cfg, int order_cap,
                        std::vector<SolveReport>* reports) {
  ThetaSequence seq = theta_sequence(sys, n, cfg, order_cap);
  if (reports) *reports = std::move(seq.reports);
  return seq.theta.back();
}

double pressure_coefficient(const PerturbedSystem& sys, int n, const SolverConfig& cfg) {
  if (n < 2) fail(ErrorKind::arity, "pressure.pressure_coefficient", "coefficients start at n = 2");
  const ThetaSequence seq =
      sys.t == 0.0 ? theta_sequence(sys, n, cfg, std::max(n, 5)) : theta_sequence(retilt(sys, 0.0), n, cfg, std::max(n, 5));
  const double sites = static_cast<double>(sys.base.size());
  const double a = seq.moments.back() / (n * sites);
  const double theta = seq.theta.back();
  const double rebuilt = a * n * sites * factorial(n - 1);
  if (std::abs(rebuilt - theta) > 1e-12 * std::max(1.0, std::abs(theta))) {
    fail(ErrorKind::evaluation, "pressure.pressure_coefficient", "coefficient bookkeeping is inconsistent");
  }
  return a;
}

TaylorReport taylor_report(const PerturbedSystem& sys, int n_max, const SolverConfig& cfg, double fd_step,
                           int order_cap) {
  ThetaSequence seq = theta_sequence(sys, n_max, cfg, order_cap);
  TaylorReport rep;
  rep.n_max = n_max;
  rep.t = sys.t;
  rep.theta_derivatives = seq.theta;
  rep.per_step_solver_reports = seq.reports;
  const double sites = static_cast<double>(sys.base.size());
  for (int n = 1; n <= n_max; ++n) {
    TaylorRow row;
    row.n = n;
    row.theta_operator = seq.theta[n - 1];
    if (n <= 4) {
      try {
        const FdDerivative fd = fd_theta_derivative(sys, n, fd_step);
        row.theta_fd = fd.value;
        row.fd_error = fd.error_estimate;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::window) throw;
      }
    }
    if (row.theta_fd) {
      row.gap = std::abs(row.theta_operator - *row.theta_fd);
      row.relative_gap = row.gap / std::max(std::abs(*row.theta_fd), 1e-300);
      row.within_tolerance = row.gap <= std::max(1e-3, 0.01 * std::abs(*row.theta_fd));
    }
    if (n >= 2) {
      row.a_n = seq.moments[n - 1] / (n * sites);
      rep.coefficients_a_n.push_back(*row.a_n);
      rep.root_sequence.push_back(std::pow(std::abs(*row.a_n), 1.0 / n));
    }
    rep.oracle_derivatives.push_back(row.theta_fd);
    rep.oracle_errors.push_back(row.fd_error);
    rep.rows.push_back(row);
  }
  return rep;
}

ParamDerivative param_derivative_w(const PerturbedSystem& sys, const SolverConfig& cfg, int sign) {
  if (sign != 1 && sign != -1) fail(ErrorKind::invalid_parameter, "pressure.param_derivative_w", "sign must be +1 or -1");
  const WittenSystem& w = *sys.tilted;
  const GridPtr& grid = w.grid();
  const GridSpec& gs = *grid;
  const std::size_t nodes = gs.total_points;
  const std::size_t n = gs.dims();

  ParamDerivative out;
  auto [V, vrep] = w.solve_w1(w.weighted_gradient(sys.g), cfg);
  vrep.operation = "pressure.param_derivative_v";
  require_converged(vrep);
  out.v = V;
  out.v_report = vrep;

  // (∇g·∇)v in the half-density picture, written as the discrete commutator
  // [Δ_h, g/2]Ṽ + (∇Φ·∇g/2 - Δg/2)Ṽ. This is exactly what differentiating the
  // discrete system in t produces, so the FD quotient of Ṽ converges to it.
  const ScalarField gv = sample_observable(grid, sys.g);
  const OneFormField dg = plain_gradient(grid, sys.g);
  std::vector<double> lap_g(nodes, 0.0);
  std::vector<double> hess_g;
  const bool affine = sys.g.is_affine();
  if (!affine) hess_g.assign(nodes * n * n, 0.0);
  detail::for_nodes(gs, [&](std::size_t i, std::span<const double> x) {
    if (affine) return;
    const Eigen::MatrixXd h = sys.g.hessian(x);
    double tr = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      tr += h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
      for (std::size_t b = 0; b < n; ++b) {
        hess_g[(i * n + a) * n + b] = h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
    lap_g[i] = tr;
  });
  std::vector<double> drift(nodes, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto gk = dg.component(k);
    for (std::size_t i = 0; i < nodes; ++i) drift[i] += w.sampled().grad_at(k, i) * gk[i];
  }

  OneFormField rhs(grid);
  std::vector<double> tmp(nodes), lap(nodes);
  for (std::size_t a = 0; a < n; ++a) {
    const auto va = V.component(a);
    auto ra = rhs.component(a);
    for (std::size_t i = 0; i < nodes; ++i) tmp[i] = 0.5 * gv.values[i] * va[i];
    std::fill(lap.begin(), lap.end(), 0.0);
    detail::add_laplacian(gs, gs.stencil_order, tmp.data(), lap.data());
    std::fill(tmp.begin(), tmp.end(), 0.0);
    detail::add_laplacian(gs, gs.stencil_order, va.data(), tmp.data());
    for (std::size_t i = 0; i < nodes; ++i) {
      const double commutator = lap[i] - 0.5 * gv.values[i] * tmp[i];
      const double directional = commutator + 0.5 * (drift[i] - lap_g[i]) * va[i];
      double hv = 0.0;
      if (!affine) {
        for (std::size_t b = 0; b < n; ++b) hv += hess_g[(i * n + a) * n + b] * V.component(b)[i];
      }
      ra[i] = hv + sign * directional;
    }
  }
  auto [W, wrep] = w.solve_w1(rhs, cfg);
  wrep.operation = "pressure.param_derivative_w";
  require_converged(wrep);
  out.w = std::move(W);
  out.w_report = wrep;
  return out;
}

DivergenceCheck divergence_identity_check(const PerturbedSystem& sys, int n, const SolverConfig& cfg) {
  const char* where = "pressure.divergence_identity_check";
  if (n < 1) fail(ErrorKind::invalid_parameter, where, "n must be >= 1");
  const WittenSystem& w = *sys.tilted;
  const GridSpec& gs = *w.grid();
  const std::size_t dims = gs.dims();
  const std::vector<double> zero(dims, 0.0);
  std::vector<double> grad(dims);
  sys.g.gradient(zero, grad);
  double gnorm = 0.0;
  for (double v : grad) gnorm = std::max(gnorm, std::abs(v));
  std::vector<double> pgrad(dims);
  w.model().gradient(zero, pgrad);
  double pnorm = 0.0;
  for (double v : pgrad) pnorm = std::max(pnorm, std::abs(v));
  if (sys.g.kind() != ObservableKind::bump || gnorm > 1e-8 || pnorm > 1e-8) {
    std::ostringstream os;
    os << "needs a bump observable with grad g(0) = 0 and grad Phi^t(0) = 0; got |grad g(0)| = " << gnorm
       << ", |grad Phi^t(0)| = " << pnorm;
    fail(ErrorKind::assumption_not_met, where, os.str());
  }
  const std::size_t o = gs.origin();
  const int m = gs.points_per_site;
  const int mid = (m - 1) / 2;
  if (gs.axis_index(o, 0) != mid || std::abs(gs.coordinate(mid)) > 1e-12) {
    fail(ErrorKind::assumption_not_met, where, "x = 0 is not a grid node");
  }

  const double g0 = sys.g.value(zero);
  const auto& psi = w.ground().field;
  ScalarField u = sample_observable(w.grid(), sys.g);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.values[i] = (n == 1 ? u.values[i] - g0 : u.values[i]) * psi.values[i];
  }
  DivergenceCheck out;
  double theta_mean = n == 1 ? half_density_mean(w, u) + g0 : 0.0;
  for (int k = 1; k < n; ++k) {
    SolveReport step;
    u = apply_a_g(sys, u, cfg, &step);
    require_converged(step);
  }
  if (n > 1) theta_mean = half_density_mean(w, u);
  out.theta = factorial(n - 1) * theta_mean;

  auto [V, rep] = w.solve_w1(twisted_gradient(u, w.sampled()), cfg);
  rep.operation = where;
  require_converged(rep);
  // D_i Ṽ_i at the origin: five-point difference plus the (zero) drift term
  const double h = gs.spacing;
  double div = 0.0;
  for (std::size_t i = 0; i < dims; ++i) {
    const auto vi = V.component(i);
    const std::size_t s = gs.strides[i];
    const double d = (vi[o - 2 * s] - 8.0 * vi[o - s] + 8.0 * vi[o + s] - vi[o + 2 * s]) / (12.0 * h);
    div += d + 0.5 * w.sampled().grad_at(i, o) * vi[o];
  }
  div *= std::exp(0.5 * w.sampled().phi[o]);
  out.divergence = factorial(n - 1) * div + (n == 1 ? g0 : 0.0);
  out.residual = std::abs(out.divergence - out.theta);
  return out;
}

}  // namespace wittenlab
