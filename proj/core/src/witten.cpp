#include "wittenlab/witten.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "wittenlab/detail/grid_loops.hpp"
#include "wittenlab/error.hpp"

namespace wittenlab {

using detail::parallel_for;

namespace {

// e^{-Φ} ≥ 1e-12
constexpr double mask_phi_limit = 27.631021115928547;

using Apply = std::function<void(std::span<const double>, std::span<double>)>;
using Project = std::function<void(std::span<double>)>;

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  parallel_for(y.size(), [&](std::size_t i) { y[i] += a * x[i]; });
}

// Preconditioned conjugate gradients. `project`, when set, keeps every vector
// in a subspace on which `apply` is positive definite.
SolveReport pcg(const char* where, const Apply& apply, std::span<const double> b,
                std::span<double> x, const std::vector<double>* diag, const Project& project,
                const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = b.size();
  SolveReport rep;
  rep.operation = where;
  rep.rayleigh_quotient_min_observed = std::numeric_limits<double>::infinity();
  std::fill(x.begin(), x.end(), 0.0);

  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.rayleigh_quotient_min_observed = 0.0;
    return rep;
  }
  const std::size_t limit = cfg.iteration_limit(n);
  const double target = cfg.rel_tolerance * bnorm;

  std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
  if (project) project(r);
  auto precondition = [&] {
    if (diag) {
      parallel_for(n, [&](std::size_t i) { z[i] = r[i] / (*diag)[i]; });
    } else {
      std::copy(r.begin(), r.end(), z.begin());
    }
    if (project) project(z);
  };

  double rnorm = norm(r);
  // a few restarts guard against drift between the recursive and true residual
  for (int restart = 0; restart < 4 && rnorm > target && rep.iterations < limit; ++restart) {
    precondition();
    std::copy(z.begin(), z.end(), p.begin());
    double rz = dot(r, z);
    while (rnorm > target && rep.iterations < limit) {
      apply(p, q);
      if (project) project(q);
      const double pq = dot(p, q);
      const double pp = dot(p, p);
      if (!(pq > 0.0)) {
        std::ostringstream os;
        os << "non-positive Rayleigh quotient " << pq / pp << " at iteration " << rep.iterations;
        fail(ErrorKind::definiteness, where, os.str());
      }
      rep.rayleigh_quotient_min_observed = std::min(rep.rayleigh_quotient_min_observed, pq / pp);
      const double alpha = rz / pq;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      rnorm = norm(r);
      ++rep.iterations;
      if (rnorm <= target) break;
      precondition();
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      parallel_for(n, [&](std::size_t i) { p[i] = z[i] + beta * p[i]; });
    }
    // true residual
    apply(x, q);
    parallel_for(n, [&](std::size_t i) { r[i] = b[i] - q[i]; });
    if (project) project(r);
    rnorm = norm(r);
  }
  rep.final_relative_residual = rnorm / bnorm;
  rep.converged = rnorm <= target;
  return rep;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(rel_tolerance > 0.0) || !(rel_tolerance < 1.0)) {
    fail(ErrorKind::invalid_parameter, "witten.solver_config", "tolerance must lie in (0, 1)");
  }
  if (max_iterations && *max_iterations < 1) {
    fail(ErrorKind::invalid_parameter, "witten.solver_config", "max_iterations must be at least 1");
  }
}

std::size_t SolverConfig::iteration_limit(std::size_t unknowns) const {
  if (max_iterations) return *max_iterations;
  return std::max<std::size_t>(1, static_cast<std::size_t>(10.0 * std::sqrt(static_cast<double>(unknowns))));
}

WittenSystem::WittenSystem(GridPtr grid, PotentialModel model)
    : grid_(std::move(grid)), model_(std::move(model)) {
  if (!grid_) fail(ErrorKind::invalid_input, "witten.system", "no grid");
  if (!(model_.lattice() == *grid_->lattice)) {
    fail(ErrorKind::shape, "witten.system", "model and grid use different lattices");
  }
  sampled_ = sample_potential(grid_, model_);
  ground_ = ground_density(sampled_);
  margin_ = convexity_margin(model_, unit_weight(model_.lattice()),
                             default_samples(model_.size(), grid_->half_width));

  const std::size_t nodes = grid_->total_points;
  const std::size_t n = grid_->dims();
  const double stencil = detail::laplacian_diagonal(*grid_, grid_->stencil_order);
  // clamped so the preconditioner stays positive where the potential dips
  diag0_.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) diag0_[i] = std::max(stencil + sampled_.witten[i], 0.5 * stencil);
  diag1_.resize(nodes * n);
  const std::size_t np = sampled_.pattern.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t i = 0; i < nodes; ++i) {
      diag1_[a * nodes + i] = std::max(stencil + sampled_.witten[i] + sampled_.hessian[i * np + a],
                                       0.5 * stencil);
    }
  }
}

void WittenSystem::apply_w0_raw(std::span<const double> u, std::span<double> out) const {
  const std::size_t nodes = grid_->total_points;
  if (u.size() != nodes || out.size() != nodes) {
    fail(ErrorKind::shape, "witten.apply_w0", "field length does not match the grid");
  }
  std::fill(out.begin(), out.end(), 0.0);
  detail::add_laplacian(*grid_, grid_->stencil_order, u.data(), out.data());
  const double* q = sampled_.witten.data();
  parallel_for(nodes, [&](std::size_t i) { out[i] = -out[i] + q[i] * u[i]; });
}

void WittenSystem::apply_w1_raw(std::span<const double> v, std::span<double> out) const {
  const std::size_t nodes = grid_->total_points;
  const std::size_t n = grid_->dims();
  if (v.size() != nodes * n || out.size() != nodes * n) {
    fail(ErrorKind::shape, "witten.apply_w1", "one-form length does not match the grid");
  }
  for (std::size_t a = 0; a < n; ++a) {
    apply_w0_raw(v.subspan(a * nodes, nodes), out.subspan(a * nodes, nodes));
  }
  const auto& pattern = sampled_.pattern;
  const std::size_t np = pattern.size();
  const double* hv = sampled_.hessian.data();
  parallel_for(nodes, [&](std::size_t i) {
    const double* h = hv + i * np;
    for (std::size_t k = 0; k < np; ++k) {
      const auto [a, b] = pattern[k];
      out[a * nodes + i] += h[k] * v[b * nodes + i];
      if (a != b) out[b * nodes + i] += h[k] * v[a * nodes + i];
    }
  });
}

ScalarField WittenSystem::apply_w0(const ScalarField& u) const {
  require_same_grid(*grid_, *u.grid, "witten.apply_w0");
  ScalarField out(grid_);
  apply_w0_raw(u.values, out.values);
  return out;
}

OneFormField WittenSystem::apply_w1(const OneFormField& v) const {
  require_same_grid(*grid_, *v.grid, "witten.apply_w1");
  OneFormField out(grid_);
  apply_w1_raw(v.values, out.values);
  return out;
}

std::pair<OneFormField, SolveReport> WittenSystem::solve_w1(const OneFormField& rhs,
                                                            const SolverConfig& cfg) const {
  require_same_grid(*grid_, *rhs.grid, "witten.solve_w1");
  if (!(margin_ > 0.0)) {
    std::ostringstream os;
    os << "convexity margin " << margin_ << " is not positive";
    fail(ErrorKind::definiteness, "witten.solve_w1", os.str());
  }
  OneFormField x(grid_);
  const auto rep = pcg(
      "witten.solve_w1",
      [this](std::span<const double> in, std::span<double> out) { apply_w1_raw(in, out); },
      rhs.values, x.values, cfg.preconditioner == Preconditioner::diagonal ? &diag1_ : nullptr, {}, cfg);
  return {std::move(x), rep};
}

std::pair<ScalarField, SolveReport> WittenSystem::solve_w0_projected(const ScalarField& rhs,
                                                                     const SolverConfig& cfg) const {
  require_same_grid(*grid_, *rhs.grid, "witten.solve_zero_form");
  const auto& psi = ground_.field.values;
  const double psi2 = dot(psi, psi);
  Project project = [&](std::span<double> v) {
    const double c = dot(v, psi) / psi2;
    parallel_for(v.size(), [&](std::size_t i) { v[i] -= c * psi[i]; });
  };
  ScalarField b = rhs;
  project(b.values);
  ScalarField u(grid_);
  const auto rep = pcg(
      "witten.solve_zero_form",
      [this](std::span<const double> in, std::span<double> out) { apply_w0_raw(in, out); }, b.values,
      u.values, cfg.preconditioner == Preconditioner::diagonal ? &diag0_ : nullptr, project, cfg);
  return {std::move(u), rep};
}

double WittenSystem::mean(const ScalarField& values) const {
  require_same_grid(*grid_, *values.grid, "witten.mean");
  const auto& psi = ground_.field.values;
  ScalarField w(grid_);
  for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = values.values[i] * psi[i] * psi[i];
  return quadrature(w).value / ground_.norm_sq;
}

OneFormField WittenSystem::weighted_gradient(const Observable& g) const {
  return weighted_observable_gradient(grid_, g, ground_.field);
}

ZeroFormSolution WittenSystem::solve_zero_form(const Observable& g, const SolverConfig& cfg) const {
  ZeroFormSolution sol;
  const std::size_t nodes = grid_->total_points;
  sol.mask.assign(nodes, 0);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (sampled_.phi[i] <= mask_phi_limit) {
      sol.mask[i] = 1;
      ++masked;
    }
  }
  if (masked == 0) fail(ErrorKind::mask_empty, "witten.solve_zero_form", "no node has e^{-Φ} ≥ 1e-12");

  const ScalarField gv = sample_observable(grid_, g);
  sol.mean_g = mean(gv);
  const auto& psi = ground_.field.values;
  ScalarField rhs(grid_);
  for (std::size_t i = 0; i < nodes; ++i) rhs.values[i] = (gv.values[i] - sol.mean_g) * psi[i];
  auto [u, rep] = solve_w0_projected(rhs, cfg);
  sol.u = std::move(u);
  sol.report = rep;

  sol.f = ScalarField(grid_, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < nodes; ++i) {
    if (sol.mask[i]) sol.f.values[i] = sol.u.values[i] / psi[i];
  }
  ScalarField up(grid_);
  for (std::size_t i = 0; i < nodes; ++i) up.values[i] = sol.u.values[i] * psi[i];
  sol.mean_f = quadrature(up).value / ground_.norm_sq;
  return sol;
}

double WittenSystem::spectral_gap_probe(std::size_t trials, const SolverConfig& cfg) const {
  if (trials == 0) fail(ErrorKind::invalid_parameter, "witten.spectral_gap_probe", "trials must be >= 1");
  const std::size_t nodes = grid_->total_points;
  const std::size_t total = nodes * grid_->dims();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto rayleigh = [&](const std::vector<double>& v) {
    std::vector<double> w(total);
    apply_w1_raw(v, w);
    return dot(v, w) / dot(v, v);
  };

  std::vector<double> best;
  double best_q = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> v(total, 0.0);
    for (std::size_t k = 0; k < total; ++k) {
      // interior-supported: zero on the faces
      if (grid_->face_distance(k % nodes) > 0) v[k] = normal(rng);
    }
    const double q = rayleigh(v);
    if (q < best_q) {
      best_q = q;
      best = std::move(v);
    }
  }

  // inverse iteration pulls the best probe towards the bottom of the spectrum
  OneFormField v(grid_);
  v.values = best;
  SolverConfig inner = cfg;
  inner.rel_tolerance = std::max(cfg.rel_tolerance, 1e-6);
  for (int it = 0; it < 12; ++it) {
    const double s = 1.0 / std::sqrt(dot(v.values, v.values));
    for (double& e : v.values) e *= s;
    auto [next, rep] = solve_w1(v, inner);
    v = std::move(next);
    best_q = std::min(best_q, rayleigh(v.values));
  }
  return best_q;
}

}  // namespace wittenlab
