#include "wittenlab/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "wittenlab/detail/grid_loops.hpp"
#include "wittenlab/error.hpp"

namespace wittenlab {

using detail::parallel_for;

namespace {

constexpr double gibbs_mask_phi = 27.631021115928547;  // e^{-Φ} ≥ 1e-12
constexpr double credible_gap = 9.210340371976184;     // ln(1e4)

void require_converged(const SolveReport& rep) {
  if (!rep.converged) {
    std::ostringstream os;
    os << "relative residual " << rep.final_relative_residual << " after " << rep.iterations
       << " iterations";
    fail(ErrorKind::non_convergence, rep.operation, os.str());
  }
}

// Quadrature of a nodewise product divided by Z, with error estimate.
Quadrature gibbs_quadrature(const WittenSystem& sys, const ScalarField& integrand) {
  const Quadrature q = quadrature(integrand);
  const double z = sys.ground().norm_sq;
  Quadrature out;
  out.value = q.value / z;
  out.error_estimate = q.error_estimate / z + std::abs(out.value) * sys.ground().norm_sq_error / z;
  return out;
}

// D_a w = ∂_a w + (Φ_a/2) w
ScalarField twisted_partial(const WittenSystem& sys, const ScalarField& w, std::size_t axis) {
  ScalarField d = fd_partial(w, axis, sys.grid()->stencil_order);
  const std::size_t nodes = sys.grid()->total_points;
  const double* grad = sys.sampled().grad.data() + axis * nodes;
  parallel_for(nodes, [&](std::size_t i) { d.values[i] += 0.5 * grad[i] * w.values[i]; });
  return d;
}

std::vector<double> site_weights(const LatticeSpec& lattice, const Observable& g, double kappa,
                                 const char* where) {
  const auto& s = g.support();
  if (s.empty()) fail(ErrorKind::empty_support, where, "observable has no lattice support");
  if (s.members.size() == lattice.size()) {
    fail(ErrorKind::support, where, "support is all of the lattice; distance weights are trivial");
  }
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    fail(ErrorKind::invalid_parameter, where, "kappa must be nonnegative");
  }
  std::vector<double> w(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    w[i] = std::exp(2.0 * kappa * set_distance(lattice, i, s));
  }
  return w;
}

void validate_sites(const LatticeSpec& lattice, std::size_t i, std::span<const std::size_t> js,
                    std::span<const std::size_t> ks, const char* where) {
  lattice.require_index(i, where);
  for (auto list : {js, ks}) {
    std::set<std::size_t> seen;
    for (std::size_t s : list) {
      lattice.require_index(s, where);
      if (s == i || !seen.insert(s).second) {
        fail(ErrorKind::invalid_input, where, "sites must be distinct, repeated " + std::to_string(s));
      }
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> site_pairs(std::span<const std::size_t> js,
                                                            std::span<const std::size_t> ks) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j : js) {
    for (std::size_t k : ks) {
      if (j != k) pairs.emplace(std::min(j, k), std::max(j, k));
    }
  }
  return {pairs.begin(), pairs.end()};
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::hs_formula: return "hs_formula";
    case Method::quadrature: return "quadrature";
    case Method::mcmc: return "mcmc";
  }
  return "unknown";
}

CorrelationReport gibbs_mean(const WittenSystem& sys, const Observable& g) {
  if (!(sys.ground().norm_sq > 0.0)) fail(ErrorKind::measure, "correlation.gibbs_mean", "Z ≤ 0");
  ScalarField f = sample_observable(sys.grid(), g);
  const auto& psi = sys.ground().field.values;
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] *= psi[i] * psi[i];
  const Quadrature q = gibbs_quadrature(sys, f);
  CorrelationReport r;
  r.value = q.value;
  r.method = Method::quadrature;
  r.error_estimate = q.error_estimate;
  return r;
}

CorrelationReport covariance_hs(const WittenSystem& sys, const Observable& g, const Observable& h,
                                const SolverConfig& cfg) {
  const OneFormField rhs = sys.weighted_gradient(g);
  auto [v, rep] = sys.solve_w1(rhs, cfg);
  require_converged(rep);
  const OneFormField dh = sys.weighted_gradient(h);
  const std::size_t nodes = sys.grid()->total_points;
  ScalarField prod(sys.grid());
  for (std::size_t a = 0; a < sys.grid()->dims(); ++a) {
    const auto va = v.component(a);
    const auto ha = dh.component(a);
    for (std::size_t i = 0; i < nodes; ++i) prod.values[i] += va[i] * ha[i];
  }
  const Quadrature q = gibbs_quadrature(sys, prod);
  CorrelationReport r;
  r.value = q.value;
  r.method = Method::hs_formula;
  r.solver_reports.push_back(rep);
  // quadrature delta plus what the residual can move the pairing by
  r.error_estimate = q.error_estimate + rep.final_relative_residual * std::abs(q.value);
  r.warnings = sys.model().warnings();
  return r;
}

CorrelationReport truncated_correlation(const WittenSystem& sys, std::span<const Observable> gs) {
  if (gs.size() < 2 || gs.size() > 4) {
    fail(ErrorKind::arity, "correlation.truncated_correlation",
         "quadrature path takes 2 to 4 observables, got " + std::to_string(gs.size()));
  }
  std::vector<ScalarField> centered;
  for (const auto& g : gs) {
    ScalarField f = sample_observable(sys.grid(), g);
    const double m = sys.mean(f);
    for (double& v : f.values) v -= m;
    centered.push_back(std::move(f));
  }
  const auto& psi = sys.ground().field.values;
  ScalarField prod(sys.grid());
  for (std::size_t i = 0; i < prod.size(); ++i) {
    double p = psi[i] * psi[i];
    for (const auto& f : centered) p *= f.values[i];
    prod.values[i] = p;
  }
  const Quadrature q = gibbs_quadrature(sys, prod);
  CorrelationReport r;
  r.value = q.value;
  r.method = Method::quadrature;
  r.error_estimate = q.error_estimate;
  return r;
}

CorrelationReport threepoint_hs(const WittenSystem& sys, const Observable& g1, const Observable& g2,
                                const Observable& g3, const SolverConfig& cfg,
                                ThreePointTerms* terms) {
  const GridPtr& grid = sys.grid();
  const std::size_t n = grid->dims();
  const std::size_t nodes = grid->total_points;
  CorrelationReport r;
  r.method = Method::hs_formula;

  std::vector<OneFormField> v;
  for (const Observable* g : {&g1, &g2, &g3}) {
    auto [sol, rep] = sys.solve_w1(sys.weighted_gradient(*g), cfg);
    require_converged(rep);
    r.solver_reports.push_back(rep);
    v.push_back(std::move(sol));
  }

  // H_ab = D_a V1_b = e^{-Φ/2} ∂_a∂_b f₁
  std::vector<ScalarField> hess(n * n);
  for (std::size_t b = 0; b < n; ++b) {
    const ScalarField vb = v[0].component_field(b);
    for (std::size_t a = 0; a < n; ++a) hess[a * n + b] = twisted_partial(sys, vb, a);
  }
  double asym = 0.0, total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t i = 0; i < nodes; ++i) {
        const double x = hess[a * n + b].values[i];
        const double d = x - hess[b * n + a].values[i];
        asym += d * d;
        total += x * x;
      }
    }
  }
  const double rel_asym = total > 0.0 ? std::sqrt(asym / total) : 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t i = 0; i < nodes; ++i) {
        const double s = 0.5 * (hess[a * n + b].values[i] + hess[b * n + a].values[i]);
        hess[a * n + b].values[i] = s;
        hess[b * n + a].values[i] = s;
      }
    }
  }
  if (rel_asym > 1e-2) {
    std::ostringstream os;
    os << "finite-difference Hessian of f1 is asymmetric by " << rel_asym << " (relative)";
    r.warnings.push_back(os.str());
  }

  std::vector<ScalarField> parts(4, ScalarField(grid));
  detail::for_nodes(*grid, [&](std::size_t i, std::span<const double> x) {
    std::vector<double> dg2(n), dg3(n);
    g2.gradient(x, dg2);
    g3.gradient(x, dg3);
    const Eigen::MatrixXd h2 = g2.is_affine() ? Eigen::MatrixXd() : g2.hessian(x);
    const Eigen::MatrixXd h3 = g3.is_affine() ? Eigen::MatrixXd() : g3.hessian(x);
    double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
    for (std::size_t a = 0; a < n; ++a) {
      const double v2a = v[1].values[a * nodes + i];
      const double v3a = v[2].values[a * nodes + i];
      for (std::size_t b = 0; b < n; ++b) {
        const double hab = hess[a * n + b].values[i];
        const double v1b = v[0].values[b * nodes + i];
        t1 += v3a * hab * dg2[b];
        t3 += v2a * hab * dg3[b];
        if (h2.size()) t2 += v3a * h2(a, b) * v1b;
        if (h3.size()) t4 += v2a * h3(a, b) * v1b;
      }
    }
    parts[0].values[i] = t1;
    parts[1].values[i] = t2;
    parts[2].values[i] = t3;
    parts[3].values[i] = t4;
  });
  double err = 0.0;
  std::vector<double> t(4);
  for (int k = 0; k < 4; ++k) {
    const Quadrature q = gibbs_quadrature(sys, parts[k]);
    t[k] = q.value;
    err += q.error_estimate;
  }
  r.value = t[0] + t[1] + t[2] + t[3];
  r.error_estimate = err;
  if (terms) *terms = {t[0], t[1], t[2], t[3], rel_asym};
  return r;
}

double intermediate_identity_check(const WittenSystem& sys, const Observable& c, const Observable& g,
                                   const SolverConfig& cfg) {
  const Observable cs[2] = {c, g};
  const double lhs = truncated_correlation(sys, cs).value;

  const ZeroFormSolution sol = sys.solve_zero_form(g, cfg);
  require_converged(sol.report);
  const OneFormField df = twisted_gradient(sol.u, sys.sampled());  // e^{-Φ/2}∇f
  const OneFormField dc = sys.weighted_gradient(c);
  ScalarField prod(sys.grid());
  const std::size_t nodes = sys.grid()->total_points;
  for (std::size_t a = 0; a < sys.grid()->dims(); ++a) {
    for (std::size_t i = 0; i < nodes; ++i) prod.values[i] += df.values[a * nodes + i] * dc.values[a * nodes + i];
  }
  const double rhs = gibbs_quadrature(sys, prod).value;
  return std::abs(lhs - rhs);
}

std::vector<std::uint8_t> credible_mask(const WittenSystem& sys, int stencil_reach, double* phi_limit) {
  const double limit = std::min(gibbs_mask_phi, sys.ground().min_face_phi - credible_gap);
  const GridSpec& g = *sys.grid();
  std::vector<std::uint8_t> mask(g.total_points, 0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.total_points; ++i) {
    if (sys.sampled().phi[i] <= limit && g.face_distance(i) >= stencil_reach) {
      mask[i] = 1;
      ++count;
    }
  }
  if (count == 0) {
    fail(ErrorKind::mask_empty, "correlation.credible_mask",
         "no node has Φ below the credible limit; enlarge L");
  }
  if (phi_limit) *phi_limit = limit;
  return mask;
}

WeightedDerivativeReport weighted_gradient_report(const WittenSystem& sys, const Observable& g,
                                                  double kappa, const SolverConfig& cfg,
                                                  bool keep_profile) {
  const char* where = "correlation.weighted_gradient_report";
  const auto rho2 = site_weights(sys.model().lattice(), g, kappa, where);
  const ZeroFormSolution sol = sys.solve_zero_form(g, cfg);
  require_converged(sol.report);
  const OneFormField df = twisted_gradient(sol.u, sys.sampled());

  WeightedDerivativeReport rep;
  rep.order_k = 1;
  rep.kappa = kappa;
  rep.solver_report = sol.report;
  const auto mask = credible_mask(sys, 2, &rep.credible_phi_limit);
  const GridSpec& grid = *sys.grid();
  const std::size_t nodes = grid.total_points;
  const auto& psi = sys.ground().field.values;
  ScalarField profile(sys.grid(), std::numeric_limits<double>::quiet_NaN());
  std::size_t arg = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    if (!mask[i]) continue;
    ++rep.credible_nodes;
    double s = 0.0;
    for (std::size_t a = 0; a < grid.dims(); ++a) {
      const double d = df.values[a * nodes + i] / psi[i];
      s += d * d * rho2[a];
    }
    profile.values[i] = s;
    if (s > rep.sup_value) {
      rep.sup_value = s;
      arg = i;
    }
  }
  rep.argmax.resize(grid.dims());
  grid.node(arg, rep.argmax);
  if (keep_profile) rep.per_node_profile = std::move(profile);
  return rep;
}

WeightedDerivativeReport weighted_higher_report(const WittenSystem& sys, const Observable& g, int k,
                                                double kappa, const SolverConfig& cfg,
                                                bool keep_profile) {
  const char* where = "correlation.weighted_higher_report";
  if (k > 3) fail(ErrorKind::unsupported_order, where, "orders above 3 are not supported");
  if (k < 2) fail(ErrorKind::invalid_parameter, where, "k must be 2 or 3 (use the gradient report for 1)");
  const LatticeSpec& lattice = sys.model().lattice();
  site_weights(lattice, g, kappa, where);  // validates support and κ
  const ZeroFormSolution sol = sys.solve_zero_form(g, cfg);
  require_converged(sol.report);

  const std::size_t n = sys.grid()->dims();
  // nondecreasing index tuples with their permutation counts
  std::vector<std::vector<std::size_t>> tuples;
  if (k == 2) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) tuples.push_back({i, j});
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        for (std::size_t l = j; l < n; ++l) tuples.push_back({i, j, l});
  }

  std::vector<ScalarField> first(n);
  for (std::size_t a = 0; a < n; ++a) first[a] = twisted_partial(sys, sol.u, a);
  std::vector<ScalarField> derivs;
  std::vector<double> factor;
  for (const auto& t : tuples) {
    ScalarField d = first[t.back()];
    for (std::size_t q = t.size() - 1; q-- > 0;) d = twisted_partial(sys, d, t[q]);
    derivs.push_back(std::move(d));
    std::size_t perms = 1;
    if (k == 2) {
      perms = t[0] == t[1] ? 1 : 2;
    } else {
      const bool ab = t[0] == t[1], bc = t[1] == t[2];
      perms = (ab && bc) ? 1 : (ab || bc) ? 3 : 6;
    }
    factor.push_back(static_cast<double>(perms) *
                     tuple_weight(lattice, 2.0 * kappa, g.support(), t));
  }

  WeightedDerivativeReport rep;
  rep.order_k = k;
  rep.kappa = kappa;
  rep.solver_report = sol.report;
  const auto mask = credible_mask(sys, 2 * k, &rep.credible_phi_limit);
  const GridSpec& grid = *sys.grid();
  const auto& psi = sys.ground().field.values;
  ScalarField profile(sys.grid(), std::numeric_limits<double>::quiet_NaN());
  std::size_t arg = 0;
  for (std::size_t i = 0; i < grid.total_points; ++i) {
    if (!mask[i]) continue;
    ++rep.credible_nodes;
    double s = 0.0;
    for (std::size_t q = 0; q < derivs.size(); ++q) {
      const double d = derivs[q].values[i] / psi[i];
      s += factor[q] * d * d;
    }
    profile.values[i] = s;
    if (s > rep.sup_value) {
      rep.sup_value = s;
      arg = i;
    }
  }
  rep.argmax.resize(grid.dims());
  grid.node(arg, rep.argmax);
  if (keep_profile) rep.per_node_profile = std::move(profile);
  return rep;
}

DecayFitReport decay_fit(std::span<const DecayPoint> points, double noise_floor) {
  DecayFitReport rep;
  std::set<int> distances;
  for (const auto& p : points) {
    if (!std::isfinite(p.magnitude) || p.standard_error < 0.0) {
      fail(ErrorKind::invalid_input, "correlation.decay_fit", "non-finite magnitude or negative error");
    }
    const double floor = std::max(noise_floor, 2.0 * p.standard_error);
    if (std::abs(p.magnitude) <= floor) {
      ++rep.excluded;
      continue;
    }
    rep.pairs.push_back({p.distance, std::abs(p.magnitude), p.standard_error});
    distances.insert(p.distance);
  }
  if (distances.size() < 2) {
    fail(ErrorKind::insufficient_data, "correlation.decay_fit",
         "need at least 2 distinct distances above the noise floor, have " +
             std::to_string(distances.size()));
  }
  const double m = static_cast<double>(rep.pairs.size());
  double sx = 0, sy = 0;
  for (const auto& p : rep.pairs) {
    sx += p.distance;
    sy += std::log(p.magnitude);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : rep.pairs) {
    const double dx = p.distance - mx, dy = std::log(p.magnitude) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  rep.kappa_est = -slope;
  rep.prefactor_C = std::exp(intercept);
  double ss_res = 0.0;
  for (const auto& p : rep.pairs) {
    const double e = std::log(p.magnitude) - (intercept + slope * p.distance);
    ss_res += e * e;
  }
  rep.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return rep;
}

bool monotone_within_errors(std::span<const DecayPoint> points) {
  for (std::size_t q = 1; q < points.size(); ++q) {
    const auto& a = points[q - 1];
    const auto& b = points[q];
    const double bar = 2.0 * std::hypot(a.standard_error, b.standard_error);
    if (std::abs(b.magnitude) - std::abs(a.magnitude) > bar) return false;
  }
  return true;
}

EnvelopeFitReport envelope_fit(std::vector<ThreePointSample> samples, std::span<const double> kappa_grid) {
  if (samples.empty()) fail(ErrorKind::insufficient_data, "correlation.envelope_fit", "no samples");
  std::vector<double> grid(kappa_grid.begin(), kappa_grid.end());
  if (grid.empty()) {
    for (int q = 1; q <= 100; ++q) grid.push_back(0.05 * q);
  }
  EnvelopeFitReport rep;
  rep.chi_squared = std::numeric_limits<double>::infinity();
  auto weight = [](const ThreePointSample& s) {
    return s.standard_error > 0.0 ? 1.0 / (s.standard_error * s.standard_error) : 1.0;
  };
  for (double kappa : grid) {
    double num = 0.0, den = 0.0;
    for (const auto& s : samples) {
      const double env = std::exp(-kappa * s.d_ij) + std::exp(-kappa * s.d_ik);
      num += weight(s) * std::abs(s.value) * env;
      den += weight(s) * env * env;
    }
    const double c = std::max(0.0, num / den);
    double chi = 0.0;
    for (const auto& s : samples) {
      const double env = std::exp(-kappa * s.d_ij) + std::exp(-kappa * s.d_ik);
      const double r = std::abs(s.value) - c * env;
      chi += weight(s) * r * r;
    }
    if (chi < rep.chi_squared) {
      rep.chi_squared = chi;
      rep.C = c;
      rep.kappa1 = kappa;
    }
  }
  rep.max_residual_in_se = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const double env = std::exp(-rep.kappa1 * s.d_ij) + std::exp(-rep.kappa1 * s.d_ik);
    const double r = std::abs(s.value) - rep.C * env;
    double in_se;
    if (s.standard_error > 0.0) {
      in_se = r / s.standard_error;
    } else {
      in_se = r > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    rep.max_residual_in_se = std::max(rep.max_residual_in_se, in_se);
  }
  rep.within_three_se = rep.max_residual_in_se <= 3.0;
  rep.samples = std::move(samples);
  return rep;
}

EnvelopeFitReport threepoint_bound_check(const PotentialModel& model, std::size_t i,
                                         std::span<const std::size_t> js,
                                         std::span<const std::size_t> ks, const McmcConfig& cfg,
                                         std::span<const double> kappa_grid) {
  const char* where = "correlation.threepoint_bound_check";
  const LatticeSpec& lattice = model.lattice();
  validate_sites(lattice, i, js, ks, where);
  const auto pairs = site_pairs(js, ks);
  if (pairs.empty()) fail(ErrorKind::insufficient_data, where, "no site pairs with j ≠ k");
  std::vector<std::vector<std::size_t>> tuples;
  for (const auto& [j, k] : pairs) tuples.push_back({i, j, k});
  const auto est = mcmc_truncated_correlations(model, tuples, cfg);
  std::vector<ThreePointSample> samples;
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [j, k] = pairs[q];
    samples.push_back({j, k, graph_distance(lattice, i, j), graph_distance(lattice, i, k), est[q].mean,
                       est[q].standard_error});
  }
  return envelope_fit(std::move(samples), kappa_grid);
}

EnvelopeFitReport threepoint_bound_check(const WittenSystem& sys, std::size_t i,
                                         std::span<const std::size_t> js,
                                         std::span<const std::size_t> ks,
                                         std::span<const double> kappa_grid) {
  const char* where = "correlation.threepoint_bound_check";
  const LatticeSpec& lattice = sys.model().lattice();
  validate_sites(lattice, i, js, ks, where);
  const auto pairs = site_pairs(js, ks);
  if (pairs.empty()) fail(ErrorKind::insufficient_data, where, "no site pairs with j ≠ k");
  const auto lat = sys.model().lattice_ptr();
  std::vector<ThreePointSample> samples;
  for (const auto& [j, k] : pairs) {
    const Observable gs[3] = {Observable::coordinate(lat, i), Observable::coordinate(lat, j),
                              Observable::coordinate(lat, k)};
    const auto r = truncated_correlation(sys, gs);
    samples.push_back({j, k, graph_distance(lattice, i, j), graph_distance(lattice, i, k), r.value,
                       r.error_estimate});
  }
  return envelope_fit(std::move(samples), kappa_grid);
}

}  // namespace wittenlab
