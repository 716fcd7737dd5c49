#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "wittenlab/correlation.hpp"
#include "wittenlab/error.hpp"
#include "wittenlab/oracle.hpp"
#include "wittenlab/pressure.hpp"
#include "wittenlab/report_json.hpp"

namespace wlab {

using nlohmann::json;
namespace wl = wittenlab;

namespace {

json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

// A value with the method that produced it and its error estimate.
json tagged(double value, const std::string& method, double error) {
  return {{"value", num(value)}, {"method", method}, {"error_estimate", num(error)}};
}

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  wl::fail(wl::ErrorKind::config, "cli.config", path + ": " + msg);
}

std::string path_of(const std::string& command, const std::string& key) {
  return "/commands/" + command + "/" + key;
}

template <class T>
T get_or(const json& cmd, const std::string& command, const std::string& key, T fallback) {
  if (!cmd.contains(key)) return fallback;
  try {
    return cmd.at(key).get<T>();
  } catch (const json::exception&) {
    bad(path_of(command, key), "has the wrong type");
  }
}

std::vector<std::string> name_list(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected a list of observable names");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_string()) bad(path + "/" + std::to_string(k), "expected an observable name");
    out.push_back(j[k].get<std::string>());
  }
  return out;
}

std::vector<std::size_t> site_list(const json& j, const wl::LatticeSpec& lat, const std::string& path) {
  if (!j.is_array()) bad(path, "expected a list of sites");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number_unsigned()) bad(path + "/" + std::to_string(k), "expected a site index");
    const auto s = j[k].get<std::size_t>();
    if (s >= lat.size()) bad(path + "/" + std::to_string(k), "site outside the lattice");
    out.push_back(s);
  }
  return out;
}

std::string first_observable(const Experiment& e, const json& cmd, const std::string& command) {
  if (cmd.contains("observable")) {
    if (!cmd.at("observable").is_string()) bad(path_of(command, "observable"), "expected an observable name");
    const auto name = cmd.at("observable").get<std::string>();
    e.observable(name, path_of(command, "observable"));
    return name;
  }
  if (e.observables.empty()) bad("/observables", "command '" + command + "' needs at least one observable");
  return e.observables.begin()->first;
}

// Observable pairs from `pairs`, or every unordered pair (with repeats).
std::vector<std::pair<std::string, std::string>> observable_pairs(const Experiment& e, const json& cmd,
                                                                  const std::string& command) {
  std::vector<std::pair<std::string, std::string>> out;
  if (cmd.contains("pairs")) {
    const json& p = cmd.at("pairs");
    if (!p.is_array()) bad(path_of(command, "pairs"), "expected a list of name pairs");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto path = path_of(command, "pairs") + "/" + std::to_string(k);
      const auto names = name_list(p[k], path);
      if (names.size() != 2) bad(path, "expected exactly two names");
      e.observable(names[0], path + "/0");
      e.observable(names[1], path + "/1");
      out.emplace_back(names[0], names[1]);
    }
    return out;
  }
  for (auto a = e.observables.begin(); a != e.observables.end(); ++a) {
    for (auto b = a; b != e.observables.end(); ++b) out.emplace_back(a->first, b->first);
  }
  return out;
}

wl::WittenSystem make_system(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  for (const auto& w : e.potential->warnings()) ctx.warn(w);
  return wl::WittenSystem(e.build_grid(), *e.potential);
}

void record_all(RunContext& ctx, const std::vector<wl::SolveReport>& reports) {
  for (const auto& r : reports) ctx.record(r);
}

std::ofstream open_csv(const RunContext& ctx, const std::string& name) {
  std::ofstream f(std::filesystem::path(ctx.out_dir) / name);
  if (!f) bad("--out", "cannot write " + name);
  f.precision(17);
  return f;
}

double weighted_l2_error(const wl::WittenSystem& sys, const wl::ZeroFormSolution& z,
                         const std::function<double(std::span<const double>)>& exact) {
  const auto& grid = *sys.grid();
  std::vector<double> x(grid.dims());
  double num_sum = 0.0, den = 0.0;
  for (std::size_t i = 0; i < grid.total_points; ++i) {
    if (!z.mask[i]) continue;
    grid.node(i, x);
    const double w = grid.weights[i] * std::exp(-sys.sampled().phi[i]);
    const double d = z.f.values[i] - exact(x);
    num_sum += w * d * d;
    den += w;
  }
  return std::sqrt(num_sum / den);
}

json cmd_describe(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const auto& lat = *e.lattice;
  for (const auto& w : e.potential->warnings()) ctx.warn(w);
  json r;
  r["lattice"] = {{"dimension", lat.dimension()}, {"shape", lat.shape()}, {"sites", lat.size()},
                  {"bonds", lat.bonds().size()}};
  r["potential"] = {{"kind", wl::to_string(e.potential->kind())},
                    {"nu", e.potential->nu()},
                    {"description", e.potential->describe()}};
  const auto grid = e.build_grid();
  r["grid"] = wl::describe_grid(*grid);
  r["grid"]["memory_bytes"] = static_cast<double>(grid->total_points) * static_cast<double>(grid->dims() + 2) * 8.0;
  const auto samples = wl::default_samples(lat.size(), e.half_width);
  const double margin = wl::convexity_margin(*e.potential, wl::unit_weight(lat), samples);
  r["convexity_margin"] = tagged(margin, "sampled_hessian_min_eigenvalue", std::nan(""));
  r["convexity_margin"]["samples"] = samples.size();
  json obs = json::object();
  const auto tilt_samples = wl::default_samples(lat.size(), 6.0);
  for (const auto& [name, g] : e.observables) {
    obs[name] = {{"kind", wl::to_string(g.kind())},
                 {"description", g.describe()},
                 {"support", g.support().members},
                 {"tilt_bound_T", num(wl::tilt_bound(*e.potential, g, tilt_samples))}};
  }
  r["observables"] = obs;
  return r;
}

json cmd_solve(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const json cmd = e.command("solve");
  const std::string name = first_observable(e, cmd, "solve");
  const wl::WittenSystem sys = make_system(ctx);
  const auto z = sys.solve_zero_form(e.observables.at(name), e.solver);
  ctx.record(z.report);
  const auto mask_nodes = static_cast<std::size_t>(std::count(z.mask.begin(), z.mask.end(), std::uint8_t{1}));
  json r;
  r["observable"] = name;
  r["grid"] = wl::describe_grid(*sys.grid());
  r["solver_report"] = z.report;
  r["mean_g"] = tagged(z.mean_g, "quadrature", sys.ground().norm_sq_error / sys.ground().norm_sq);
  r["mean_f"] = tagged(z.mean_f, "quadrature", z.report.final_relative_residual);
  r["mask_nodes"] = mask_nodes;
  const auto dir = std::filesystem::path(ctx.out_dir);
  wl::write_field_binary((dir / "solve_u.wlf").string(), *sys.grid(), 1, z.u.values);
  r["fields"] = {"solve_u.wlf"};
  if (sys.grid()->dims() <= 2) {
    wl::write_field_csv((dir / "solve_f.csv").string(), z.f);
    r["fields"].push_back("solve_f.csv");
  }
  return r;
}

json cmd_cov(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const json cmd = e.command("cov");
  const auto pairs = observable_pairs(e, cmd, "cov");
  const bool with_mcmc = get_or<bool>(cmd, "cov", "mcmc", false);
  const wl::WittenSystem sys = make_system(ctx);
  json rows = json::array();
  for (const auto& [a, b] : pairs) {
    const auto& ga = e.observables.at(a);
    const auto& gb = e.observables.at(b);
    const auto hs = wl::covariance_hs(sys, ga, gb, e.solver);
    record_all(ctx, hs.solver_reports);
    const wl::Observable both[] = {ga, gb};
    const auto quad = wl::truncated_correlation(sys, both);
    const double gap = std::abs(hs.value - quad.value);
    json row = {{"a", a}, {"b", b}, {"hs", hs}, {"quadrature", quad}, {"gap", gap},
                {"tolerance", std::max(1e-3, 0.01 * std::abs(quad.value))}};
    row["agree"] = gap <= row["tolerance"].get<double>();
    if (with_mcmc && ga.kind() == wl::ObservableKind::coordinate && gb.kind() == wl::ObservableKind::coordinate) {
      const auto est = wl::mcmc_truncated_correlations(
          *e.potential, {{ga.support().members[0], gb.support().members[0]}}, e.mcmc);
      row["mcmc"] = est[0];
      for (const auto& w : est[0].warnings) ctx.warn(w);
    }
    rows.push_back(row);
  }
  return {{"pairs", rows}, {"grid", wl::describe_grid(*sys.grid())}};
}

json cmd_npoint(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const json cmd = e.command("npoint");
  if (!cmd.contains("tuples")) bad(path_of("npoint", "tuples"), "missing field");
  const json& tuples = cmd.at("tuples");
  if (!tuples.is_array()) bad(path_of("npoint", "tuples"), "expected a list of name lists");
  const wl::WittenSystem sys = make_system(ctx);
  json rows = json::array();
  for (std::size_t k = 0; k < tuples.size(); ++k) {
    const auto path = path_of("npoint", "tuples") + "/" + std::to_string(k);
    const auto names = name_list(tuples[k], path);
    if (names.size() < 2 || names.size() > 4) bad(path, "tuples hold 2 to 4 observables");
    std::vector<wl::Observable> gs;
    for (std::size_t q = 0; q < names.size(); ++q) gs.push_back(e.observable(names[q], path + "/" + std::to_string(q)));
    json row = {{"observables", names}};
    const auto quad = wl::truncated_correlation(sys, gs);
    row["quadrature"] = quad;
    if (gs.size() == 2) {
      const auto hs = wl::covariance_hs(sys, gs[0], gs[1], e.solver);
      record_all(ctx, hs.solver_reports);
      row["hs"] = hs;
    } else if (gs.size() == 3) {
      wl::ThreePointTerms terms;
      const auto hs = wl::threepoint_hs(sys, gs[0], gs[1], gs[2], e.solver, &terms);
      record_all(ctx, hs.solver_reports);
      for (const auto& w : hs.warnings) ctx.warn(w);
      row["hs"] = hs;
      row["terms"] = terms;
      const double gap = std::abs(hs.value - quad.value);
      row["gap"] = gap;
      row["agree"] = std::abs(quad.value) < 1e-2 ? gap <= 1e-4 : gap <= 0.02 * std::abs(quad.value);
    }
    rows.push_back(row);
  }
  return {{"tuples", rows}, {"grid", wl::describe_grid(*sys.grid())}};
}

json cmd_decay(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const json cmd = e.command("decay");
  const auto& lat = *e.lattice;
  const std::size_t origin = get_or<std::size_t>(cmd, "decay", "origin", 0);
  if (origin >= lat.size()) bad(path_of("decay", "origin"), "site outside the lattice");
  std::vector<std::size_t> sites;
  if (cmd.contains("sites")) {
    sites = site_list(cmd.at("sites"), lat, path_of("decay", "sites"));
  } else {
    for (std::size_t j = 0; j < lat.size(); ++j) {
      if (j != origin) sites.push_back(j);
    }
  }
  std::stable_sort(sites.begin(), sites.end(), [&](std::size_t a, std::size_t b) {
    return wl::graph_distance(lat, origin, a) < wl::graph_distance(lat, origin, b);
  });
  const std::string method = get_or<std::string>(cmd, "decay", "method", "mcmc");
  if (method != "mcmc" && method != "hs") bad(path_of("decay", "method"), "expected 'mcmc' or 'hs'");
  const double floor = get_or<double>(cmd, "decay", "noise_floor", 1e-12);

  json r;
  r["origin"] = origin;
  r["method"] = method;
  std::vector<wl::DecayPoint> points;
  std::optional<wl::WittenSystem> sys;
  if (method == "mcmc") {
    std::vector<std::vector<std::size_t>> tuples;
    for (std::size_t j : sites) tuples.push_back({origin, j});
    const auto est = wl::mcmc_truncated_correlations(*e.potential, tuples, e.mcmc);
    json raw = json::array();
    for (std::size_t k = 0; k < sites.size(); ++k) {
      points.push_back({wl::graph_distance(lat, origin, sites[k]), std::abs(est[k].mean), est[k].standard_error});
      raw.push_back({{"site", sites[k]}, {"estimate", est[k]}});
      for (const auto& w : est[k].warnings) ctx.warn(w);
    }
    r["correlations"] = raw;
  } else {
    sys.emplace(make_system(ctx));
    const auto x0 = wl::Observable::coordinate(e.lattice, origin);
    json raw = json::array();
    for (std::size_t j : sites) {
      const auto hs = wl::covariance_hs(*sys, x0, wl::Observable::coordinate(e.lattice, j), e.solver);
      record_all(ctx, hs.solver_reports);
      points.push_back({wl::graph_distance(lat, origin, j), std::abs(hs.value), hs.error_estimate});
      raw.push_back({{"site", j}, {"estimate", hs}});
    }
    r["correlations"] = raw;
  }
  {
    auto csv = open_csv(ctx, "decay.csv");
    csv << "distance,abs_cov,stderr\n";
    for (const auto& p : points) csv << p.distance << ',' << p.magnitude << ',' << p.standard_error << '\n';
  }
  try {
    r["fit"] = wl::decay_fit(points, floor);
  } catch (const wl::Error& err) {
    if (err.kind() != wl::ErrorKind::insufficient_data) throw;
    r["fit"] = nullptr;
    ctx.warn(std::string("decay fit skipped: ") + err.what());
  }
  r["monotone_within_errors"] = wl::monotone_within_errors(points);

  if (cmd.contains("threepoint")) {
    const json& tp = cmd.at("threepoint");
    const auto base = path_of("decay", "threepoint");
    const std::size_t i = tp.contains("i") ? site_list(json::array({tp.at("i")}), lat, base + "/i")[0] : origin;
    const auto js = site_list(tp.value("js", json::array()), lat, base + "/js");
    const auto ks = site_list(tp.value("ks", json::array()), lat, base + "/ks");
    r["threepoint"] = method == "mcmc" ? wl::threepoint_bound_check(*e.potential, i, js, ks, e.mcmc)
                                       : wl::threepoint_bound_check(*sys, i, js, ks);
  }
  r["tables"] = {"decay.csv"};
  return r;
}

json cmd_weighted(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const json cmd = e.command("weighted");
  const std::string name = first_observable(e, cmd, "weighted");
  const double kappa = get_or<double>(cmd, "weighted", "kappa", 0.2);
  const int order = get_or<int>(cmd, "weighted", "order", 1);
  const bool profile = get_or<bool>(cmd, "weighted", "profile", false);
  const wl::WittenSystem sys = make_system(ctx);
  const auto& g = e.observables.at(name);
  const auto rep = order == 1 ? wl::weighted_gradient_report(sys, g, kappa, e.solver, profile)
                              : wl::weighted_higher_report(sys, g, order, kappa, e.solver, profile);
  ctx.record(rep.solver_report);
  json r = {{"observable", name}, {"report", rep}, {"grid", wl::describe_grid(*sys.grid())}};
  r["sup"] = tagged(rep.sup_value, order == 1 ? "one_form_solve" : "zero_form_solve_fd_partials",
                    rep.solver_report.final_relative_residual * std::abs(rep.sup_value));
  if (profile && rep.per_node_profile) {
    wl::write_field_binary((std::filesystem::path(ctx.out_dir) / "weighted_profile.wlf").string(), *sys.grid(), 1,
                           rep.per_node_profile->values);
    r["fields"] = {"weighted_profile.wlf"};
  }
  return r;
}

double field_norm(const wl::OneFormField& a) { return std::sqrt(wl::dot(a.values, a.values)); }

double distance(const wl::OneFormField& a, const wl::OneFormField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) s += (a.values[k] - b.values[k]) * (a.values[k] - b.values[k]);
  return std::sqrt(s);
}

// Solves the w system with both right-hand-side signs and compares each with
// the difference quotients of v at ε and ε/2.
json sign_check(RunContext& ctx, const wl::PerturbedSystem& psys, double epsilon) {
  const auto& cfg = ctx.experiment.solver;
  const auto q1 = wl::fd_v_derivative(psys, epsilon, cfg);
  const auto q2 = wl::fd_v_derivative(psys, 0.5 * epsilon, cfg);
  json rows = json::array();
  std::vector<int> in_range;
  for (int sign : {+1, -1}) {
    const auto pw = wl::param_derivative_w(psys, cfg, sign);
    ctx.record(pw.v_report);
    ctx.record(pw.w_report);
    const double e1 = distance(q1, pw.w), e2 = distance(q2, pw.w);
    const double ratio = e1 / e2;
    const bool ok = ratio >= 1.6 && ratio <= 2.4;
    if (ok) in_range.push_back(sign);
    rows.push_back({{"sign", sign > 0 ? "plus" : "minus"},
                    {"norm_w", field_norm(pw.w)},
                    {"error_eps", num(e1)},
                    {"error_half_eps", num(e2)},
                    {"ratio", num(ratio)},
                    {"ratio_in_range", ok},
                    {"w_solver_report", pw.w_report}});
  }
  json r = {{"epsilon", epsilon}, {"variants", rows}, {"accepted_ratio_range", {1.6, 2.4}}};
  r["matched_sign"] = in_range.size() == 1 ? json(in_range[0] > 0 ? "plus" : "minus") : json("undetermined");
  return r;
}

json cmd_taylor(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const json cmd = e.command("taylor");
  const std::string name = first_observable(e, cmd, "taylor");
  const int n_max = get_or<int>(cmd, "taylor", "n_max", 4);
  const double t = get_or<double>(cmd, "taylor", "t", 0.0);
  const double step = get_or<double>(cmd, "taylor", "fd_step", 2e-2);
  const int cap = get_or<int>(cmd, "taylor", "order_cap", 5);
  for (const auto& w : e.potential->warnings()) ctx.warn(w);
  const auto psys = wl::make_perturbed_system(e.build_grid(), *e.potential, e.observables.at(name), t);
  const auto rep = wl::taylor_report(psys, n_max, e.solver, step, cap);
  record_all(ctx, rep.per_step_solver_reports);
  json r = {{"observable", name}, {"t", t}, {"bound_T", psys.bound_T}, {"report", rep},
            {"grid", wl::describe_grid(*psys.grid())}};
  r["log_partition"] = tagged(wl::log_partition(psys), "log_sum_exp_quadrature",
                              psys.tilted->ground().norm_sq_error / psys.tilted->ground().norm_sq);
  {
    auto csv = open_csv(ctx, "taylor.csv");
    csv << "n,operator,fd,gap\n";
    for (const auto& row : rep.rows) {
      csv << row.n << ',' << row.theta_operator << ',';
      if (row.theta_fd) csv << *row.theta_fd;
      csv << ',';
      if (row.theta_fd) csv << row.gap;
      csv << '\n';
    }
  }
  bool within = true;
  for (const auto& row : rep.rows) {
    if (row.n >= 2 && row.theta_fd && !row.within_tolerance) within = false;
  }
  r["fd_agreement"] = within;
  if (get_or<bool>(cmd, "taylor", "sign_check", true)) {
    r["w_sign_check"] = sign_check(ctx, psys, get_or<double>(cmd, "taylor", "epsilon", 1e-2));
  }
  r["tables"] = {"taylor.csv"};
  return r;
}

struct CheckList {
  json items = json::array();
  bool all_passed = true;

  void add(const std::string& name, double value, double tolerance, bool passed, const std::string& method) {
    items.push_back({{"name", name}, {"value", num(value)}, {"tolerance", num(tolerance)}, {"passed", passed},
                     {"method", method}});
    all_passed = all_passed && passed;
  }
  void skip(const std::string& name, const std::string& reason) {
    items.push_back({{"name", name}, {"skipped", reason}});
  }
};

json cmd_check(RunContext& ctx) {
  const Experiment& e = ctx.experiment;
  const json cmd = e.command("check");
  const auto& lat = *e.lattice;
  const wl::WittenSystem sys = make_system(ctx);
  const auto& grid = sys.grid();
  const std::size_t nodes = grid->total_points;
  const std::size_t dims = grid->dims();
  CheckList checks;
  std::mt19937_64 rng(e.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_vector = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
  };

  // symmetry of both operators in the Euclidean product
  for (const std::size_t comps : {std::size_t{1}, dims}) {
    const std::size_t n = nodes * comps;
    const auto u = random_vector(n), v = random_vector(n);
    std::vector<double> au(n), av(n);
    if (comps == 1) {
      sys.apply_w0_raw(u, au);
      sys.apply_w0_raw(v, av);
    } else {
      sys.apply_w1_raw(u, au);
      sys.apply_w1_raw(v, av);
    }
    const double lhs = wl::dot(au, v), rhs = wl::dot(u, av);
    const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
    checks.add(comps == 1 ? "w0_symmetry" : "w1_symmetry", rel, 1e-10, rel <= 1e-10, "random_vectors");
  }

  const double margin = sys.margin();
  const std::size_t trials = get_or<std::size_t>(cmd, "check", "gap_trials", 4);
  const double gap = sys.spectral_gap_probe(trials, e.solver);
  checks.add("spectral_gap_probe_vs_margin", gap, margin - 0.02, gap >= margin - 0.02, "inverse_iteration");

  for (const auto& [name, g] : e.observables) {
    const auto cov = wl::covariance_hs(sys, g, g, e.solver);
    record_all(ctx, cov.solver_reports);
    const auto grad_sq = wl::sample_scalar(grid, [&](std::span<const double> x) {
      std::vector<double> d(dims);
      g.gradient(x, d);
      double s = 0.0;
      for (double v : d) s += v * v;
      return s;
    });
    const double bound = sys.mean(grad_sq) / margin + 1e-3;
    checks.add("brascamp_lieb/" + name, cov.value, bound, cov.value <= bound, "hs_formula");
  }

  for (const auto& [a, b] : observable_pairs(e, cmd, "check")) {
    const auto& ga = e.observables.at(a);
    const auto& gb = e.observables.at(b);
    const auto hs = wl::covariance_hs(sys, ga, gb, e.solver);
    record_all(ctx, hs.solver_reports);
    const wl::Observable both[] = {ga, gb};
    const auto quad = wl::truncated_correlation(sys, both);
    const double tol = std::max(1e-3, 0.01 * std::abs(quad.value));
    const double gap_ab = std::abs(hs.value - quad.value);
    checks.add("hs_vs_quadrature/" + a + "," + b, gap_ab, tol, gap_ab <= tol, "hs_formula|quadrature");
  }

  if (nodes * dims <= wl::dense_unknown_limit) {
    const std::size_t rhs_count = get_or<std::size_t>(cmd, "check", "dense_rhs", 3);
    for (std::size_t k = 0; k < rhs_count; ++k) {
      wl::OneFormField rhs(grid);
      rhs.values = random_vector(nodes * dims);
      const auto dense = wl::dense_solve_w1(sys, rhs);
      const auto [iter, rep] = sys.solve_w1(rhs, e.solver);
      ctx.record(rep);
      const double rel = distance(dense, iter) / field_norm(dense);
      const double tol = 10.0 * e.solver.rel_tolerance;
      checks.add("dense_vs_iterative/" + std::to_string(k), rel, tol, rel <= tol, "sparse_lu|pcg");
    }
  } else {
    checks.skip("dense_vs_iterative", "grid too large for the direct solver");
  }

  if (e.potential->kind() == wl::PotentialKind::gaussian) {
    for (std::size_t i = 0; i < lat.size(); ++i) {
      for (std::size_t j = i; j < lat.size(); ++j) {
        const auto c = wl::covariance_hs(sys, wl::Observable::coordinate(e.lattice, i),
                                         wl::Observable::coordinate(e.lattice, j), e.solver);
        record_all(ctx, c.solver_reports);
        const std::string name = "gaussian_cov/" + std::to_string(i) + "," + std::to_string(j);
        if (i == j) {
          checks.add(name, c.value, 0.01, std::abs(c.value - 1.0) <= 0.01, "hs_formula");
        } else {
          checks.add(name, c.value, 1e-3, std::abs(c.value) <= 1e-3, "hs_formula");
        }
      }
    }
    const auto x0 = wl::Observable::coordinate(e.lattice, 0);
    const auto z = sys.solve_zero_form(x0, e.solver);
    ctx.record(z.report);
    const double err = weighted_l2_error(sys, z, [](std::span<const double> x) { return x[0]; });
    checks.add("gaussian_zero_form", err, 1e-3, err <= 1e-3, "projected_pcg");
    const auto psys = wl::make_perturbed_system(grid, *e.potential, x0, 0.0);
    const double theta = wl::log_partition(psys);
    const double exact = 0.5 * static_cast<double>(lat.size()) * std::log(2.0 * M_PI);
    checks.add("gaussian_log_partition", theta - exact, 1e-4, std::abs(theta - exact) <= 1e-4, "log_sum_exp_quadrature");
  }

  if (cmd.contains("taylor_observable")) {
    const auto name = get_or<std::string>(cmd, "check", "taylor_observable", "");
    const auto& g = e.observable(name, path_of("check", "taylor_observable"));
    const int n_max = get_or<int>(cmd, "check", "taylor_n_max", 4);
    const auto psys = wl::make_perturbed_system(grid, *e.potential, g, 0.0);
    const auto rep = wl::taylor_report(psys, n_max, e.solver);
    record_all(ctx, rep.per_step_solver_reports);
    for (const auto& row : rep.rows) {
      if (row.n < 2 || !row.theta_fd) continue;
      checks.add("taylor_fd/" + std::to_string(row.n), row.gap, std::max(1e-3, 0.01 * std::abs(*row.theta_fd)),
                 row.within_tolerance, "operator_recursion|fd_richardson");
    }
  }

  if (!checks.all_passed) ctx.invariant_failed = true;
  return {{"checks", checks.items}, {"all_passed", checks.all_passed}, {"grid", wl::describe_grid(*grid)},
          {"convexity_margin", tagged(margin, "sampled_hessian_min_eigenvalue", std::nan(""))}};
}

}  // namespace

json run_command(const std::string& command, RunContext& ctx) {
  if (command == "describe") return cmd_describe(ctx);
  if (command == "solve") return cmd_solve(ctx);
  if (command == "cov") return cmd_cov(ctx);
  if (command == "npoint") return cmd_npoint(ctx);
  if (command == "decay") return cmd_decay(ctx);
  if (command == "weighted") return cmd_weighted(ctx);
  if (command == "taylor") return cmd_taylor(ctx);
  if (command == "check") return cmd_check(ctx);
  bad("command", "unknown command '" + command + "'");
}

}  // namespace wlab
