// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wittenlab/correlation.hpp"
#include "wittenlab/error.hpp"
#include "wittenlab/oracle.hpp"
#include "wittenlab/pressure.hpp"

namespace wl = wittenlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::shared_ptr<const wl::LatticeSpec> chain(int n) {
  const int shape[] = {n};
  return std::make_shared<const wl::LatticeSpec>(wl::build_lattice(1, shape));
}

wl::SolverConfig solver(double tol = 1e-10) {
  wl::SolverConfig cfg;
  cfg.rel_tolerance = tol;
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

bool within(double value, double reference) {
  return std::abs(value - reference) <= std::max(1e-3, 0.01 * std::abs(reference));
}

Outcome ac1() {
  const auto lat = chain(2);
  const wl::WittenSystem sys(wl::build_grid(lat, 6.0, 33), wl::gaussian_potential(lat));
  const auto cfg = solver();
  const auto x0 = wl::Observable::coordinate(lat, 0), x1 = wl::Observable::coordinate(lat, 1);
  const double c00 = wl::covariance_hs(sys, x0, x0, cfg).value;
  const double c01 = wl::covariance_hs(sys, x0, x1, cfg).value;
  const auto z = sys.solve_zero_form(x0, cfg);
  const auto& grid = *sys.grid();
  std::vector<double> x(2);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < grid.total_points; ++i) {
    if (!z.mask[i]) continue;
    grid.node(i, x);
    const double w = grid.weights[i] * std::exp(-sys.sampled().phi[i]);
    num += w * (z.f.values[i] - x[0]) * (z.f.values[i] - x[0]);
    den += w;
  }
  const double l2 = std::sqrt(num / den);
  const bool ok = std::abs(c00 - 1.0) <= 0.01 && std::abs(c01) <= 1e-3 && l2 <= 1e-3 && z.report.converged;
  return {ok, "cov(x0,x0)=" + fmt(c00) + " cov(x0,x1)=" + fmt(c01) + " zero-form L2 error=" + fmt(l2)};
}

Outcome ac2() {
  const auto lat = chain(3);
  const wl::WittenSystem sys(wl::build_grid(lat, 6.0, 49), wl::kac_potential(lat, 0.05));
  const auto cfg = solver(1e-10);
  bool ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i; j < 3; ++j) {
      const wl::Observable gs[] = {wl::Observable::coordinate(lat, i), wl::Observable::coordinate(lat, j)};
      const double hs = wl::covariance_hs(sys, gs[0], gs[1], cfg).value;
      const double quad = wl::truncated_correlation(sys, gs).value;
      ok = ok && within(hs, quad);
      worst = std::max(worst, std::abs(hs - quad));
    }
  }
  return {ok, "6 pairs, largest |hs - quadrature|=" + fmt(worst)};
}

Outcome ac3() {
  const auto lat = chain(2);
  const auto sys = wl::make_perturbed_system(wl::build_grid(lat, 6.0, 129), wl::kac_potential(lat, 0.05),
                                             wl::Observable::linear(lat, {0, 1}, {1.0, 1.0}), 0.0);
  const auto seq = wl::theta_sequence(sys, 4, solver());
  const auto fd2 = wl::fd_theta_derivative(sys, 2, 2e-2);
  const auto fd4 = wl::fd_theta_derivative(sys, 4, 2e-2);
  const bool ok = within(seq.theta[1], fd2.value) && within(seq.theta[3], fd4.value) && std::abs(seq.theta[2]) <= 1e-3;
  return {ok, "theta2 " + fmt(seq.theta[1]) + " vs fd " + fmt(fd2.value) + ", theta3 " + fmt(seq.theta[2]) +
                  ", theta4 " + fmt(seq.theta[3]) + " vs fd " + fmt(fd4.value)};
}

Outcome ac4() {
  const auto lat = chain(3);
  const wl::WittenSystem sys(wl::build_grid(lat, 6.0, 49), wl::kac_potential(lat, 0.1));
  const auto cfg = solver();
  const auto b0 = wl::Observable::bump(lat, {0}, {0.5}, 1.0);
  const auto b1 = wl::Observable::bump(lat, {1}, {0.5}, 1.0);
  const auto b2 = wl::Observable::bump(lat, {2}, {-0.3}, 1.2);
  const std::vector<std::vector<wl::Observable>> triples = {{b0, b1, b2}, {b0, b0, b1}, {b1, b2, b2}};
  bool ok = true;
  std::string detail;
  for (const auto& t : triples) {
    const double hs = wl::threepoint_hs(sys, t[0], t[1], t[2], cfg).value;
    const double quad = wl::truncated_correlation(sys, t).value;
    const double gap = std::abs(hs - quad);
    ok = ok && (std::abs(quad) < 1e-2 ? gap <= 1e-4 : gap <= 0.02 * std::abs(quad));
    detail += (detail.empty() ? "" : ", ") + fmt(hs) + " vs " + fmt(quad);
  }
  return {ok, "hs vs quadrature: " + detail};
}

Outcome ac5() {
  const auto lat = chain(6);
  const auto model = wl::kac_potential(lat, 0.1);
  wl::McmcConfig cfg;
  cfg.chain_length = 2000000;
  cfg.burn_in = 20000;
  cfg.chains = 8;
  cfg.seed = 20240611;
  cfg.thinning = 10;
  std::vector<std::vector<std::size_t>> tuples;
  for (std::size_t j = 1; j <= 5; ++j) tuples.push_back({0, j});
  const auto est = wl::mcmc_truncated_correlations(model, tuples, cfg);
  std::vector<wl::DecayPoint> points;
  for (std::size_t j = 1; j <= 5; ++j) {
    points.push_back({static_cast<int>(j), std::abs(est[j - 1].mean), est[j - 1].standard_error});
  }
  const auto fit = wl::decay_fit(points);
  const bool monotone = wl::monotone_within_errors(points);
  const std::size_t js[] = {1, 2}, ks[] = {3, 4, 5};
  const auto env = wl::threepoint_bound_check(model, 0, js, ks, cfg);
  const bool ok = fit.kappa_est > 0.0 && fit.r_squared >= 0.95 && monotone && std::isfinite(env.C) &&
                  std::isfinite(env.kappa1) && env.within_three_se;
  return {ok, "kappa_est=" + fmt(fit.kappa_est) + " r2=" + fmt(fit.r_squared) + " (" +
                  std::to_string(fit.pairs.size()) + " points) monotone=" + (monotone ? "yes" : "no") +
                  ", envelope C=" + fmt(env.C) + " kappa1=" + fmt(env.kappa1) +
                  " max residual/se=" + fmt(env.max_residual_in_se)};
}

Outcome ac6() {
  std::vector<double> sups;
  std::string detail;
  for (int n : {3, 4, 5}) {
    const auto lat = chain(n);
    const wl::WittenSystem sys(wl::build_grid(lat, 5.0, 17), wl::kac_potential(lat, 0.05));
    const auto r = wl::weighted_gradient_report(sys, wl::Observable::coordinate(lat, 0), 0.2, solver(1e-8));
    sups.push_back(r.sup_value);
    detail += (detail.empty() ? "" : ", ") + std::string("|L|=") + std::to_string(n) + ": " + fmt(r.sup_value);
  }
  const double hi = *std::max_element(sups.begin(), sups.end());
  const double lo = *std::min_element(sups.begin(), sups.end());
  return {lo > 0.0 && hi / lo < 2.0, detail + ", spread " + fmt(hi / lo)};
}

double distance(const wl::OneFormField& a, const wl::OneFormField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) s += (a.values[k] - b.values[k]) * (a.values[k] - b.values[k]);
  return std::sqrt(s);
}

Outcome ac7() {
  const auto lat = chain(2);
  const auto sys = wl::make_perturbed_system(wl::build_grid(lat, 6.0, 65), wl::kac_potential(lat, 0.05),
                                             wl::Observable::coordinate(lat, 0), 0.0);
  const auto cfg = solver();
  const double eps = 1e-2;
  const auto q1 = wl::fd_v_derivative(sys, eps, cfg);
  const auto q2 = wl::fd_v_derivative(sys, eps / 2, cfg);
  std::vector<std::string> matched;
  std::string detail;
  double plus_ratio = 0.0;
  for (int sign : {+1, -1}) {
    const auto pw = wl::param_derivative_w(sys, cfg, sign);
    const double ratio = distance(q1, pw.w) / distance(q2, pw.w);
    const std::string name = sign > 0 ? "plus" : "minus";
    if (ratio >= 1.6 && ratio <= 2.4) matched.push_back(name);
    if (sign > 0) plus_ratio = ratio;
    detail += (detail.empty() ? "" : ", ") + name + " ratio " + fmt(ratio);
  }
  const std::string sign = matched.size() == 1 ? matched[0] : "undetermined";
  return {matched.size() == 1, detail + ", matched sign: " + sign + " (plus ratio " + fmt(plus_ratio) + ")"};
}

Outcome ac8() {
  const double nu = 0.05;
  const auto lat = chain(2);
  const wl::WittenSystem sys(wl::build_grid(lat, 6.0, 33), wl::kac_potential(lat, nu));
  const auto cfg = solver();
  const std::size_t nodes = sys.grid()->total_points;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  auto random_vector = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
  };
  double worst_sym = 0.0;
  for (std::size_t comps : {std::size_t{1}, std::size_t{2}}) {
    const auto u = random_vector(nodes * comps), v = random_vector(nodes * comps);
    std::vector<double> au(u.size()), av(v.size());
    if (comps == 1) {
      sys.apply_w0_raw(u, au);
      sys.apply_w0_raw(v, av);
    } else {
      sys.apply_w1_raw(u, au);
      sys.apply_w1_raw(v, av);
    }
    const double lhs = wl::dot(au, v), rhs = wl::dot(u, av);
    worst_sym = std::max(worst_sym, std::abs(lhs - rhs) / std::abs(lhs));
  }
  const double delta = 1.0 - 2.0 * nu;
  const double gap = sys.spectral_gap_probe(4, cfg);

  const std::vector<wl::Observable> obs = {
      wl::Observable::coordinate(lat, 0), wl::Observable::linear(lat, {0, 1}, {1.0, -0.5}),
      wl::Observable::bump(lat, {0, 1}, {0.3, -0.2}, 0.8), wl::Observable::coordinate_square(lat, 1),
      wl::Observable::constant(lat, 2.0)};
  bool bl = true;
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& g : obs) {
    const double var = wl::covariance_hs(sys, g, g, cfg).value;
    const auto grad_sq = wl::sample_scalar(sys.grid(), [&](std::span<const double> x) {
      double d[2];
      g.gradient(x, d);
      return d[0] * d[0] + d[1] * d[1];
    });
    const double bound = sys.mean(grad_sq) / delta + 1e-3;
    bl = bl && var <= bound;
    slack = std::min(slack, bound - var);
  }
  const bool ok = worst_sym <= 1e-10 && gap >= delta - 0.02 && bl;
  return {ok, "symmetry " + fmt(worst_sym) + ", gap probe " + fmt(gap) + " vs " + fmt(delta) +
                  ", Brascamp-Lieb on 5 observables, min slack " + fmt(slack)};
}

Outcome ac9() {
  const auto lat = chain(2);
  const wl::WittenSystem sys(wl::build_grid(lat, 6.0, 17), wl::kac_potential(lat, 0.05));
  const auto cfg = solver(1e-8);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  bool converged = true;
  for (int k = 0; k < 5; ++k) {
    wl::OneFormField rhs(sys.grid());
    for (auto& v : rhs.values) v = normal(rng);
    const auto dense = wl::dense_solve_w1(sys, rhs);
    const auto [iter, rep] = sys.solve_w1(rhs, cfg);
    converged = converged && rep.converged;
    worst = std::max(worst, distance(dense, iter) / std::sqrt(wl::dot(dense.values, dense.values)));
  }
  return {converged && worst <= 10 * cfg.rel_tolerance, "largest relative discrepancy " + fmt(worst) +
                                                            " (limit " + fmt(10 * cfg.rel_tolerance) + ")"};
}

std::string report_without_timestamp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream os;
  std::string line;
  while (std::getline(f, line)) {
    if (line.find("\"timestamp\":") == std::string::npos) os << line << '\n';
  }
  return os.str();
}

Outcome ac10(const std::string& wlab, const fs::path& work, const std::string& config) {
  if (wlab.empty()) return {false, "no wlab binary given (--wlab)"};
  std::vector<std::string> texts;
  for (const char* run : {"run1", "run2"}) {
    const fs::path out = work / run;
    fs::remove_all(out);
    fs::create_directories(out);
    const std::string cmd = "\"" + wlab + "\" check --config \"" + config + "\" --out \"" + out.string() +
                            "\" > \"" + (out / "stdout.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    if (status != 0) return {false, std::string(run) + " exited with status " + std::to_string(status)};
    texts.push_back(report_without_timestamp(out / "report.json"));
  }
  const bool same = !texts[0].empty() && texts[0] == texts[1];
  return {same, same ? "two check runs exit 0, reports identical apart from the timestamp"
                     : "reports differ beyond the timestamp"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wittenlab acceptance criteria"};
  std::string wlab;
  std::string work = (fs::temp_directory_path() / "wittenlab_acceptance").string();
  std::string config = std::string(WITTENLAB_CONFIG_DIR) + "/gaussian_default.json";
  std::vector<int> only;
  app.add_option("--wlab", wlab, "path of the wlab binary, used for the reproducibility run");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--config", config, "config for the reproducibility run");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    double limit_seconds;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, 10, ac1},
      {2, 120, ac2},
      {3, 60, ac3},
      {4, 180, ac4},
      {5, 600, ac5},
      {6, 300, ac6},
      {7, 60, ac7},
      {8, 0, ac8},
      {9, 0, ac9},
      {10, 0, [&] { return ac10(wlab, work, config); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const wl::Error& e) {
      o = {false, "error [" + e.where() + "]: " + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds > c.limit_seconds) {
      o.pass = false;
      o.detail += "; runtime over " + fmt(c.limit_seconds) + " s";
    }
    if (!o.pass) ++failures;
    char time_buf[32];
    std::snprintf(time_buf, sizeof time_buf, "%.1f s", seconds);
    std::cout << "AC" << c.id << (c.id < 10 ? "  " : " ") << (o.pass ? "PASS" : "FAIL") << "  [" << time_buf
              << "]  " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
