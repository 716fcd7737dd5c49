#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wittenlab/error.hpp"
#include "wittenlab/version.hpp"

namespace wlab {

using nlohmann::json;

void RunContext::record(const wittenlab::SolveReport& report) {
  if (!report.converged) non_converged = true;
}

void RunContext::warn(const std::string& message) {
  for (const auto& w : warnings) {
    if (w == message) return;
  }
  warnings.push_back(message);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"describe", "solve", "cov",   "npoint",
                                                 "decay",    "weighted", "taylor", "check"};
  return names;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_report(const std::string& dir, const json& report) {
  std::ofstream f(std::filesystem::path(dir) / "report.json");
  if (!f) wittenlab::fail(wittenlab::ErrorKind::config, "cli.report", "cannot write report.json in '" + dir + "'");
  f << report.dump(2) << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"wlab: Witten-Laplacian experiments on lattice spin systems"};
  std::string command, config_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  app.add_option("command", command, "describe | solve | cov | npoint | decay | weighted | taylor | check")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "experiment file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "overrides the seed in the config");
  app.add_option("--threads", threads, "worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  std::optional<Experiment> exp;
  try {
    exp = load_experiment(config_path, seed);
    std::filesystem::create_directories(out_dir);
  } catch (const wittenlab::Error& e) {
    err << "error [" << e.where() << "]: " << e.what() << '\n';
    return exit_config;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [cli.output]: " << e.what() << '\n';
    return exit_config;
  }

  RunContext ctx{*exp, out_dir};
  json report;
  report["software"] = {{"name", "wittenlab"}, {"version", wittenlab::version_string}};
  report["command"] = command;
  report["config_hash"] = "fnv1a64:" + hex64(config_hash(exp->raw));
  report["seeds"] = {{"seed", exp->seed}, {"solver", exp->solver.seed}, {"mcmc", exp->mcmc.seed}};
  report["timestamp"] = utc_timestamp();
  int code = exit_ok;
  try {
    report["results"] = run_command(command, ctx);
  } catch (const wittenlab::Error& e) {
    err << "error [" << e.where() << "]: " << e.what() << '\n';
    report["error"] = {{"kind", std::string(wittenlab::to_string(e.kind()))}, {"where", e.where()}, {"message", e.what()}};
    switch (e.kind()) {
      case wittenlab::ErrorKind::config: code = exit_config; break;
      case wittenlab::ErrorKind::non_convergence: code = exit_non_convergence; break;
      default: code = exit_invariant; break;
    }
  }
  if (code == exit_ok && ctx.non_converged) code = exit_non_convergence;
  if (code == exit_ok && ctx.invariant_failed) code = exit_invariant;
  report["warnings"] = ctx.warnings;
  report["exit_code"] = code;
  try {
    write_report(out_dir, report);
  } catch (const wittenlab::Error& e) {
    err << "error [" << e.where() << "]: " << e.what() << '\n';
    return exit_config;
  }
  out << command << ": exit " << code << ", report in " << (std::filesystem::path(out_dir) / "report.json").string()
      << '\n';
  return code;
}

}  // namespace wlab
