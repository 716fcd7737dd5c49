#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace wlab {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,
  exit_non_convergence = 2,
  exit_invariant = 3,
};

/// Shared state of one command run.
struct RunContext {
  const Experiment& experiment;
  std::string out_dir;
  nlohmann::json warnings = nlohmann::json::array();
  bool non_converged = false;
  bool invariant_failed = false;

  void record(const wittenlab::SolveReport& report);
  void warn(const std::string& message);
};

/// Runs one command and returns its `results` object. CSV tables go to
/// ctx.out_dir.
nlohmann::json run_command(const std::string& command, RunContext& ctx);

const std::vector<std::string>& command_names();

/// Whole front-end: argument parsing, report writing, exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wlab
