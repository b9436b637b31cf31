#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "heatctl/cli/config.hpp"

namespace heatctl::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kConfigError = 1, kNotConverged = 2 };

struct CommandContext {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;
  std::optional<std::filesystem::path> out_dir;  // overrides [output] directory
};

/// Solves the configured problem with CG, fixed point or both. Writes
/// report.json, history_<solver>.csv, state.csv, adjoint.csv, control_g.csv
/// and control_q.csv.
int run_solve(const RunConfig& cfg, const CommandContext& ctx);

/// Fixed-control and/or optimal-control alpha sweep. Writes sweep_fixed.csv,
/// sweep_optimal.csv and sweep.json. Exit 0 iff every enabled check passes.
int run_sweep(const RunConfig& cfg, const CommandContext& ctx);

/// Adjoint identity, gradient, convexity and inter-problem checks; one
/// line per check. Writes checks.json.
int run_checks(const RunConfig& cfg, const CommandContext& ctx);

/// Prints the discrete constants as JSON and writes constants.json.
int run_constants(const RunConfig& cfg, const CommandContext& ctx);

/// Loads the config at `path` and dispatches; config errors map to exit 1.
int run_command(const std::string& name, const std::filesystem::path& path, const CommandContext& ctx);

}  // namespace heatctl::cli
