#include <iostream>

#include "CLI11.hpp"

#include "heatctl/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"heatctl: simultaneous distributed-boundary optimal control of the heat equation"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  bool quiet = false;
  for (const char* name : {"solve", "sweep", "check", "constants"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [output] directory)");
    sub->add_flag("--quiet", quiet, "Suppress per-run summaries");
  }
  app.get_subcommand("solve")->description("Solve the configured control problem");
  app.get_subcommand("sweep")->description("Robin coefficient sweep against the Dirichlet problem");
  app.get_subcommand("check")->description("Identity and estimate checks, one line each");
  app.get_subcommand("constants")->description("Print discrete coercivity and trace constants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : heatctl::cli::kConfigError;
  }

  heatctl::cli::CommandContext ctx{std::cout, std::cerr, quiet, std::nullopt};
  if (!out_dir.empty()) ctx.out_dir = out_dir;
  return heatctl::cli::run_command(app.get_subcommands().front()->get_name(), config, ctx);
}
