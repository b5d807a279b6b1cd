#pragma once

namespace simboot {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitPlanner = 2,
  kExitBudget = 3,
  kExitIntegrity = 4,
};

/// Entry point of the `simboot` tool: generate, evaluate, replay, inspect,
/// sweep and tasks subcommands.
int run_cli(int argc, char** argv);

}  // namespace simboot
