#pragma once

#include <iosfwd>

namespace lowimpact {

/// Exit codes of the batch tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitScenario = 2,
  kExitNumeric = 3,
};

/// Runs one command line. Report lines ("# key=value") and CSV go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lowimpact
