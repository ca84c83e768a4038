#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bftevo::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,            // converged, or every check passed
  kExitUsage = 1,         // bad flags, invalid model or config
  kExitNotConverged = 2,  // NotConverged or a failed check; classify also uses it when no verdict is given
  kExitFrozen = 3,        // liveness failure
};

/// Runs the `bftevo` command line on `args` (program name excluded).
/// Results go to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bftevo::cli
