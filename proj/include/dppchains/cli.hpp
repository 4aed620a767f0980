#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace dppchains::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kMalformedInput = 2,
  kPreconditionViolation = 3,
  kIdentityCheckFailed = 4,
};

/// Runs one invocation; `args` excludes the program name. Primary output goes
/// to `out` (or the --out file), diagnostics to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace dppchains::cli
