#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deepeval {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUnitFailures = 1;  // also: lint found violations
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInterrupted = 3;

/// The `deepeval` command line. `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deepeval
