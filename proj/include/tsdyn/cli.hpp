#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsdyn {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,          // malformed input, bad arguments, off-domain query
  kExitCertification = 3,  // a numerical certificate failed
  kExitCondition = 4,      // a hypothesis of the theory is violated (e.g. not regressive)
};

/// Runs one subcommand. `args` excludes the program name. Results go to `out` as JSON;
/// failures go to `err` as a one-line JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsdyn
