#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lethe {

// Exit-code contract of the operator CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
  kExitAuditInvalid = 3,
};

// Runs one CLI invocation; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lethe
