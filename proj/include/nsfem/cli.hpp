#ifndef NSFEM_CLI_HPP
#define NSFEM_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace nsfem::cli {

enum ExitCode : int { ok = 0, usage_error = 1, not_converged = 2 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Quick checks of closed-form cases across all modules; one line per check.
/// Returns the number of failed checks.
int run_selftest(std::ostream& out);

}  // namespace nsfem::cli

#endif  // NSFEM_CLI_HPP
