#ifndef SIMSKIP_CLI_HPP_
#define SIMSKIP_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace simskip {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // validation, format or I/O problem, unknown subcommand
  kExitNumeric = 2,  // numerical failure or internal error
};

/**
 * Runs one subcommand. `args` excludes the program name.
 * Subcommands: gen-synth, refine, ablate, eval, theory, augment, inspect.
 * Errors are reported as a single "simskip: error: ..." line on `err`.
 */
int parse_and_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simskip

#endif  // SIMSKIP_CLI_HPP_
