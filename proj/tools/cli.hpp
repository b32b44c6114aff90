#ifndef DELTAGRAD_TOOLS_CLI_HPP
#define DELTAGRAD_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace deltagrad::cli {

/// Runs one command line (without the program name). The JSON report goes to
/// `out`, diagnostics to `err`. Returns the process exit code: 0 on success,
/// otherwise the numeric ErrorKind of the failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deltagrad::cli

#endif  // DELTAGRAD_TOOLS_CLI_HPP
