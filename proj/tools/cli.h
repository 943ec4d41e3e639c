// ctxrnnt command-line driver.
//
// Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime
// failure. Failures print one line to stderr:
//
//   ctxrnnt: error: code=<n> kind=<usage|validation|runtime> msg=<text>

#ifndef CTXRNNT_TOOLS_CLI_H_
#define CTXRNNT_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace ctxrnnt::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInvalid = 2, kRuntime = 3 };

int run(int argc, const char* const* argv);
// Same, with arguments excluding the program name and caller-supplied streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxrnnt::cli

#endif  // CTXRNNT_TOOLS_CLI_H_
