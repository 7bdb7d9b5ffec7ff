#pragma once

#include <ostream>

namespace d2d {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1, ///< diagram has structural errors
    kExitParse = 2,      ///< unreadable input or bad flags
    kExitDivergent = 3,  ///< more than half the runs diverged
};

/// Entry point of the `d2d` tool with injectable streams.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace d2d
