#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "xvars/common/error.hpp"

namespace xvars::cli {

/// Process exit codes, one per failure category.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitUsage = 2,         // bad flags or config
    kExitMissingInput = 3,  // files, clips or checkpoints that do not exist
    kExitInvalidData = 4,   // malformed or inconsistent inputs
    kExitIntegrity = 5,     // digest mismatch, frozen weights changed
    kExitTraining = 6,      // divergence
    kExitIo = 7,
    kExitUnavailable = 8,   // external service or model not available
};

int exit_code_for(ErrorCode code);

/// Parses `args` (without the program name) and runs one subcommand.
/// Errors are printed to `err` as "error [Category]: message".
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace xvars::cli
