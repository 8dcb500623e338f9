#pragma once

#include <ostream>

namespace cabps::cli {

enum ExitCode { kSuccess = 0, kValidationFailure = 1, kConfigError = 2, kRuntimeFailure = 3 };

/// Entry point of the `cabps` tool; testable without a process boundary.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cabps::cli
