#pragma once

#include <iosfwd>

namespace mmfusion::cli {

/// Process exit codes, one per error class.
enum ExitCode : int {
    kOk = 0,
    kUnexpected = 1,
    kUsage = 2,
    kConfig = 3,
    kData = 4,
    kNumeric = 5,
    kPersistence = 6,
    kDegenerate = 7,
    kGradCheckFailed = 8,
};

/// Entry point shared by the `mmfusion` binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mmfusion::cli
