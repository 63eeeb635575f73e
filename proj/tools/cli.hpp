#pragma once

#include <iosfwd>

namespace cpspline::cli {

enum ExitCode { kOk = 0, kInputError = 1, kSolverError = 2, kNotConverged = 3 };

/// Entry point of the `cpspline` tool with injectable streams, so tests can
/// drive it in-process.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpspline::cli
