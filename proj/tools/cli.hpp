#pragma once

#include <ostream>

namespace drbsde::cli {

enum ExitCode { ok = 0, validation_failure = 2, solver_failure = 3 };

/// Runs the command line; output files go under --out, everything else to
/// the two streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drbsde::cli
