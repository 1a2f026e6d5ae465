#pragma once

#include <iosfwd>

#include "twqr/error.hpp"

namespace twqr::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

/// Input, flag and config problems map to 2; failures of the numerics to 3.
int exit_code(ErrorCode code);

/// Entry point shared by the executable and the tests. Normal output goes to
/// `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace twqr::cli
