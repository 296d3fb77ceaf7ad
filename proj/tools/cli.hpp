#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace care::cli {

/// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUnexpected = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kIoError = 3;
inline constexpr int kAllFitsFailed = 4;
inline constexpr int kStudyFailed = 5;

/// Runs one command line (without the program name). Machine output goes to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace care::cli
