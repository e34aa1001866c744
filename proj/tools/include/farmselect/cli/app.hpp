#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace farmselect::cli {

/// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitConvergence = 3;

/**
 * Runs the farmselect command line (select, simulate, screen, predict-rolling).
 * Reports go to the --out file, or to `out` when --out is absent; failures print
 * one JSON line {"error": kind, "message": text} to `err`.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace farmselect::cli
