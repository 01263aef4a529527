#pragma once

#include <string>
#include <vector>

namespace linedet::cli {

/// Runs the full command-line interface on the given arguments (excluding
/// the program name). Returns the process exit code: 0 on success, 1 on
/// validation/parse failures, 2 on I/O failures.
int run(const std::vector<std::string>& args);

}  // namespace linedet::cli
