// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace rvrank::cli {

/// Runs one subcommand. Returns the process exit code: 0 on success, 1 on a
/// runtime or data error, 2 on a usage error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace rvrank::cli
