// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "graphdf/error.hpp"

namespace graphdf {

/// Exit statuses of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

int exit_code_for(ErrorKind kind);

/// Runs one subcommand (synth, build-graph, train, forecast, evaluate,
/// schedule, gradcheck, bench). `args` excludes the program name.
int run_command(const std::vector<std::string>& args);
int run_command(int argc, const char* const* argv);

}  // namespace graphdf
