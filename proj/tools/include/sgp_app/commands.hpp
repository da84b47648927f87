#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sgp_app/run_config.hpp"

namespace sgp::app {

/// Subcommand names in help order.
const std::vector<std::string>& command_names();

/// Configuration used when --config is not given.
std::string builtin_config(const std::string& command);

/// Runs a subcommand; writes into rc.output_dir and a short report to `out`.
void run_command(const std::string& command, const RunConfig& rc, std::ostream& out);

/// Full command line: parses flags, runs, and maps errors to exit codes
/// (0 success, 1 usage, 2 configuration, 3 numerical failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sgp::app
