#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace layerprobe {

// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 internal numeric failure.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses "0,2,5-8" into a sorted-as-given list of layer indices.
std::vector<std::size_t> parse_layer_list(const std::string& spec);

}  // namespace layerprobe
