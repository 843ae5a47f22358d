// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cviat {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

/// Entry point behind the `cviat` executable. Subcommands: train, eval,
/// topics, synth, oracle-check. Results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a `key = value` file (one per line, '#' comments). Underscores in
/// keys are normalized to dashes so keys match flag names.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

}  // namespace cviat
