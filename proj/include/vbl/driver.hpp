#pragma once

#include <string>
#include <vector>

#include "vbl/config.hpp"

namespace vbl {

struct RunReport {
  std::string command;
  bool verified = true;                // false when a numerical verification inside the command failed
  std::vector<std::string> artifacts;  // paths of the files written, manifest last
  std::string manifest;                // contents of manifest.json
};

/// bands, gap, edge, predict, pencil, oracle, compare, green-check.
const std::vector<std::string>& command_names();

/// Runs one command and writes its CSV/JSON artifacts plus manifest.json into out_dir (created if
/// missing). Throws ConfigError for inputs the command cannot handle and NumericalError when a solver
/// fails outright.
RunReport run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir);

}  // namespace vbl
