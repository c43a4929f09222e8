#pragma once

#include "effdyn/config.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace effdyn {

inline constexpr const char* tool_version = "effdyn 1.0.0";

enum ExitCode : int { exit_success = 0, exit_config = 2, exit_numerical = 3, exit_io = 4 };

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string version = tool_version;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;
  std::vector<CheckResult> checks;
  std::map<std::string, double> results;
  std::string error_kind;
  std::string error_message;
  int exit_code = exit_success;

  std::string to_json() const;
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int threads = 1;
  /// Run the experiment and its invariant checks without writing data outputs.
  bool check_only = false;
};

/// Executes a validated config, writing outputs, the resolved config and
/// manifest.json into opts.out_dir. Never throws for run-time failures; they
/// are recorded in the manifest and reflected in exit_code.
RunManifest run(const ExperimentConfig& cfg, const RunOptions& opts);

/// Reads and parses the config file, then runs it. A manifest is written even
/// when the config is rejected.
RunManifest run_file(const std::string& experiment, const std::filesystem::path& config_path,
                     const RunOptions& opts);

} // namespace effdyn
