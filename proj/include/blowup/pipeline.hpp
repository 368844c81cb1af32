#pragma once

// Staged run: map -> parametrix -> kernel-selftest -> solve -> verify,
// with CSV field dumps and a JSON manifest in the output directory.

#include "blowup/config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace blowup {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitVerification = 4 };

struct CheckResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct RunManifest {
  RunConfig config;
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  int exit_code = kExitOk;
  std::string error;  // "stage: cause" for hard failures

  bool all_passed() const;
  nlohmann::ordered_json to_json() const;
};

/// Runs the selected stages and writes all outputs plus manifest.json
/// (atomically). Hard errors end the run and set exit_code; they are not
/// rethrown.
RunManifest run_pipeline(const RunConfig& cfg);

/// load_config + run_pipeline; config errors give exit code 2.
RunManifest run_config(const std::string& path);

/// Fixed CSV headers of the exported files.
const std::vector<std::pair<std::string, std::string>>& csv_headers();

}  // namespace blowup
