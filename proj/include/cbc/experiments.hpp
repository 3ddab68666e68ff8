#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cbc/config.hpp"
#include "cbc/parallel.hpp"

namespace cbc {

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 invariant breach detected by the experiment
  std::vector<std::string> artifacts;  // relative to the output directory
  std::string summary;
};

// Runs cfg.experiment, writes its artifacts and manifest.json into out.
// Library exceptions propagate to the caller.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, const Exec& exec = {});

std::string version_string();

}  // namespace cbc
