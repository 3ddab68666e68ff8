#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cbc/mechanism.hpp"
#include "cbc/simulator.hpp"

namespace cbc {

struct ConfigDiagnostic {
  int line = 0;  // 0 for whole-file (semantic) diagnostics
  int col = 0;
  std::string message;
  std::string str(const std::string& source) const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::vector<ConfigDiagnostic> diags);
  const std::vector<ConfigDiagnostic>& diagnostics() const noexcept { return diags_; }

 private:
  std::vector<ConfigDiagnostic> diags_;
};

const std::vector<std::string>& experiment_kinds();

struct ExperimentConfig {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  BranchingMechanism mech;
  CompetitionFunction g;
  std::string source_text;

  // Every schema key, defaults filled in.
  std::map<std::string, std::string> values;

  double real(const std::string& key) const;
  std::optional<double> maybe_real(const std::string& key) const;  // empty value -> nullopt
  long long integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  GrowthFunction growth() const;
  SimConfig sim() const;  // sim.* keys plus the seed
  bool stochastic() const;
};

// Parses key = value lines ('#' starts a comment). Unknown keys, duplicates
// and malformed values are reported with line and column; semantic checks are
// collected and reported together. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig validate_config(const std::filesystem::path& path);

// Schema documentation: key, default, description.
std::vector<std::pair<std::string, std::string>> config_schema();

}  // namespace cbc
