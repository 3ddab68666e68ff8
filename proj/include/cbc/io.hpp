#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbc/certificates.hpp"
#include "cbc/cbflow.hpp"
#include "cbc/conditions.hpp"
#include "cbc/lamperti.hpp"
#include "cbc/qsd.hpp"
#include "cbc/simulator.hpp"
#include "cbc/stats.hpp"

namespace cbc {

using json = nlohmann::ordered_json;

// Shortest round-trip decimal; inf and nan spelled out.
std::string fmt_real(double x);

// Rows are buffered; save() writes the file.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);
  void save() const;

 private:
  std::filesystem::path path_;
  std::string buf_;
  std::size_t cols_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& j);

void write_flow_csv(const std::filesystem::path& path, const FlowSolution& sol, std::size_t points);
void write_extinction_csv(const std::filesystem::path& path, const std::vector<ExtinctionEntry>& rows);
void write_margin_csv(const std::filesystem::path& path, const LyapunovReport& rep, int n);
void write_path_csv(const std::filesystem::path& path, const PathSample& p);
void write_distribution_csv(const std::filesystem::path& path, const EmpiricalDistribution& d);

json to_json(const ConditionReport& r);
json to_json(const LyapunovCertificate& c);
json to_json(const CrossValidation& r);
json to_json(const ConvergenceFit& f);
json to_json(const CouplingInequalityResult& r);
json to_json(const SmallInitProbe& p);
json ensemble_json(std::size_t n_paths, const std::string& estimator, double value, double std_error);

// Hex SHA-256 of a byte string / file contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace cbc
