#include "cbc/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "cbc/error.hpp"

namespace cbc {

namespace fs = std::filesystem;

std::string fmt_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

CsvWriter::CsvWriter(fs::path path, const std::vector<std::string>& header)
    : path_(std::move(path)), cols_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != cols_) throw InvariantBreach(fmt::format("CsvWriter: {} cells for {} columns", cells.size(), cols_));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(fmt_real(v));
  row(cells);
}

void CsvWriter::save() const { write_text(path_, buf_); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_flow_csv(const fs::path& path, const FlowSolution& sol, std::size_t points) {
  CsvWriter w(path, {"t", "v"});
  if (points < 2) points = 2;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = sol.t_max() * static_cast<double>(k) / static_cast<double>(points - 1);
    w.row(std::vector<double>{t, sol.at(t)});
  }
  w.save();
}

void write_extinction_csv(const fs::path& path, const std::vector<ExtinctionEntry>& rows) {
  CsvWriter w(path, {"t", "vbar", "finite"});
  for (const auto& r : rows) w.row({fmt_real(r.t), fmt_real(r.vbar), r.finite ? "true" : "false"});
  w.save();
}

void write_margin_csv(const fs::path& path, const LyapunovReport& rep, int n) {
  CsvWriter w(path, {"x", "lhs", "rhs", "margin"});
  for (const auto& p : rep.points)
    if (p.n == n) w.row(std::vector<double>{p.x, p.lhs, p.rhs, p.margin});
  w.save();
}

void write_path_csv(const fs::path& path, const PathSample& p) {
  CsvWriter w(path, {"t", "y", "event"});
  for (std::size_t i = 0; i < p.t.size(); ++i) w.row({fmt_real(p.t[i]), fmt_real(p.y[i]), event_name(p.event[i])});
  w.save();
}

void write_distribution_csv(const fs::path& path, const EmpiricalDistribution& d) {
  CsvWriter w(path, {"bin_lo", "bin_hi", "mass"});
  for (std::size_t k = 0; k < d.mass.size(); ++k) w.row(std::vector<double>{d.edges[k], d.edges[k + 1], d.mass[k]});
  w.save();
}

namespace {

json real(double x) {
  if (std::isfinite(x)) return x;
  return fmt_real(x);
}

}  // namespace

json to_json(const ConditionReport& r) {
  json j;
  j["condition"] = r.condition;
  j["verdict"] = verdict_name(r.verdict);
  json ev = json::array();
  for (const auto& e : r.evidence) {
    json x{{"name", e.name}, {"value", real(e.value)}};
    if (!e.note.empty()) x["note"] = e.note;
    ev.push_back(x);
  }
  j["evidence"] = ev;
  j["tolerance"] = r.tolerance;
  if (!r.children.empty()) {
    json ch = json::array();
    for (const auto& c : r.children) ch.push_back(to_json(c));
    j["children"] = ch;
  }
  return j;
}

json to_json(const LyapunovCertificate& c) {
  json j;
  j["W"] = {{"description", c.W.describe()}, {"sup", c.C0}, {"alpha", c.alpha}};
  j["l"] = c.l;
  json rows = json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"n", r.n}, {"r_n", r.r_n}, {"b_n", r.b_n}, {"K_n", r.K_n}, {"margin", real(r.margin)}});
  j["rows"] = rows;
  return j;
}

json to_json(const CrossValidation& r) {
  return {{"n", r.n},          {"ks_stat", r.ks_stat}, {"p_value", r.p_value},
          {"eps", r.eps},      {"t_probe", r.t_probe}, {"absorbed_fraction", r.absorbed_fraction},
          {"depleted", r.depleted}};
}

json to_json(const ConvergenceFit& f) {
  json j{{"lambda_hat", f.lambda_hat}, {"C_hat", f.C_hat},           {"r2", f.r2},
         {"noise_floor", f.noise_floor}, {"points_used", f.points_used}, {"verdict", fit_verdict_name(f.verdict)}};
  if (f.points_used < 2) j["lambda_lower"] = f.lambda_lower;
  j["t"] = f.t;
  j["d"] = f.d;
  return j;
}

json to_json(const CouplingInequalityResult& r) {
  json j{{"found", r.found}, {"l", r.l}, {"worst_value", real(r.worst_value)}, {"margin", real(r.margin)}};
  json tr = json::array();
  for (const auto& t : r.trace)
    tr.push_back({{"l", t.l}, {"worst_value", real(t.worst_value)}, {"x", t.worst_x}, {"y", t.worst_y}});
  j["trace"] = tr;
  j["fluctuation"] = to_json(r.fluctuation);
  return j;
}

json to_json(const SmallInitProbe& p) {
  json j{{"theta", p.theta}, {"rho", p.rho}, {"t", p.t}, {"n_paths", p.n_paths}, {"monotone", p.monotone}};
  j["delta"] = p.delta ? json(*p.delta) : json(nullptr);
  json rows = json::array();
  for (const auto& r : p.rows) {
    json x{{"y", r.y},
           {"survival", r.survival},
           {"std_error", r.std_error},
           {"ci", {r.ci.lo, r.ci.hi}},
           {"dominated", r.dominated}};
    x["envelope"] = r.envelope ? json(*r.envelope) : json(nullptr);
    rows.push_back(x);
  }
  j["rows"] = rows;
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

json ensemble_json(std::size_t n_paths, const std::string& estimator, double value, double std_error) {
  return {{"n_paths", n_paths}, {"estimator", estimator}, {"value", real(value)}, {"std_error", real(std_error)}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace cbc
