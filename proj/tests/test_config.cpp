#include <filesystem>
#include <string>

#include <doctest.h>

#include "cbc/config.hpp"
#include "cbc/experiments.hpp"
#include "cbc/io.hpp"

using namespace cbc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cbc_test_" + name);
  fs::remove_all(p);
  return p;
}

// First diagnostic of a rejected config.
ConfigDiagnostic first_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    REQUIRE_FALSE(e.diagnostics().empty());
    return e.diagnostics().front();
  }
  FAIL("config was accepted");
  return {};
}

const char* kNeveu =
    "experiment = conditions\n"
    "mechanism.kind = levy\n"
    "mechanism.b = 0.42278433509846713\n"
    "mechanism.mu.kind = neveu\n"
    "competition.kind = power\n"
    "competition.p = 0.5\n";

}  // namespace

TEST_CASE("minimal Feller config gets defaults") {
  const auto cfg = parse_config("experiment = flow\nmechanism.c = 1\n");
  CHECK(cfg.experiment == "flow");
  CHECK(cfg.mech.c() == 1.0);
  CHECK(cfg.mech.b() == 0.0);
  CHECK(cfg.mech.mu().is_zero());
  CHECK(cfg.g.is_zero());
  CHECK(cfg.real("sim.dt") == 1e-3);
  CHECK(cfg.reals("rate.times").size() == 6);
  CHECK_FALSE(cfg.stochastic());
}

TEST_CASE("negative diffusion is rejected") {
  const auto d = first_error("experiment = flow\nmechanism.c = -1\n");
  CHECK(d.message.find("c >= 0") != std::string::npos);
  CHECK(d.line == 2);
}

TEST_CASE("non-monotone competition is rejected") {
  const auto d = first_error("experiment = flow\ncompetition.kind = tabulated\ncompetition.points = 1:2, 2:1\n");
  CHECK(d.message.find("non-decreasing") != std::string::npos);
}

TEST_CASE("parse errors carry line and column") {
  auto d = first_error("experiment = flow\n  mechanism.q = 1\n");
  CHECK(d.line == 2);
  CHECK(d.col == 3);
  CHECK(d.message.find("unknown key") != std::string::npos);
  d = first_error("experiment = flow\nmechanism.c = 1\nmechanism.c = 2\n");
  CHECK(d.line == 3);
  CHECK(d.message.find("duplicate") != std::string::npos);
  d = first_error("experiment = flow\nmechanism.c = abc\n");
  CHECK(d.line == 2);
  CHECK(d.col == 15);
  d = first_error("experiment = flow\nmechanism.c\n");
  CHECK(d.line == 2);
}

TEST_CASE("stochastic experiments need a seed") {
  const auto d = first_error("experiment = simulate\nmechanism.c = 1\n");
  CHECK(d.message.find("seed") != std::string::npos);
}

TEST_CASE("SHA-256 known answers") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("conditions on the Neveu configuration") {
  const auto cfg = parse_config(kNeveu);
  const fs::path out = scratch("neveu");
  const auto r = run_experiment(cfg, out);
  CHECK(r.exit_code == 0);
  const json j = json::parse(read_file(out / "conditions.json"));
  bool grey = false, nz = false;
  for (const auto& rep : j) {
    if (rep["condition"] == "grey") grey = rep["verdict"] == "violated";
    if (rep["condition"] == "near_zero_competition") nz = rep["verdict"] == "satisfied";
  }
  CHECK(grey);
  CHECK(nz);
}

TEST_CASE("manifest lists every artifact with its hash") {
  const auto cfg = parse_config("experiment = flow\nmechanism.c = 1\nflow.lambdas = 1, 2\n");
  const fs::path out = scratch("manifest");
  const auto r = run_experiment(cfg, out);
  const json m = json::parse(read_file(out / "manifest.json"));
  CHECK(m["experiment"] == "flow");
  CHECK(m["config_sha256"] == sha256_hex(cfg.source_text));
  REQUIRE(m["artifacts"].size() == r.artifacts.size());
  for (const auto& a : m["artifacts"]) {
    const fs::path f = out / a["file"].get<std::string>();
    REQUIRE(fs::exists(f));
    CHECK(a["sha256"] == sha256_hex(read_file(f)));
    CHECK(a["bytes"] == fs::file_size(f));
  }
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string name = e.path().filename().string();
    if (name == "manifest.json") continue;
    bool listed = false;
    for (const auto& a : m["artifacts"]) listed |= a["file"] == name;
    CHECK_MESSAGE(listed, name);
  }
}

TEST_CASE("reruns with the same seed are byte-identical") {
  const std::string text =
      "experiment = simulate\nseed = 5\nmechanism.kind = levy\nmechanism.c = 0.5\n"
      "mechanism.mu.kind = truncated_stable\ncompetition.kind = logistic\nsim.paths = 200\nsim.export_paths = 2\n";
  const auto cfg = parse_config(text);
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const auto ra = run_experiment(cfg, a);
  run_experiment(cfg, b, Exec{2});
  for (const auto& f : ra.artifacts) CHECK_MESSAGE(read_file(a / f) == read_file(b / f), f);
  auto other = cfg;
  other.seed = 6;
  const fs::path c = scratch("rerun_c");
  run_experiment(other, c);
  CHECK(read_file(a / "path_0.csv") != read_file(c / "path_0.csv"));
}

TEST_CASE("rate experiment reports a positive rate") {
  const auto cfg = parse_config(
      "experiment = rate\nseed = 9\nmechanism.b = 1\nmechanism.c = 1\ncompetition.kind = logistic\n");
  const fs::path out = scratch("rate");
  run_experiment(cfg, out);
  const json j = json::parse(read_file(out / "fit.json"));
  CHECK(j["lambda_hat"].get<double>() > 0.0);
  for (const char* k : {"lambda_hat", "C_hat", "r2", "noise_floor", "points_used"}) CHECK(j.contains(k));
}
