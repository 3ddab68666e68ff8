// cbc-lab <subcommand> --config <file> [--out <dir>] [--seed <u64>] [--threads <n>]
//
// Exit codes: 0 success, 1 configuration or usage error, 2 invariant breach,
// 3 numeric failure.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cbc/config.hpp"
#include "cbc/error.hpp"
#include "cbc/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Toolkit for continuous-state branching processes with competition"};
  app.set_version_flag("--version", cbc::version_string());
  app.require_subcommand(1, 1);

  std::string config, out;
  std::uint64_t seed = 0;
  int threads = 0;
  bool print_schema = false;
  app.add_flag("--schema", print_schema, "Print the config keys and exit");

  for (const auto& kind : cbc::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "Run the '" + kind + "' experiment");
    sub->add_option("--config", config, "key = value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (overrides 'out')");
    sub->add_option("--seed", seed, "Root seed (overrides 'seed')");
    sub->add_option("--threads", threads, "Worker threads (overrides 'threads' and CBC_LAB_THREADS)")
        ->check(CLI::PositiveNumber);
  }

  // --schema works without a subcommand.
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--schema") {
      for (const auto& [k, d] : cbc::config_schema()) std::cout << fmt::format("{:30} {}\n", k, d);
      return 0;
    }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();

  try {
    cbc::ExperimentConfig cfg = cbc::validate_config(config);
    if (sub->count("--seed")) cfg.seed = seed;
    if (cfg.experiment != kind)
      throw cbc::ConfigError(config, {{0, 0, fmt::format("config declares experiment '{}' but the subcommand is '{}'",
                                                         cfg.experiment, kind)}});
    if (cfg.stochastic() && !cfg.seed)
      throw cbc::ConfigError(config, {{0, 0, "a seed is required for this experiment (config 'seed' or --seed)"}});

    cbc::Exec exec{cfg.threads};
    if (const char* env = std::getenv("CBC_LAB_THREADS"); env && !sub->count("--threads")) {
      try {
        exec.threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        std::cerr << "cbc-lab: ignoring CBC_LAB_THREADS='" << env << "'\n";
      }
    }
    if (sub->count("--threads")) exec.threads = threads;

    const std::string dir = sub->count("--out") ? out : cfg.out;
    const cbc::RunResult r = cbc::run_experiment(cfg, dir, exec);
    std::cout << kind << ": " << r.summary << "\n";
    for (const auto& a : r.artifacts) std::cout << "  wrote " << dir << "/" << a << "\n";
    std::cout << "  wrote " << dir << "/manifest.json\n";
    return r.exit_code;
  } catch (const cbc::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const cbc::DomainError& e) {
    std::cerr << "cbc-lab: " << e.what() << "\n";
    return 1;
  } catch (const cbc::InvariantBreach& e) {
    std::cerr << "cbc-lab: invariant breach: " << e.what() << "\n";
    return 2;
  } catch (const cbc::NumericFailure& e) {
    std::cerr << "cbc-lab: numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "cbc-lab: " << e.what() << "\n";
    return 1;
  }
}
