#include "cbc/experiments.hpp"

#include <chrono>
#include <cmath>

#include <boost/version.hpp>
#include <fmt/format.h>
#include <openssl/opensslv.h>

#include "cbc/cbflow.hpp"
#include "cbc/certificates.hpp"
#include "cbc/conditions.hpp"
#include "cbc/error.hpp"
#include "cbc/generator.hpp"
#include "cbc/io.hpp"
#include "cbc/lamperti.hpp"
#include "cbc/qsd.hpp"
#include "cbc/simulator.hpp"

namespace cbc {

namespace fs = std::filesystem;

std::string version_string() { return "0.1.0"; }

namespace {

struct Ctx {
  const ExperimentConfig& cfg;
  fs::path out;
  Exec exec;
  RunResult res;

  fs::path file(const std::string& name) {
    res.artifacts.push_back(name);
    return out / name;
  }
};

void run_conditions(Ctx& c) {
  const auto& cfg = c.cfg;
  json reports = json::array();
  const ConditionReport grey = grey_check(cfg.mech);
  reports.push_back(to_json(grey));
  reports.push_back(to_json(fluctuation_check(cfg.mech)));
  reports.push_back(to_json(nontriviality_check(cfg.mech)));
  const ConditionReport nz = near_zero_competition_check(cfg.mech, cfg.g);
  reports.push_back(to_json(nz));
  const ConditionReport q = qsd_hypotheses_check(cfg.mech, cfg.g, cfg.growth(), cfg.real("growth.alpha"));
  reports.push_back(to_json(q));
  const CriticalityResult cr = classify_criticality(cfg.mech);
  json crit{{"condition", "criticality"},
            {"verdict", criticality_name(cr.verdict)},
            {"evidence", json::array({{{"name", "psi_prime_zero"}, {"value", fmt_real(cr.psi_prime_zero)}}})},
            {"tolerance", 1e-10}};
  reports.push_back(crit);
  write_json(c.file("conditions.json"), reports);
  c.res.summary = fmt::format("grey: {}; near-zero competition: {}; qsd hypotheses: {}; {}", verdict_name(grey.verdict),
                              verdict_name(nz.verdict), verdict_name(q.verdict), criticality_name(cr.verdict));
}

void run_flow(Ctx& c) {
  const auto& cfg = c.cfg;
  const auto lambdas = cfg.reals("flow.lambdas");
  const double t_max = cfg.real("flow.t_max");
  const auto points = static_cast<std::size_t>(cfg.integer("flow.points"));
  std::string s;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const FlowSolution sol = solve_v(cfg.mech, lambdas[i], t_max);
    write_flow_csv(c.file(fmt::format("flow_{}.csv", i)), sol, points);
    s += fmt::format("v_{}({}) = {}; ", t_max, lambdas[i], fmt_real(sol.final_value()));
  }
  const auto prof = extinction_profile(cfg.mech, cfg.reals("flow.times"));
  write_extinction_csv(c.file("extinction.csv"), prof);
  c.res.summary = s + fmt::format("extinction profile at {} times", prof.size());
}

void run_simulate(Ctx& c) {
  const auto& cfg = c.cfg;
  SimConfig sc = cfg.sim();
  const double x0 = cfg.real("sim.x0");
  const auto n = static_cast<std::size_t>(cfg.integer("sim.paths"));
  const auto n_export = std::min<std::size_t>(n, static_cast<std::size_t>(cfg.integer("sim.export_paths")));
  const auto paths = simulate_ensemble(cfg.mech, cfg.g, x0, sc, n, c.exec);
  for (std::size_t i = 0; i < n_export; ++i) {
    SimConfig r = sc;
    r.stream = i;
    r.record_path = true;
    write_path_csv(c.file(fmt::format("path_{}.csv", i)), simulate_path(cfg.mech, cfg.g, x0, r));
  }
  std::vector<double> y, alive;
  for (const auto& p : paths) {
    y.push_back(p.absorbed() ? 0.0 : p.final_value);
    alive.push_back(p.absorbed() ? 0.0 : 1.0);
  }
  const MeanSe my = mean_se(y), ma = mean_se(alive);
  json arr = json::array();
  arr.push_back(ensemble_json(n, fmt::format("mean Y_{}", sc.T), my.mean, my.std_error));
  arr.push_back(ensemble_json(n, fmt::format("P(tau0 > {})", sc.T), ma.mean, ma.std_error));
  c.res.summary = fmt::format("E[Y_T] = {:.6g} +- {:.2g}; survival {:.4f}", my.mean, my.std_error, ma.mean);
  if (const auto lam = cfg.maybe_real("sim.lambda")) {
    const LaplaceCheck lc = mc_laplace_check(cfg.mech, cfg.g, x0, *lam, sc.T, n, sc, c.exec);
    json j = ensemble_json(n, fmt::format("mean exp(-{} Y_{})", *lam, sc.T), lc.mc_mean, lc.std_error);
    j["analytic"] = lc.analytic;
    j["z"] = lc.z;
    arr.push_back(j);
    c.res.summary += fmt::format("; Laplace z = {:.3f}", lc.z);
  }
  write_json(c.file("ensemble.json"), arr);
}

void run_couple(Ctx& c) {
  const auto& cfg = c.cfg;
  SimConfig sc = cfg.sim();
  const double x1 = cfg.real("couple.x1"), x2 = cfg.real("couple.x2");
  const auto n = static_cast<std::size_t>(cfg.integer("couple.pairs"));
  const bool zero_upper = cfg.text("couple.mode") == "zero_upper";
  const CompetitionFunction zero = CompetitionFunction::zero();
  const CompetitionFunction& gu = zero_upper ? zero : cfg.g;
  std::vector<int> viol(n, 0);
  std::vector<double> coal(n, 0.0);
  parallel_for(n, c.exec, [&](std::size_t i) {
    SimConfig r = sc;
    r.stream = i;
    const CoupledPair p = simulate_coupled_pair(cfg.mech, gu, cfg.g, x1, x2, r);
    viol[i] = p.ordering_violations + (p.upper.final_value < p.lower.final_value ? 1 : 0);
    coal[i] = std::isfinite(p.coalescence_time) ? 1.0 : 0.0;
  });
  SimConfig r = sc;
  r.record_path = true;
  const CoupledPair p0 = simulate_coupled_pair(cfg.mech, gu, cfg.g, x1, x2, r);
  write_path_csv(c.file("pair_0_upper.csv"), p0.upper);
  write_path_csv(c.file("pair_0_lower.csv"), p0.lower);
  long total = 0;
  for (int v : viol) total += v;
  const MeanSe mc = mean_se(coal);
  json j{{"pairs", n}, {"mode", cfg.text("couple.mode")}, {"ordering_violations", total}};
  j["coalescence"] = ensemble_json(n, fmt::format("P(coalesced by {})", sc.T), mc.mean, mc.std_error);
  write_json(c.file("couple.json"), j);
  c.res.summary = fmt::format("{} pairs, {} ordering violations, coalesced fraction {:.4f}", n, total, mc.mean);
  if (total > 0) c.res.exit_code = 2;
}

void run_lyapunov(Ctx& c) {
  const auto& cfg = c.cfg;
  LyapunovOptions o;
  o.rows = static_cast<int>(cfg.integer("lyapunov.rows"));
  const LyapunovCertificate cert = build_lyapunov(cfg.mech, cfg.g, cfg.real("growth.alpha"), cfg.growth(), o);
  const int nv = static_cast<int>(cfg.integer("lyapunov.verify_n"));
  const LyapunovReport rep = verify_lyapunov(cert, cfg.mech, cfg.g, nv);
  json j = to_json(cert);
  j["verification"] = {{"ok", rep.ok}, {"n_max", nv}, {"offending_n", rep.offending_n}, {"offending_x", rep.offending_x}};
  write_json(c.file("certificate.json"), j);
  for (const auto& row : rep.rows) write_margin_csv(c.file(fmt::format("margins_n{}.csv", row.n)), rep, row.n);
  c.res.summary = fmt::format("l = {}, C0 = {:.4g}, verification {}", cert.l, cert.C0, rep.ok ? "passed" : "FAILED");
  if (!rep.ok) c.res.exit_code = 2;
}

void run_coupling_inequality(Ctx& c) {
  const auto& cfg = c.cfg;
  const auto r = verify_coupling_inequality(cfg.mech, cfg.g, cfg.real("coupling.rho"), cfg.real("coupling.A"),
                                            cfg.real("coupling.B"), cfg.real("coupling.C"));
  write_json(c.file("coupling_inequality.json"), to_json(r));
  c.res.summary = r.found ? fmt::format("l = {}, worst value {:.4g}", r.l, r.worst_value) : "no l found";
}

void run_lamperti(Ctx& c) {
  const auto& cfg = c.cfg;
  const double x0 = cfg.real("sim.x0");
  const double eps = cfg.maybe_real("lamperti.eps").value_or(1e-3 * x0);
  const auto n = static_cast<std::size_t>(cfg.integer("sim.paths"));
  const auto r = crossvalidate(cfg.mech, x0, cfg.real("lamperti.t_probe"), eps, n, cfg.sim(), c.exec);
  write_json(c.file("lamperti.json"), to_json(r));
  c.res.summary = fmt::format("KS D = {:.4g}, p = {:.4g}{}", r.ks_stat, r.p_value,
                              r.depleted ? " (over 90% absorbed: consider a smaller t_probe)" : "");
}

void run_qsd(Ctx& c) {
  const auto& cfg = c.cfg;
  const SimConfig sc = cfg.sim();
  const double t = cfg.real("qsd.t");
  const auto N = static_cast<std::size_t>(cfg.integer("qsd.N"));
  const auto bins = static_cast<std::size_t>(cfg.integer("qsd.bins"));
  const std::string method = cfg.text("qsd.method");
  const InitialLaw init = InitialLaw::point(cfg.real("qsd.init"));
  FvOptions o;
  o.window = cfg.real("qsd.window");
  json j{{"t", t}, {"N", N}, {"init", init.describe()}};
  std::optional<EmpiricalDistribution> fv, naive;
  if (method != "naive") {
    FvLaw law = fleming_viot(cfg.mech, cfg.g, init, t, N, bins, sc, o, c.exec);
    write_distribution_csv(c.file("distribution_fv.csv"), law.dist);
    j["fleming_viot"] = {{"resurrections", law.resurrections}, {"mean", law.dist.mean()}};
    fv = std::move(law.dist);
  }
  if (method != "fleming_viot") {
    SimConfig s2 = sc;
    s2.stream = std::uint64_t{1} << 41;
    NaiveLaw law = conditional_law_naive(cfg.mech, cfg.g, init, t, N, bins, s2, c.exec);
    write_distribution_csv(c.file("distribution_naive.csv"), law.dist);
    j["naive"] = {{"survivors", law.survivors}, {"n_paths", law.n_paths}, {"mean", law.dist.mean()}};
    naive = std::move(law.dist);
  }
  if (fv && naive) j["tv_fv_naive"] = tv_on_common_bins(fv->samples, naive->samples);
  const double rt = cfg.real("qsd.residual_t");
  const EmpiricalDistribution& pi = fv ? *fv : *naive;
  if (rt > 0.0) {
    SimConfig s3 = sc;
    s3.stream = std::uint64_t{3} << 40;
    j["fixed_point_residual"] = {
        {"t", rt},
        {"tv", qsd_fixed_point_residual(cfg.mech, cfg.g, pi, rt,
                                        static_cast<std::size_t>(cfg.integer("qsd.residual_paths")), s3, c.exec)}};
  }
  write_json(c.file("qsd.json"), j);
  c.res.summary = fmt::format("law at t = {} with mean {:.4g}", t, pi.mean());
}

void run_rate(Ctx& c) {
  const auto& cfg = c.cfg;
  const auto f = convergence_rate_fit(cfg.mech, cfg.g, InitialLaw::point(cfg.real("rate.init1")),
                                      InitialLaw::point(cfg.real("rate.init2")), cfg.reals("rate.times"),
                                      static_cast<std::size_t>(cfg.integer("rate.N")), cfg.sim(), {}, c.exec);
  write_json(c.file("fit.json"), to_json(f));
  c.res.summary = fmt::format("lambda_hat = {:.4g}, R2 = {:.4f} ({})", f.lambda_hat, f.r2, fit_verdict_name(f.verdict));
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& out, const Exec& exec) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out);
  Ctx c{cfg, out, exec, {}};
  const std::string& e = cfg.experiment;
  if (e == "conditions") run_conditions(c);
  else if (e == "flow") run_flow(c);
  else if (e == "simulate") run_simulate(c);
  else if (e == "couple") run_couple(c);
  else if (e == "lyapunov") run_lyapunov(c);
  else if (e == "coupling-inequality") run_coupling_inequality(c);
  else if (e == "lamperti") run_lamperti(c);
  else if (e == "qsd") run_qsd(c);
  else if (e == "rate") run_rate(c);
  else throw DomainError("unknown experiment '" + e + "'");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json m;
  m["experiment"] = e;
  m["config_sha256"] = sha256_hex(cfg.source_text);
  m["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  m["versions"] = {{"cbc_lab", version_string()},
                   {"compiler", __VERSION__},
                   {"boost", BOOST_LIB_VERSION},
                   {"fmt", FMT_VERSION},
                   {"openssl", OPENSSL_VERSION_TEXT}};
  m["wall_time_s"] = wall;
  m["exit_code"] = c.res.exit_code;
  json arts = json::array();
  for (const auto& a : c.res.artifacts) {
    const fs::path p = out / a;
    arts.push_back({{"file", a}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
  }
  m["artifacts"] = arts;
  write_json(out / "manifest.json", m);
  return c.res;
}

}  // namespace cbc
