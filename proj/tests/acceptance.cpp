// Acceptance run: one pass/fail line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cbc/cbflow.hpp"
#include "cbc/certificates.hpp"
#include "cbc/conditions.hpp"
#include "cbc/generator.hpp"
#include "cbc/lamperti.hpp"
#include "cbc/mechanism.hpp"
#include "cbc/qsd.hpp"
#include "cbc/simulator.hpp"
#include "cbc/stats.hpp"
#include "oracles.hpp"

using namespace cbc;

namespace {

const double kEulerGamma = 0.57721566490153286;

struct Outcome {
  bool pass = false;
  std::string detail;
};

SimConfig sim(double T, std::uint64_t seed) {
  SimConfig c;
  c.T = T;
  c.seed = seed;
  return c;
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

const BranchingMechanism kFeller = BranchingMechanism::feller(0.0, 1.0);
const BranchingMechanism kTS{0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)};

Outcome flow() {
  const double v = solve_v(kFeller, 1.0, 1.0).at(1.0);
  bool ok = std::abs(v - 0.5) <= 1e-8;
  const std::vector<BranchingMechanism> mechs{
      BranchingMechanism::feller(0.5, 1.0), kTS, {0.2, 0.3, LevyMeasure::tempered_stable(1.0, 1.2, 1.0)},
      {0.0, 0.0, LevyMeasure::atoms({{1.0, 2.0}})}};
  const double grid[] = {0.1, 0.4, 1.0, 2.5, 7.0};
  double worst = 0.0;
  for (const auto& m : mechs)
    for (double l : grid)
      for (double s : {0.05, 0.2, 0.5, 1.0, 2.0}) {
        const double vs = solve_v(m, l, s).at(s);
        for (double t : {0.05, 0.2, 0.5, 1.0, 2.0}) {
          const double lhs = solve_v(m, l, t + s).at(t + s);
          worst = std::max(worst, std::abs(lhs - solve_v(m, vs, t).at(t)) / std::abs(lhs));
        }
      }
  ok = ok && worst <= 1e-7;
  return {ok, fmt::format("|v_1(1) - 0.5| = {:.2e}, worst semigroup rel. error {:.2e} over 4 x 125", std::abs(v - 0.5),
                          worst)};
}

Outcome eigen() {
  const std::vector<BranchingMechanism> mechs{
      BranchingMechanism::feller(0.5, 1.0), kTS, {0.2, 0.3, LevyMeasure::tempered_stable(1.0, 1.2, 1.0)},
      {-0.3, 0.0, LevyMeasure::atoms({{0.5, 1.0}, {3.0, 0.2}})}};
  const std::vector<CompetitionFunction> gs{CompetitionFunction::zero(), CompetitionFunction::logistic(1.0),
                                            CompetitionFunction::power(0.5, 0.5)};
  double worst = 0.0;
  for (const auto& m : mechs)
    for (const auto& g : gs)
      for (auto [l, x] : {std::pair{0.5, 0.3}, {1.0, 1.0}, {2.0, 2.5}, {4.0, 0.1}, {0.2, 6.0}}) {
        const double ref = std::exp(-l * x) * (x * psi_eval(m, l) + l * g(x));
        const double got = apply_L(m, g, TestFunction::exponential(l), x);
        worst = std::max(worst, std::abs(got - ref) / std::max(1e-300, std::abs(ref)));
      }
  return {worst <= 1e-7, fmt::format("worst rel. error {:.2e} over 60 cases", worst)};
}

Outcome coupling_identities() {
  const std::vector<BranchingMechanism> mechs{BranchingMechanism::feller(0.5, 1.0), kTS,
                                              {0.2, 0.3, LevyMeasure::tempered_stable(1.0, 1.2, 1.0)}};
  const auto g = CompetitionFunction::logistic(1.0);
  const auto f = TestFunction::exponential(1.0);
  const auto phi = TestFunction::coupling_phi(0.5);
  double worst_marg = 0.0, worst_diff = 0.0;
  for (const auto& m : mechs)
    for (auto [x, y] : {std::pair{1.5, 1.49}, {2.0, 1.0}, {0.6, 0.5}}) {
      const double a = apply_coupling_L(m, g, PairFunction::of_first(f), x, y);
      const double b = apply_coupling_L(m, g, PairFunction::of_second(f), x, y);
      worst_marg = std::max({worst_marg, std::abs(a - apply_L(m, g, f, x)), std::abs(b - apply_L(m, g, f, y))});
      const double full = apply_coupling_L(m, g, PairFunction::of_difference(phi), x, y);
      const double diff = apply_coupling_L_diff(m, g, phi, x, y);
      worst_diff = std::max(worst_diff, std::abs(full - diff) / std::max(1.0, std::abs(full)));
    }
  // Independent evaluation of the difference form for the truncated stable case.
  const oracle::Phi p{0.5};
  const double x = 1.5, y = 1.49, d = x - y;
  const double jump = oracle::simpson_log(
      [&](double z) {
        const double inc = z < 1e-6 * d ? 0.5 * z * z * p.d2(d) : p.v(d + z) - p.v(d) - z * p.d1(d);
        return inc * std::pow(z, -2.5);
      },
      1e-18, 1.0, 400000);
  const double ref = y * (p.v(2.0 * d) - 2.0 * p.v(d)) * (std::pow(d, -1.5) - 1.0) / 3.0 + d * jump;
  const double got = apply_coupling_L_diff(kTS, CompetitionFunction::zero(), phi, x, y);
  const double oracle_err = std::abs(got - ref) / std::max(1.0, std::abs(ref));
  const bool ok = worst_marg <= 1e-6 && worst_diff <= 1e-6 && oracle_err <= 1e-6;
  return {ok, fmt::format("marginal err {:.2e}, difference-form err {:.2e}, independent oracle err {:.2e}", worst_marg,
                          worst_diff, oracle_err)};
}

Outcome coupling_inequality() {
  const auto r = verify_coupling_inequality(kTS, CompetitionFunction::power(1.0, 2.0), 0.5, 1.0, 2.0, 1.0);
  return {r.found && r.l > 0.0 && r.worst_value <= -1.0,
          fmt::format("found = {}, l = {:g}, worst value {:.4g}", r.found, r.l, r.worst_value)};
}

Outcome lyapunov() {
  const auto m = BranchingMechanism::feller(1.0, 1.0);
  const auto g = CompetitionFunction::logistic(1.0);
  const auto cert = build_lyapunov(m, g, 1.5, GrowthFunction::log_power(2.0));
  const auto rep = verify_lyapunov(cert, m, g, 5);
  double worst = kInf;
  for (const auto& r : rep.rows) worst = std::min(worst, r.margin);
  return {rep.ok && rep.rows.size() == 5 && worst >= 0.0,
          fmt::format("l = {:g}, C0 = {:.4g}, min margin over n <= 5: {:.4g}", cert.l, cert.C0, worst)};
}

Outcome grey() {
  const auto f = grey_check(kFeller).verdict;
  const auto n = grey_check({1.0 - kEulerGamma, 0.0, LevyMeasure::neveu(1.0)}).verdict;
  const auto t = grey_check(kTS).verdict;
  return {f == Verdict::Satisfied && n == Verdict::Violated && t == Verdict::Satisfied,
          fmt::format("Feller {}, Neveu {}, truncated stable {}", verdict_name(f), verdict_name(n), verdict_name(t))};
}

Outcome mc_laplace() {
  constexpr std::size_t kPaths = 100000;
  bool ok = true;
  std::string detail;
  struct Case {
    const char* name;
    BranchingMechanism m;
    double t;
  };
  for (const Case& cs : {Case{"Feller", kFeller, 1.0}, Case{"truncated stable", kTS, 0.5}}) {
    SimConfig c = sim(cs.t, 101);
    const auto r0 = mc_laplace_check(cs.m, CompetitionFunction::zero(), 1.0, 1.0, cs.t, kPaths, c);
    SimConfig ce = c;
    ce.eps = c.eps / 2.0;
    const auto re = mc_laplace_check(cs.m, CompetitionFunction::zero(), 1.0, 1.0, cs.t, kPaths, ce);
    SimConfig cd = c;
    cd.dt = c.dt / 2.0;
    const auto rd = mc_laplace_check(cs.m, CompetitionFunction::zero(), 1.0, 1.0, cs.t, kPaths, cd);
    const double se_e = std::hypot(r0.std_error, re.std_error), se_d = std::hypot(r0.std_error, rd.std_error);
    const double se_shift = std::abs(re.mc_mean - r0.mc_mean) / se_e, dt_shift = std::abs(rd.mc_mean - r0.mc_mean) / se_d;
    ok = ok && std::abs(r0.z) <= 3.0 && se_shift <= 2.0 && dt_shift <= 2.0;
    detail += fmt::format("{}{}: z = {:+.2f}, eps/2 shift {:.2f} SE, dt/2 shift {:.2f} SE", detail.empty() ? "" : "; ",
                          cs.name, r0.z, se_shift, dt_shift);
  }
  return {ok, detail};
}

Outcome extinction() {
  constexpr std::size_t kPaths = 100000;
  const auto paths = simulate_ensemble(kFeller, CompetitionFunction::zero(), 1.0, sim(1.0, 202), kPaths);
  std::size_t dead = 0;
  for (const auto& p : paths) dead += p.absorbed();
  const double ph = double(dead) / kPaths, se = std::sqrt(ph * (1.0 - ph) / kPaths);
  const double ref = extinction_prob(kFeller, 1.0, 1.0);
  return {std::abs(ph - ref) <= 3.0 * se,
          fmt::format("P = {:.5f} vs {:.5f} ({:+.2f} SE)", ph, ref, (ph - ref) / se)};
}

Outcome ordering() {
  constexpr std::uint64_t kPairs = 10000;
  const BranchingMechanism m{0.5, 0.5, LevyMeasure::truncated_stable(1.0, 1.5)};
  const auto g = CompetitionFunction::logistic(1.0);
  long start_viol = 0, g_viol = 0;
  for (std::uint64_t i = 0; i < kPairs; ++i) {
    SimConfig c = sim(1.0, 303);
    c.stream = i;
    const auto a = simulate_coupled_pair(m, g, 2.0, 1.0, c);
    start_viol += a.ordering_violations + (a.lower.final_value > a.upper.final_value);
    const auto b = simulate_coupled_pair(m, CompetitionFunction::zero(), g, 1.0, 1.0, c);
    g_viol += b.ordering_violations + (b.lower.final_value > b.upper.final_value);
  }
  return {start_viol == 0 && g_viol == 0,
          fmt::format("{} pairs: {} violations for x1 >= x2, {} for g vs zero", kPairs, start_viol, g_viol)};
}

Outcome lamperti() {
  constexpr std::size_t kPaths = 10000;
  constexpr int kReps = 10;
  bool ok = true;
  std::string detail;
  struct Case {
    const char* name;
    BranchingMechanism m;
    double t;
  };
  for (const Case& cs : {Case{"Feller", kFeller, 0.5}, Case{"truncated stable", kTS, 0.3}}) {
    int good = 0;
    double pmin = 1.0;
    for (int k = 0; k < kReps; ++k) {
      const auto r = crossvalidate(cs.m, 1.0, cs.t, 1e-3, kPaths, sim(1.0, 400 + k));
      good += r.p_value > 0.01;
      pmin = std::min(pmin, r.p_value);
    }
    ok = ok && good >= 9;
    detail += fmt::format("{}{}: {}/{} with p > 0.01 (min p {:.3f})", detail.empty() ? "" : "; ", cs.name, good, kReps,
                          pmin);
  }
  return {ok, detail};
}

Outcome qsd() {
  const auto m = BranchingMechanism::feller(1.0, 1.0);
  const auto g = CompetitionFunction::logistic(1.0);
  const SimConfig c1 = sim(1.0, 505);
  SimConfig c5 = c1;
  c5.stream = std::uint64_t{1} << 42;
  const auto a = fleming_viot(m, g, InitialLaw::point(1.0), 10.0, 1000, 0, c1);
  const auto b = fleming_viot(m, g, InitialLaw::point(5.0), 10.0, 1000, 0, c5);
  const double tv = tv_on_common_bins(a.dist.samples, b.dist.samples);
  SimConfig cr = c1;
  cr.stream = 3 * (std::uint64_t{1} << 40);
  const double residual = qsd_fixed_point_residual(m, g, a.dist, 1.0, 10000, cr);
  const auto fit = convergence_rate_fit(m, g, InitialLaw::point(1.0), InitialLaw::point(5.0),
                                        {0.25, 0.5, 1.0, 2.0, 4.0, 6.0}, 1000, sim(1.0, 606));
  const bool ok = tv <= 0.1 && residual <= 0.1 && fit.lambda_hat > 0.0 && fit.r2 >= 0.9;
  return {ok, fmt::format("TV(d1, d5) = {:.4f}, residual = {:.4f}, lambda_hat = {:.3f}, R2 = {:.4f} ({} points)", tv,
                          residual, fit.lambda_hat, fit.r2, fit.points_used)};
}

Outcome small_init() {
  const BranchingMechanism neveu{1.0 - kEulerGamma, 0.0, LevyMeasure::neveu(1.0)};
  SimConfig c = sim(1.0, 707);
  c.state_cap = 10.0;
  const auto pr = small_initial_extinction_probe(neveu, CompetitionFunction::power(1.0, 0.5), {0.1, 0.05, 0.01, 0.002},
                                                 1.0, 20000, c);
  bool ok = pr.delta.has_value();
  std::string rows;
  for (std::size_t i = 0; i < pr.rows.size(); ++i) {
    const auto& r = pr.rows[i];
    if (i < 3) {
      ok = ok && r.envelope && r.dominated;
      if (i > 0) ok = ok && r.survival <= pr.rows[i - 1].survival;
    }
    rows += fmt::format("{}y={:g}: {:.4f}+-{:.4f} <= {:.3f}", rows.empty() ? "" : ", ", r.y, r.survival, r.std_error,
                        r.envelope.value_or(std::nan("")));
  }
  return {ok, fmt::format("delta = {:.4g}; {}", pr.delta.value_or(0.0), rows)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {"flow correctness", flow},
      {"generator eigen-identity", eigen},
      {"coupling generator identities", coupling_identities},
      {"coupling inequality", coupling_inequality},
      {"Lyapunov certificate", lyapunov},
      {"Grey calibration", grey},
      {"Monte Carlo Laplace transform", mc_laplace},
      {"extinction probability", extinction},
      {"coupled-path ordering", ordering},
      {"Lamperti cross-validation", lamperti},
      {"QSD self-consistency", qsd},
      {"small-initial-value bound", small_init},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("[%s] %2zu %-30s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", all.size() - failed, all.size());
  return failed ? 1 : 0;
}
