#include "cbc/qsd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cbc/conditions.hpp"
#include "cbc/error.hpp"
#include "cbc/generator.hpp"

namespace cbc {

namespace {

constexpr std::uint32_t kInitWord = 3;
constexpr std::uint32_t kResampleWord = 4;
constexpr std::uint64_t kSecondRun = std::uint64_t{1} << 40;
// Two N-sample histograms on K equal-probability bins differ in TV by about
// sqrt((K - 1) / (pi N)); K = 5 keeps that well under the 2 / sqrt(N) floor.
constexpr std::size_t kRateBins = 5;

SimConfig plain(const SimConfig& cfg, double T) {
  SimConfig c = cfg;
  c.T = T;
  c.record_path = c.record_jumps = false;
  c.levels_down.clear();
  c.levels_up.clear();
  return c;
}

}  // namespace

InitialLaw InitialLaw::point(double x) {
  if (!(x > 0.0)) throw DomainError("InitialLaw: point must be > 0");
  InitialLaw l;
  l.atoms_ = {x};
  return l;
}

InitialLaw InitialLaw::empirical(std::vector<double> samples) {
  if (samples.empty()) throw DomainError("InitialLaw: no samples");
  for (double x : samples)
    if (!(x > 0.0)) throw DomainError("InitialLaw: samples must be > 0");
  InitialLaw l;
  l.atoms_ = std::move(samples);
  return l;
}

double InitialLaw::draw(RandomStream& rng) const {
  if (atoms_.size() == 1) return atoms_[0];
  const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(atoms_.size()));
  return atoms_[std::min(k, atoms_.size() - 1)];
}

std::string InitialLaw::describe() const {
  return is_point() ? fmt::format("delta({})", atoms_[0]) : fmt::format("empirical({} samples)", atoms_.size());
}

NaiveLaw conditional_law_naive(const BranchingMechanism& mech, const CompetitionFunction& g, const InitialLaw& init,
                               double t, std::size_t n_paths, std::size_t bins, const SimConfig& cfg,
                               const Exec& exec) {
  if (!(t >= 0.0)) throw DomainError("conditional_law_naive: t >= 0 required");
  std::vector<double> out(n_paths, 0.0);
  const SimConfig base = plain(cfg, t);
  parallel_for(n_paths, exec, [&](std::size_t i) {
    RandomStream r0(cfg.seed, cfg.stream + i, kInitWord);
    const double x0 = init.draw(r0);
    if (t == 0.0) {
      out[i] = x0;
      return;
    }
    SimConfig c = base;
    c.stream = cfg.stream + i;
    const PathSample p = simulate_path(mech, g, x0, c);
    out[i] = p.absorbed() ? 0.0 : p.final_value;
  });
  std::vector<double> alive;
  for (double y : out)
    if (y > 0.0) alive.push_back(y);
  NaiveLaw law;
  law.n_paths = n_paths;
  law.survivors = alive.size();
  if (alive.size() < 100)
    throw DomainError(fmt::format(
        "conditional_law_naive: only {} of {} paths survive to t={}; use the Fleming-Viot estimator",
        alive.size(), n_paths, t));
  law.dist = EmpiricalDistribution::from_samples(std::move(alive), bins);
  return law;
}

FvRun fleming_viot_run(const BranchingMechanism& mech, const CompetitionFunction& g, const InitialLaw& init,
                       const std::vector<double>& times, std::size_t N, const SimConfig& cfg, const FvOptions& opts,
                       const Exec& exec) {
  if (N < 100) throw DomainError("fleming_viot: N >= 100 required");
  if (times.empty()) throw DomainError("fleming_viot: no observation times");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (!(times[k] >= 0.0) || (k > 0 && !(times[k] > times[k - 1])))
      throw DomainError("fleming_viot: times must be >= 0 and increasing");
  cfg.validate();
  const double w = opts.window > 0.0 ? opts.window : 10.0 * cfg.dt;

  std::vector<double> x(N);
  for (std::size_t i = 0; i < N; ++i) {
    RandomStream r0(cfg.seed, cfg.stream + i, kInitWord);
    x[i] = init.draw(r0);
  }
  FvRun run;
  std::vector<double> tau(N);
  std::vector<std::size_t> dead, alive;
  double now = 0.0;
  std::uint64_t window = 0;
  for (double target : times) {
    while (now < target) {
      const double h = std::min(w, target - now);
      const SimConfig base = plain(cfg, h);
      const std::uint64_t offset = cfg.stream + (window + 1) * N;
      parallel_for(N, exec, [&](std::size_t i) {
        SimConfig c = base;
        c.stream = offset + i;
        const PathSample p = simulate_path(mech, g, x[i], c);
        x[i] = p.final_value;
        tau[i] = p.tau0;
      });
      dead.clear();
      alive.clear();
      for (std::size_t i = 0; i < N; ++i) (std::isfinite(tau[i]) ? dead : alive).push_back(i);
      if (!dead.empty()) {
        if (alive.empty())
          throw NumericFailure(fmt::format("fleming_viot: all {} particles absorbed in the window ending at t={}",
                                           N, now + h));
        std::sort(dead.begin(), dead.end(), [&](std::size_t a, std::size_t b) {
          return tau[a] != tau[b] ? tau[a] < tau[b] : a < b;
        });
        RandomStream pick(cfg.seed, cfg.stream + window, kResampleWord);
        for (std::size_t i : dead) {
          const auto k = static_cast<std::size_t>(pick.uniform() * static_cast<double>(alive.size()));
          const std::size_t parent = alive[std::min(k, alive.size() - 1)];
          x[i] = x[parent];
          if (opts.keep_log) run.log.push_back({now + tau[i], i, parent});
          alive.push_back(i);
        }
        run.resurrections += dead.size();
      }
      for (double v : x)
        if (!(v > 0.0)) throw InvariantBreach("fleming_viot: non-positive particle after resampling");
      now += h;
      ++window;
    }
    run.snapshots.push_back({target, x});
  }
  return run;
}

FvLaw fleming_viot(const BranchingMechanism& mech, const CompetitionFunction& g, const InitialLaw& init, double t,
                   std::size_t N, std::size_t bins, const SimConfig& cfg, const FvOptions& opts, const Exec& exec) {
  FvRun run = fleming_viot_run(mech, g, init, {t}, N, cfg, opts, exec);
  FvLaw law;
  law.dist = EmpiricalDistribution::from_samples(std::move(run.snapshots.back().states), bins);
  law.resurrections = run.resurrections;
  law.log = std::move(run.log);
  return law;
}

const char* fit_verdict_name(FitVerdict v) {
  switch (v) {
    case FitVerdict::Converged: return "converged";
    case FitVerdict::AlreadyConverged: return "already converged";
    case FitVerdict::Insufficient: return "insufficient";
    case FitVerdict::NotDecaying: return "not decaying";
  }
  return "?";
}

ConvergenceFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& d, double noise_floor) {
  if (t.size() != d.size()) throw DomainError("fit_log_linear: size mismatch");
  if (t.size() < 4) throw DomainError("fit_log_linear: at least 4 time points required");
  ConvergenceFit f;
  f.t = t;
  f.d = d;
  f.noise_floor = noise_floor;
  // Only the leading decreasing run above the floor: once d reaches the floor
  // or turns up, later values are noise even if they poke back above it.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size() && d[i] > noise_floor && (i == 0 || d[i] < d[i - 1]); ++i) {
    xs.push_back(t[i]);
    ys.push_back(std::log(d[i]));
  }
  f.points_used = xs.size();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (d[i] <= noise_floor && t[i] > 0.0) {
      f.lambda_lower = std::max(0.0, -std::log(noise_floor) / t[i]);
      break;
    }
  if (xs.size() < 2) {
    f.verdict = xs.empty() ? FitVerdict::AlreadyConverged : FitVerdict::Insufficient;
    return f;
  }
  const LinearFit lf = least_squares(xs, ys);
  f.lambda_hat = -lf.slope;
  f.C_hat = std::exp(lf.intercept);
  f.r2 = lf.r2;
  f.verdict = f.lambda_hat > 0.0 ? FitVerdict::Converged : FitVerdict::NotDecaying;
  return f;
}

ConvergenceFit convergence_rate_fit(const BranchingMechanism& mech, const CompetitionFunction& g,
                                    const InitialLaw& init1, const InitialLaw& init2,
                                    const std::vector<double>& t_grid, std::size_t N, const SimConfig& cfg,
                                    const FvOptions& opts, const Exec& exec) {
  if (t_grid.size() < 4) throw DomainError("convergence_rate_fit: at least 4 time points required");
  const FvRun a = fleming_viot_run(mech, g, init1, t_grid, N, cfg, opts, exec);
  SimConfig c2 = cfg;
  c2.stream = cfg.stream + kSecondRun;
  const FvRun b = fleming_viot_run(mech, g, init2, t_grid, N, c2, opts, exec);
  std::vector<double> d;
  for (std::size_t k = 0; k < t_grid.size(); ++k)
    d.push_back(tv_on_common_bins(a.snapshots[k].states, b.snapshots[k].states, kRateBins));
  return fit_log_linear(t_grid, d, 2.0 / std::sqrt(static_cast<double>(N)));
}

double qsd_fixed_point_residual(const BranchingMechanism& mech, const CompetitionFunction& g,
                                const EmpiricalDistribution& pi_hat, double t, std::size_t n_paths,
                                const SimConfig& cfg, const Exec& exec) {
  if (pi_hat.samples.empty()) throw DomainError("qsd_fixed_point_residual: pi_hat carries no samples");
  if (pi_hat.ess < 100.0) throw DomainError("qsd_fixed_point_residual: pi_hat needs >= 100 effective samples");
  const NaiveLaw law =
      conditional_law_naive(mech, g, InitialLaw::empirical(pi_hat.samples), t, n_paths, 0, cfg, exec);
  return tv_on_common_bins(law.dist.samples, pi_hat.samples);
}

std::optional<double> search_delta(const BranchingMechanism& mech, const CompetitionFunction& g, double rho) {
  const TestFunction phi = TestFunction::coupling_phi(rho);
  // k = 8 is 1/4; the scan stops at 2^-40.
  std::optional<double> delta;
  for (int k = 160; k >= 8; --k) {
    const double x = std::exp2(-k / 4.0);
    if (!(apply_L(mech, g, phi, x) < -1.0)) break;
    delta = x;
  }
  return delta;
}

SmallInitProbe small_initial_extinction_probe(const BranchingMechanism& mech, const CompetitionFunction& g,
                                              std::vector<double> ys, double t, std::size_t n_paths,
                                              const SimConfig& cfg, const Exec& exec) {
  if (!(t > 0.0)) throw DomainError("small_initial_extinction_probe: t > 0 required");
  if (ys.empty() || n_paths < 2) throw DomainError("small_initial_extinction_probe: empty y grid or too few paths");
  const ConditionReport nz = near_zero_competition_check(mech, g);
  const auto theta = nz.find("theta");
  if (mech.c() != 0.0 || !theta || !(*theta > 0.0 && *theta < 1.0))
    throw DomainError("small_initial_extinction_probe: needs c = 0 and g(x) >= x^theta near 0, theta in (0,1)");
  SmallInitProbe pr;
  pr.theta = *theta;
  pr.rho = 0.5 * (1.0 - pr.theta);
  pr.t = t;
  pr.n_paths = n_paths;
  pr.delta = search_delta(mech, g, pr.rho);
  if (!pr.delta) pr.note = "no delta <= 1/4 with L phi < -1 found; envelope omitted";
  const TestFunction phi = TestFunction::coupling_phi(pr.rho);

  const SimConfig base = plain(cfg, t);
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const double y = ys[j];
    if (!(y > 0.0)) throw DomainError("small_initial_extinction_probe: y > 0 required");
    std::vector<unsigned char> alive(n_paths, 0);
    parallel_for(n_paths, exec, [&](std::size_t i) {
      SimConfig c = base;
      c.stream = cfg.stream + j * n_paths + i;
      alive[i] = simulate_path(mech, g, y, c).absorbed() ? 0 : 1;
    });
    SmallInitRow row;
    row.y = y;
    row.survivors = std::accumulate(alive.begin(), alive.end(), std::size_t{0});
    row.survival = double(row.survivors) / double(n_paths);
    row.std_error = std::sqrt(row.survival * (1.0 - row.survival) / double(n_paths));
    row.ci = wilson_interval(row.survivors, n_paths);
    if (pr.delta) {
      row.envelope = phi.value(y) / t + phi.value(y) / phi.value(*pr.delta);
      row.dominated = row.survival - 2.0 * row.std_error <= *row.envelope;
    }
    pr.rows.push_back(row);
  }
  std::vector<std::size_t> order(ys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
  for (std::size_t k = 1; k < order.size(); ++k)
    if (pr.rows[order[k]].survival > pr.rows[order[k - 1]].survival) pr.monotone = false;
  return pr;
}

}  // namespace cbc
