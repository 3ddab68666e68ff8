#include "cbc/simulator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cbc/cbflow.hpp"
#include "cbc/error.hpp"

namespace cbc {

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw DomainError("sim: dt > 0 required");
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("sim: eps in (0, 1] required");
  if (!(T > 0.0)) throw DomainError("sim: T > 0 required");
  if (!(headroom > 0.0)) throw DomainError("sim: headroom > 0 required");
  if (refresh_budget < 1) throw DomainError("sim: refresh budget >= 1 required");
}

const char* event_name(EventType e) {
  switch (e) {
    case EventType::Step:
      return "step";
    case EventType::Jump:
      return "jump";
    case EventType::Absorb:
      return "absorb";
  }
  return "?";
}

// ---------------------------------------------------------------- jumps

JumpSampler::JumpSampler(const LevyMeasure& mu, double eps) : mu_(mu), eps_(eps), rate_(0.0) {
  if (mu.is_zero()) return;
  rate_ = mu.tail_mass(eps);
  switch (mu.kind()) {
    case LevyMeasure::Kind::TruncatedStable:
      lo_pow_ = std::pow(eps, -mu.beta());
      hi_pow_ = 1.0;
      break;
    case LevyMeasure::Kind::FiniteAtoms: {
      double s = 0.0;
      for (const Atom& a : mu.atom_list()) {
        if (a.z > eps) s += a.w;
        atom_cdf_.push_back(s);
      }
      break;
    }
    default:
      break;
  }
}

double JumpSampler::sample(RandomStream& rng) const {
  const double u = rng.uniform();
  switch (mu_.kind()) {
    case LevyMeasure::Kind::TruncatedStable:
      return std::pow(lo_pow_ - u * (lo_pow_ - hi_pow_), -1.0 / mu_.beta());
    case LevyMeasure::Kind::Stable:
    case LevyMeasure::Kind::Neveu:
      return eps_ * std::pow(u, -1.0 / mu_.beta());
    case LevyMeasure::Kind::TemperedStable: {
      double z = eps_ * std::pow(u, -1.0 / mu_.beta());
      while (rng.uniform() >= std::exp(-mu_.lambda0() * (z - eps_)))
        z = eps_ * std::pow(rng.uniform(), -1.0 / mu_.beta());
      return z;
    }
    case LevyMeasure::Kind::FiniteAtoms: {
      const double target = u * atom_cdf_.back();
      const auto it = std::upper_bound(atom_cdf_.begin(), atom_cdf_.end(), target);
      const std::size_t i = std::min<std::size_t>(it - atom_cdf_.begin(), atom_cdf_.size() - 1);
      return mu_.atom_list()[i].z;
    }
    default: {
      // Invert the tail mass by bisection in log z.
      const double target = u * rate_;
      double lo = eps_, hi = 2.0 * eps_;
      while (mu_.tail_mass(hi) > target && hi < 1e300) {
        lo = hi;
        hi *= 2.0;
      }
      for (int i = 0; i < 60; ++i) {
        const double mid = std::sqrt(lo * hi);
        (mu_.tail_mass(mid) > target ? lo : hi) = mid;
      }
      return std::sqrt(lo * hi);
    }
  }
}

SchemeCoefficients scheme_coefficients(const BranchingMechanism& mech, double eps) {
  const LevyMeasure& mu = mech.mu();
  if (mu.is_zero()) return {0.0, 0.0, 0.0};
  return {mu.first_moment(eps, 1.0), mu.moment_below(2, eps), mu.tail_mass(eps)};
}

// ---------------------------------------------------------------- single path

namespace {

constexpr double kInfT = std::numeric_limits<double>::infinity();

// One RK4 step of dy/dt = f(y); the drift is frozen at 0 below 0.
template <class F>
double flow_step(const F& f, double y, double tau) {
  const auto fp = [&](double u) { return f(std::max(u, 0.0)); };
  const double k1 = fp(y);
  const double k2 = fp(y + 0.5 * tau * k1);
  const double k3 = fp(y + 0.5 * tau * k2);
  const double k4 = fp(y + tau * k3);
  return y + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct Tracker {
  const SimConfig& cfg;
  PathSample& out;

  void init(double x0) {
    out.hit_down.assign(cfg.levels_down.size(), kInfT);
    out.hit_up.assign(cfg.levels_up.size(), kInfT);
    check(0.0, x0);
    record(0.0, x0, EventType::Step);
  }
  void check(double t, double y) {
    for (std::size_t i = 0; i < cfg.levels_down.size(); ++i)
      if (out.hit_down[i] == kInfT && y <= cfg.levels_down[i]) out.hit_down[i] = t;
    for (std::size_t i = 0; i < cfg.levels_up.size(); ++i)
      if (out.hit_up[i] == kInfT && y >= cfg.levels_up[i]) out.hit_up[i] = t;
  }
  void record(double t, double y, EventType e) {
    if (!cfg.record_path) return;
    out.t.push_back(t);
    out.y.push_back(y);
    out.event.push_back(e);
  }
};

}  // namespace

PathSample simulate_path(const BranchingMechanism& mech, const CompetitionFunction& g, double x0,
                         const SimConfig& cfg) {
  cfg.validate();
  if (!(x0 >= 0.0)) throw DomainError("simulate_path: x0 >= 0 required");
  const SchemeCoefficients co = scheme_coefficients(mech, cfg.eps);
  const JumpSampler js(mech.mu(), cfg.eps);
  const double rate = js.rate();
  const double vc = 2.0 * mech.c() + co.sigma2;
  const double b = mech.b();
  const auto drift = [&](double u) { return -(b * u + g(u) + u * co.m_eps); };
  RandomStream rng(cfg.seed, cfg.stream, 0);

  PathSample out;
  Tracker tr{cfg, out};
  tr.init(x0);
  double t = 0.0, y = x0, h = cfg.dt;
  const double h_min = cfg.dt * 0x1p-20;
  if (y == 0.0) out.tau0 = 0.0;
  if (y >= cfg.state_cap) {
    out.capped = true;
    out.cap_time = 0.0;
  }

  while (t < cfg.T && !out.absorbed() && !out.capped) {
    const double step_end = std::min(cfg.T, t + h);
    double ybar = (1.0 + cfg.headroom) * y;
    int refresh = 0;
    double next = rate > 0.0 ? t + rng.exponential() / (ybar * rate) : kInfT;
    for (;;) {
      const double seg_end = std::min(next, step_end);
      const double tau = seg_end - t;
      if (tau > 0.0) {
        const double noise = vc > 0.0 ? std::sqrt(vc * y * tau) * rng.normal() : 0.0;
        y = flow_step(drift, y, tau) + noise;
      }
      t = seg_end;
      if (y <= 0.0) {
        y = 0.0;
        out.tau0 = t;
        tr.check(t, y);
        tr.record(t, y, EventType::Absorb);
        break;
      }
      tr.check(t, y);
      if (y >= cfg.state_cap) {
        out.capped = true;
        out.cap_time = t;
        tr.record(t, y, EventType::Step);
        break;
      }
      if (next > step_end) {
        tr.record(t, y, EventType::Step);
        break;
      }
      if (y > ybar) {
        // Dominating level exceeded: raise it and restart the candidate clock.
        ++out.refreshes;
        ybar = (1.0 + cfg.headroom) * y;
        if (++refresh > cfg.refresh_budget) {
          h *= 0.5;
          ++out.halvings;
          refresh = 0;
          if (h < h_min)
            throw NumericFailure(fmt::format("simulate_path: step below dt*2^-20 at t={} (Y={})", t, y), y);
        }
      } else if (rng.uniform() * ybar < y) {
        const double z = js.sample(rng);
        y += z;
        if (cfg.record_jumps) out.jumps.push_back({t, z});
        tr.check(t, y);
        tr.record(t, y, EventType::Jump);
        if (y >= cfg.state_cap) {
          out.capped = true;
          out.cap_time = t;
          break;
        }
        if (y > ybar) ybar = (1.0 + cfg.headroom) * y;
      }
      next = t + rng.exponential() / (ybar * rate);
    }
  }
  out.final_value = y;
  return out;
}

// ---------------------------------------------------------------- coupled pair

CoupledPair simulate_coupled_pair(const BranchingMechanism& mech, const CompetitionFunction& g_upper,
                                  const CompetitionFunction& g_lower, double x1, double x2,
                                  const SimConfig& cfg) {
  cfg.validate();
  if (!(x1 >= x2 && x2 >= 0.0)) throw DomainError("coupled pair: x1 >= x2 >= 0 required");
  const SchemeCoefficients co = scheme_coefficients(mech, cfg.eps);
  const JumpSampler js(mech.mu(), cfg.eps);
  const double rate = js.rate();
  const double vc = 2.0 * mech.c() + co.sigma2;
  const double b = mech.b();
  RandomStream rng(cfg.seed, cfg.stream, 1);

  CoupledPair out;
  Tracker up{cfg, out.upper}, lo{cfg, out.lower};
  double L = x2, Z = x1 - x2;
  up.init(L + Z);
  lo.init(L);
  if (L == 0.0) out.lower.tau0 = 0.0;
  if (L + Z == 0.0) out.upper.tau0 = 0.0;
  if (Z == 0.0) out.coalescence_time = 0.0;
  double t = 0.0, h = cfg.dt;
  const double h_min = cfg.dt * 0x1p-20;
  auto drift = [&](const CompetitionFunction& g, double y) { return -(b * y + g(y) + y * co.m_eps); };
  auto note = [&](double tt, EventType e) {
    const double U = L + Z;
    if (U < L) ++out.ordering_violations;
    up.check(tt, U);
    lo.check(tt, L);
    up.record(tt, U, e);
    lo.record(tt, L, e);
  };

  while (t < cfg.T && !out.upper.absorbed()) {
    const double step_end = std::min(cfg.T, t + h);
    double ubar = (1.0 + cfg.headroom) * (L + Z);
    int refresh = 0;
    double next = rate > 0.0 ? t + rng.exponential() / (ubar * rate) : kInfT;
    for (;;) {
      const double seg_end = std::min(next, step_end);
      const double tau = seg_end - t;
      if (tau > 0.0) {
        const double U = L + Z;
        const auto fu = [&](double u) { return drift(g_upper, u); };
        const auto fl = [&](double u) { return drift(g_lower, u); };
        const double L1 = L > 0.0 ? flow_step(fl, L, tau) : 0.0;
        double dL = L1 - L;
        double dZ = (flow_step(fu, U, tau) - U) - dL;
        if (vc > 0.0) {
          const double n1 = rng.normal(), n2 = rng.normal();
          if (L > 0.0) dL += std::sqrt(vc * L * tau) * n1;
          if (Z > 0.0) dZ += std::sqrt(vc * Z * tau) * n2;
        }
        L += dL;
        Z += dZ;
      }
      t = seg_end;
      if (L <= 0.0 && !out.lower.absorbed()) {
        L = 0.0;
        out.lower.tau0 = t;
      }
      if (L < 0.0) L = 0.0;
      if (Z <= 0.0) {
        Z = 0.0;
        if (out.coalescence_time == kInfT) out.coalescence_time = t;
      }
      if (L + Z <= 0.0) {
        out.upper.tau0 = t;
        note(t, EventType::Absorb);
        break;
      }
      if (next > step_end) {
        note(t, EventType::Step);
        break;
      }
      const double U = L + Z;
      if (U > ubar) {
        ++out.upper.refreshes;
        ubar = (1.0 + cfg.headroom) * U;
        if (++refresh > cfg.refresh_budget) {
          h *= 0.5;
          ++out.upper.halvings;
          refresh = 0;
          if (h < h_min) throw NumericFailure("coupled pair: step below dt*2^-20", U);
        }
      } else {
        const double u = rng.uniform() * ubar;
        if (u < U) {
          const double z = js.sample(rng);
          if (u < L) {
            L += z;
            if (cfg.record_jumps) out.lower.jumps.push_back({t, z});
          } else {
            Z += z;
          }
          if (cfg.record_jumps) out.upper.jumps.push_back({t, z});
          note(t, EventType::Jump);
          if (L + Z > ubar) ubar = (1.0 + cfg.headroom) * (L + Z);
        }
      }
      next = t + rng.exponential() / (ubar * rate);
    }
  }
  out.upper.final_value = L + Z;
  out.lower.final_value = L;
  if (out.ordering_violations > 0)
    throw InvariantBreach(fmt::format("coupled pair: {} ordering violations", out.ordering_violations));
  return out;
}

// ---------------------------------------------------------------- ensembles

std::vector<PathSample> simulate_ensemble(const BranchingMechanism& mech, const CompetitionFunction& g,
                                          double x0, const SimConfig& cfg, std::size_t n_paths,
                                          const Exec& exec) {
  std::vector<PathSample> out(n_paths);
  parallel_for(n_paths, exec, [&](std::size_t i) {
    SimConfig c = cfg;
    c.stream = i;
    out[i] = simulate_path(mech, g, x0, c);
  });
  return out;
}

HittingSample hitting_time(const BranchingMechanism& mech, const CompetitionFunction& g, double x0,
                           double level, bool upward, const SimConfig& cfg, std::size_t n_paths,
                           const Exec& exec) {
  if (!(level >= 0.0)) throw DomainError("hitting_time: level >= 0 required");
  SimConfig c = cfg;
  c.levels_down.clear();
  c.levels_up.clear();
  (upward ? c.levels_up : c.levels_down).push_back(level);
  c.record_path = false;
  HittingSample hs;
  hs.times.resize(n_paths);
  parallel_for(n_paths, exec, [&](std::size_t i) {
    SimConfig ci = c;
    ci.stream = i;
    const PathSample p = simulate_path(mech, g, x0, ci);
    hs.times[i] = upward ? p.hit_up[0] : p.hit_down[0];
  });
  for (double t : hs.times)
    if (t == kInfT) ++hs.censored;
  return hs;
}

ExitScan exit_probability_scan(const BranchingMechanism& mech, const CompetitionFunction& g, double A,
                               double B, double A1, double B1, const std::vector<double>& t_grid,
                               std::size_t n_paths, const SimConfig& cfg, int y_points, const Exec& exec) {
  if (!(0.0 < A && A < A1 && A1 < B1 && B1 < B)) throw DomainError("exit scan: 0 < A < A' < B' < B required");
  if (t_grid.empty() || y_points < 1) throw DomainError("exit scan: empty grid");
  SimConfig c = cfg;
  c.T = *std::max_element(t_grid.begin(), t_grid.end());
  c.levels_down = {A};
  c.levels_up = {B};
  c.record_path = false;
  ExitScan scan;
  for (double t : t_grid) scan.rows.push_back({t, 0.0, A1, 0.0});
  for (int k = 0; k < y_points; ++k) {
    const double y = y_points == 1 ? 0.5 * (A1 + B1) : A1 + (B1 - A1) * k / (y_points - 1);
    std::vector<double> S(n_paths);
    parallel_for(n_paths, exec, [&](std::size_t i) {
      SimConfig ci = c;
      ci.stream = static_cast<std::uint64_t>(k) * n_paths + i;
      const PathSample p = simulate_path(mech, g, y, ci);
      S[i] = std::min({p.hit_down[0], p.hit_up[0], p.tau0});
    });
    for (ExitRow& row : scan.rows) {
      const double cnt = static_cast<double>(std::count_if(S.begin(), S.end(), [&](double s) { return s < row.t; }));
      const double p = cnt / static_cast<double>(n_paths);
      if (p > row.sup_p) {
        row.sup_p = p;
        row.worst_y = y;
      }
    }
  }
  double num = 0.0, den = 0.0, mean = 0.0;
  for (ExitRow& row : scan.rows) {
    row.ratio = row.sup_p / std::sqrt(row.t);
    num += row.sup_p * std::sqrt(row.t);
    den += row.t;
    mean += row.sup_p;
  }
  scan.C_fit = num / den;
  mean /= static_cast<double>(scan.rows.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (const ExitRow& row : scan.rows) {
    const double r = row.sup_p - scan.C_fit * std::sqrt(row.t);
    ss_res += r * r;
    ss_tot += (row.sup_p - mean) * (row.sup_p - mean);
  }
  scan.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return scan;
}

LaplaceCheck mc_laplace_check(const BranchingMechanism& mech, const CompetitionFunction& g, double x0,
                              double lambda, double t, std::size_t n_paths, const SimConfig& cfg,
                              const Exec& exec) {
  if (!g.is_zero())
    throw DomainError("mc_laplace_check: the Laplace identity holds for the pure CB process only (g = 0)");
  if (!(lambda > 0.0 && t >= 0.0 && n_paths >= 2)) throw DomainError("mc_laplace_check: bad arguments");
  LaplaceCheck lc;
  lc.n_paths = n_paths;
  lc.analytic = laplace_transform(mech, x0, lambda, t);
  if (t == 0.0) {
    lc.mc_mean = std::exp(-lambda * x0);
    return lc;
  }
  SimConfig c = cfg;
  c.T = t;
  c.record_path = false;
  std::vector<double> v(n_paths);
  parallel_for(n_paths, exec, [&](std::size_t i) {
    SimConfig ci = c;
    ci.stream = i;
    v[i] = std::exp(-lambda * simulate_path(mech, g, x0, ci).final_value);
  });
  double s = 0.0, s2 = 0.0;
  for (double x : v) s += x;
  lc.mc_mean = s / static_cast<double>(n_paths);
  for (double x : v) s2 += (x - lc.mc_mean) * (x - lc.mc_mean);
  lc.std_error = std::sqrt(s2 / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths));
  lc.z = lc.std_error > 0.0 ? (lc.mc_mean - lc.analytic) / lc.std_error : 0.0;
  return lc;
}

}  // namespace cbc
