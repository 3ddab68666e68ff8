#include "cbc/lamperti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cbc/error.hpp"

namespace cbc {

namespace {

constexpr double kInfS = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kLevyWord = 2;

class LevyWalker {
 public:
  LevyWalker(const BranchingMechanism& mech, double eps, std::uint64_t seed, std::uint64_t index)
      : js_(mech.mu(), eps), rng_(seed, index, kLevyWord) {
    const SchemeCoefficients co = scheme_coefficients(mech, eps);
    drift_ = -mech.b() - co.m_eps;
    vol_ = std::sqrt(2.0 * mech.c() + co.sigma2);
    rate_ = js_.rate();
    next_ = rate_ > 0.0 ? rng_.exponential() / rate_ : kInfS;
  }

  // Advances (s, n) over [s, s + ds]. seg(s0, n0, s1, n1) sees each
  // continuous piece, jump(s, n_minus, n_plus) each jump; either returns
  // false to stop the walk. Returns false when stopped.
  template <class Seg, class Jump>
  bool advance(double& s, double& n, double ds, Seg&& seg, Jump&& jump) {
    const double end = s + ds;
    while (next_ <= end) {
      if (!piece(s, n, next_, seg)) return false;
      const double z = js_.sample(rng_);
      const double before = n;
      n += z;
      if (!jump(s, before, n)) return false;
      next_ += rng_.exponential() / rate_;
    }
    return piece(s, n, end, seg);
  }

 private:
  template <class Seg>
  bool piece(double& s, double& n, double s1, Seg&& seg) {
    const double tau = s1 - s;
    double n1 = n;
    if (tau > 0.0) n1 = n + drift_ * tau + (vol_ > 0.0 ? vol_ * std::sqrt(tau) * rng_.normal() : 0.0);
    const double s0 = s, n0 = n;
    s = s1;
    n = n1;
    return seg(s0, n0, s1, n1);
  }

  JumpSampler js_;
  RandomStream rng_;
  double drift_ = 0.0, vol_ = 0.0, rate_ = 0.0, next_ = kInfS;
};

// Trapezoid clock over one continuous cell. When the cell ends at or below
// eps it is cut once at the linearly interpolated crossing.
struct ClockCell {
  double s_end, n_end, deta;
  bool crossed;
};

ClockCell clock_cell(double s0, double n0, double s1, double n1, double eps) {
  if (n1 <= eps) {
    const double frac = n0 > n1 ? (n0 - eps) / (n0 - n1) : 0.0;
    const double sc = s0 + frac * (s1 - s0);
    return {sc, eps, 0.5 * (sc - s0) * (1.0 / n0 + 1.0 / eps), true};
  }
  return {s1, n1, 0.5 * (s1 - s0) * (1.0 / n0 + 1.0 / n1), false};
}

void check_start(double x0, double eps, const char* who) {
  if (!(eps >= 0.0)) throw DomainError(fmt::format("{}: eps >= 0 required", who));
  if (!(x0 > eps)) throw DomainError(fmt::format("{}: start {} must exceed eps {}", who, x0, eps));
}

}  // namespace

LevyPath simulate_levy(const BranchingMechanism& mech, double x0, const SimConfig& cfg) {
  cfg.validate();
  LevyPath p;
  p.seed = cfg.seed;
  p.stream = cfg.stream;
  LevyWalker w(mech, cfg.eps, cfg.seed, cfg.stream);
  double s = 0.0, n = x0;
  p.t.push_back(0.0);
  p.n.push_back(x0);
  const auto seg = [&](double, double, double s1, double n1) {
    p.t.push_back(s1);
    p.n.push_back(n1);
    return true;
  };
  const auto jump = [&](double sj, double, double n_plus) {
    p.t.push_back(sj);
    p.n.push_back(n_plus);
    return true;
  };
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.T / cfg.dt - 1e-9));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double target = std::min(cfg.T, k * cfg.dt);
    w.advance(s, n, target - s, seg, jump);
  }
  return p;
}

double TimeChange::clock(double sv) const {
  if (s.empty()) return 0.0;
  if (sv <= s.front()) return eta.front();
  if (sv >= s.back()) return eta.back();
  const auto it = std::upper_bound(s.begin(), s.end(), sv);
  const std::size_t i = static_cast<std::size_t>(it - s.begin());
  const double h = s[i] - s[i - 1];
  return h > 0.0 ? eta[i - 1] + (sv - s[i - 1]) / h * (eta[i] - eta[i - 1]) : eta[i];
}

double TimeChange::inverse(double tau) const {
  if (s.empty()) return 0.0;
  if (tau <= eta.front()) return s.front();
  if (tau >= eta.back()) return s.back();
  const auto it = std::lower_bound(eta.begin(), eta.end(), tau);
  const std::size_t i = static_cast<std::size_t>(it - eta.begin());
  const double h = eta[i] - eta[i - 1];
  return h > 0.0 ? s[i - 1] + (tau - eta[i - 1]) / h * (s[i] - s[i - 1]) : s[i];
}

double TimeChange::value_at(double tau) const {
  if (stopped && tau >= stop_clock) return 0.0;
  if (tau > eta.back()) throw DomainError("TimeChange::value_at: clock beyond the simulated path");
  if (tau <= eta.front()) return n.front();
  // Last grid point with eta <= tau, so jumps at that clock value are included.
  const auto it = std::upper_bound(eta.begin(), eta.end(), tau);
  const std::size_t i = static_cast<std::size_t>(it - eta.begin());
  if (i >= eta.size()) return n.back();
  const double h = eta[i] - eta[i - 1];
  return h > 0.0 ? n[i - 1] + (tau - eta[i - 1]) / h * (n[i] - n[i - 1]) : n[i - 1];
}

TimeChange time_change(const LevyPath& path, double eps) {
  if (path.t.empty()) throw DomainError("time_change: empty path");
  check_start(path.n.front(), eps, "time_change");
  TimeChange tc;
  tc.eps = eps;
  tc.s.push_back(path.t.front());
  tc.eta.push_back(0.0);
  tc.n.push_back(path.n.front());
  for (std::size_t i = 1; i < path.t.size(); ++i) {
    const double s0 = path.t[i - 1], s1 = path.t[i];
    const double n0 = path.n[i - 1], n1 = path.n[i];
    if (s1 == s0) {  // jump: clock unchanged
      tc.s.push_back(s1);
      tc.eta.push_back(tc.eta.back());
      tc.n.push_back(n1);
      continue;
    }
    const ClockCell c = clock_cell(s0, n0, s1, n1, eps);
    tc.s.push_back(c.s_end);
    tc.eta.push_back(tc.eta.back() + c.deta);
    tc.n.push_back(c.n_end);
    if (c.crossed) {
      tc.stopped = true;
      tc.stop_time = c.s_end;
      tc.stop_clock = tc.eta.back();
      break;
    }
  }
  return tc;
}

double lamperti_value(const BranchingMechanism& mech, double x0, double t_probe, double eps,
                      const SimConfig& cfg) {
  check_start(x0, eps, "lamperti_value");
  if (t_probe == 0.0) return x0;
  if (!(t_probe > 0.0)) throw DomainError("lamperti_value: t_probe >= 0 required");
  LevyWalker w(mech, cfg.eps, cfg.seed, cfg.stream);
  double s = 0.0, n = x0, eta = 0.0, result = 0.0;
  const auto seg = [&](double s0, double n0, double s1, double n1) {
    const ClockCell c = clock_cell(s0, n0, s1, n1, eps);
    if (eta + c.deta >= t_probe) {
      const double th = c.deta > 0.0 ? (t_probe - eta) / c.deta : 1.0;
      result = n0 + th * (c.n_end - n0);
      return false;
    }
    eta += c.deta;
    if (c.crossed) {
      result = 0.0;
      return false;
    }
    return true;
  };
  const auto jump = [](double, double, double) { return true; };
  const std::size_t max_steps = static_cast<std::size_t>(1e3 * t_probe / cfg.dt) + 1000000;
  for (std::size_t k = 0; k < max_steps; ++k) {
    const double ds = cfg.dt * std::max(n, eps > 0.0 ? eps : 1e-3 * x0);
    if (!w.advance(s, n, ds, seg, jump)) return result;
  }
  throw NumericFailure(fmt::format("lamperti_value: clock stalled at {} of {}", eta, t_probe), eta);
}

CrossValidation crossvalidate(const BranchingMechanism& mech, double x0, double t_probe, double eps,
                              std::size_t n_paths, const SimConfig& cfg, const Exec& exec) {
  if (n_paths < 2) throw DomainError("crossvalidate: n_paths >= 2 required");
  cfg.validate();
  std::vector<double> a(n_paths), b(n_paths);
  SimConfig base = cfg;
  base.T = t_probe;
  base.record_path = base.record_jumps = false;
  base.levels_down.clear();
  base.levels_up.clear();
  const CompetitionFunction zero = CompetitionFunction::zero();
  parallel_for(n_paths, exec, [&](std::size_t i) {
    SimConfig c = base;
    c.stream = cfg.stream + i;
    a[i] = lamperti_value(mech, x0, t_probe, eps, c);
    b[i] = t_probe > 0.0 ? simulate_path(mech, zero, x0, c).final_value : x0;
  });
  CrossValidation r;
  r.n = n_paths;
  r.eps = eps;
  r.t_probe = t_probe;
  r.absorbed_fraction =
      static_cast<double>(std::count(a.begin(), a.end(), 0.0)) / static_cast<double>(n_paths);
  r.depleted = r.absorbed_fraction > 0.9;
  const KsResult ks = ks_two_sample(std::move(a), std::move(b));
  r.ks_stat = ks.statistic;
  r.p_value = ks.p_value;
  return r;
}

HittingProbe hitting_positivity_probe(const BranchingMechanism& mech, double x, double z, double eps, double t,
                                      std::size_t n_paths, const SimConfig& cfg, const Exec& exec) {
  check_start(x, eps, "hitting_positivity_probe");
  if (!(z > x)) throw DomainError("hitting_positivity_probe: z > x required");
  if (!(t > 0.0)) throw DomainError("hitting_positivity_probe: t > 0 required");
  if (n_paths == 0) throw DomainError("hitting_positivity_probe: n_paths >= 1 required");
  cfg.validate();
  struct Hits {
    bool s_down = false, s_up = false, t_down = false, t_up = false;
  };
  std::vector<Hits> hits(n_paths);
  const double floor = eps > 0.0 ? eps : 1e-3 * x;
  parallel_for(n_paths, exec, [&](std::size_t i) {
    LevyWalker w(mech, cfg.eps, cfg.seed, cfg.stream + i);
    double s = 0.0, n = x, eta = 0.0;
    bool down_done = false, up_done = false;
    Hits& h = hits[i];
    const auto seg = [&](double s0, double n0, double s1, double n1) {
      const ClockCell c = clock_cell(s0, n0, s1, n1, eps);
      if (c.crossed) {
        down_done = true;
        up_done = true;  // stopped at eps before reaching z
        h.s_down = c.s_end < t;
        h.t_down = eta + c.deta < t;
        return false;
      }
      eta += c.deta;
      if (!up_done && n1 >= z) {
        up_done = true;
        h.s_up = s1 < t;
        h.t_up = eta < t;
      }
      return true;
    };
    const auto jump = [&](double sj, double, double n_plus) {
      if (!up_done && n_plus >= z) {
        up_done = true;
        h.s_up = sj < t;
        h.t_up = eta < t;
      }
      return true;
    };
    const std::size_t max_steps = static_cast<std::size_t>(std::ceil(1e3 * t / cfg.dt)) + 1000000;
    for (std::size_t k = 0; k < max_steps; ++k) {
      const bool levy_done = s >= t || (down_done && up_done);
      const bool clock_done = eta >= t || (down_done && up_done);
      if (levy_done && clock_done) break;
      const double ds = cfg.dt * (up_done ? std::max(n, floor) : std::clamp(n, floor, z));
      if (!w.advance(s, n, ds, seg, jump)) break;
    }
  });
  HittingProbe p;
  p.n_paths = n_paths;
  const auto tally = [&](auto member) {
    HitFrequency f;
    for (const Hits& h : hits) f.hits += h.*member ? 1 : 0;
    f.freq = static_cast<double>(f.hits) / static_cast<double>(n_paths);
    f.ci = wilson_interval(f.hits, n_paths);
    f.positive = f.ci.lo > 0.0;
    return f;
  };
  p.S_down = tally(&Hits::s_down);
  p.S_up = tally(&Hits::s_up);
  p.T_down = tally(&Hits::t_down);
  p.T_up = tally(&Hits::t_up);
  return p;
}

}  // namespace cbc
