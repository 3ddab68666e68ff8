#pragma once

#include <cstdint>
#include <vector>

#include "cbc/mechanism.hpp"
#include "cbc/parallel.hpp"
#include "cbc/simulator.hpp"
#include "cbc/stats.hpp"

namespace cbc {

// Levy process with E_x exp(-lambda N_t) = exp(-lambda x + Psi(lambda) t):
// drift -b, Gaussian variance 2c per unit time, positive jumps from mu.
// Jump times are inserted into the grid twice (pre- and post-jump value).
struct LevyPath {
  std::vector<double> t, n;
  std::uint64_t seed = 0, stream = 0;
};

// Grid of step cfg.dt on [0, cfg.T]; cfg.eps is the small-jump cutoff.
LevyPath simulate_levy(const BranchingMechanism& mech, double x0, const SimConfig& cfg);

// eta(s) = int_0^s 1/N, accumulated by the trapezoid rule and stopped at the
// first passage below eps.
struct TimeChange {
  std::vector<double> s, eta, n;  // truncated at the stop
  double eps = 0.0;
  bool stopped = false;
  double stop_time = 0.0;   // S_eps (Levy time) when stopped
  double stop_clock = 0.0;  // T_eps = eta(S_eps) when stopped

  double clock(double s) const;        // eta at Levy time s
  double inverse(double tau) const;    // eta^{-1}, monotone interpolation
  double value_at(double tau) const;   // X_tau, 0 once tau >= stop_clock
};

TimeChange time_change(const LevyPath& path, double eps);

struct CrossValidation {
  std::size_t n = 0;
  double ks_stat = 0.0;
  double p_value = 1.0;
  double eps = 0.0;
  double t_probe = 0.0;
  double absorbed_fraction = 0.0;
  bool depleted = false;  // more than 90% absorbed
};

// One time-changed value X_{t_probe}, simulated on a Levy grid of step
// cfg.dt * max(N, eps) so that each cell spans about cfg.dt of clock time.
double lamperti_value(const BranchingMechanism& mech, double x0, double t_probe, double eps, const SimConfig& cfg);

// KS comparison of time-changed Levy values against simulate_path values at
// t_probe (g = 0). Streams: cfg.stream + i for both samples, Levy samples on
// a separate counter word.
CrossValidation crossvalidate(const BranchingMechanism& mech, double x0, double t_probe, double eps,
                              std::size_t n_paths, const SimConfig& cfg, const Exec& exec = {});

struct HitFrequency {
  std::size_t hits = 0;
  double freq = 0.0;
  Interval ci;
  bool positive = false;  // lower Wilson bound > 0
};

struct HittingProbe {
  std::size_t n_paths = 0;
  HitFrequency S_down, S_up, T_down, T_up;
};

// Frequencies of {S_eps^- < t}, {S_z^{eps,+} < t}, {T_eps^- < t},
// {T_z^{eps,+} < t} for the Levy process started at x and stopped at eps.
HittingProbe hitting_positivity_probe(const BranchingMechanism& mech, double x, double z, double eps, double t,
                                      std::size_t n_paths, const SimConfig& cfg, const Exec& exec = {});

}  // namespace cbc
