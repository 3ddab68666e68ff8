#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "cbc/mechanism.hpp"
#include "cbc/parallel.hpp"
#include "cbc/rng.hpp"

namespace cbc {

struct SimConfig {
  double dt = 1e-3;
  double eps = 1e-2;  // jumps at or below eps are replaced by a Gaussian surrogate
  double T = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;  // path index
  double headroom = 0.25;    // dominating level (1 + headroom) Y for thinning
  int refresh_budget = 64;   // dominating-level refreshes per step before the step is halved
  // Paths reaching this level stop and are reported as surviving.
  double state_cap = std::numeric_limits<double>::infinity();
  bool record_path = false;
  bool record_jumps = false;
  std::vector<double> levels_down;  // first time Y <= level
  std::vector<double> levels_up;    // first time Y >= level

  void validate() const;
};

enum class EventType { Step, Jump, Absorb };

const char* event_name(EventType e);

struct JumpRecord {
  double t, z;
};

struct PathSample {
  std::vector<double> t, y;  // filled when record_path
  std::vector<EventType> event;
  std::vector<JumpRecord> jumps;  // filled when record_jumps
  double final_value = 0.0;       // Y_T, or the capped value
  double tau0 = std::numeric_limits<double>::infinity();
  bool capped = false;
  double cap_time = std::numeric_limits<double>::infinity();
  std::vector<double> hit_down, hit_up;  // inf when not reached by T
  int halvings = 0;
  int refreshes = 0;

  bool absorbed() const { return tau0 < std::numeric_limits<double>::infinity(); }
};

// Sizes of jumps above eps, drawn from the normalized restriction of mu.
class JumpSampler {
 public:
  JumpSampler(const LevyMeasure& mu, double eps);
  double rate() const noexcept { return rate_; }  // mu((eps, inf))
  double sample(RandomStream& rng) const;

 private:
  LevyMeasure mu_;
  double eps_, rate_;
  double lo_pow_ = 0.0, hi_pow_ = 0.0;
  std::vector<double> atom_cdf_;
};

// Coefficients of the truncated scheme for a mechanism and eps.
struct SchemeCoefficients {
  double m_eps;      // int_(eps,1] z mu(dz)
  double sigma2;     // int_(0,eps] z^2 mu(dz)
  double jump_rate;  // mu((eps, inf))
};

SchemeCoefficients scheme_coefficients(const BranchingMechanism& mech, double eps);

PathSample simulate_path(const BranchingMechanism& mech, const CompetitionFunction& g, double x0,
                         const SimConfig& cfg);

struct CoupledPair {
  PathSample upper, lower;
  int ordering_violations = 0;
  double coalescence_time = std::numeric_limits<double>::infinity();
};

// Upper path from x1 with competition g_upper, lower from x2 <= x1 with
// g_lower, driven by shared noise. The gap evolves with its own noise and is
// clamped at 0.
CoupledPair simulate_coupled_pair(const BranchingMechanism& mech, const CompetitionFunction& g_upper,
                                  const CompetitionFunction& g_lower, double x1, double x2,
                                  const SimConfig& cfg);
inline CoupledPair simulate_coupled_pair(const BranchingMechanism& mech, const CompetitionFunction& g,
                                         double x1, double x2, const SimConfig& cfg) {
  return simulate_coupled_pair(mech, g, g, x1, x2, cfg);
}

// Paths 0..n-1 with stream index = path index; deterministic in the seed.
std::vector<PathSample> simulate_ensemble(const BranchingMechanism& mech, const CompetitionFunction& g,
                                          double x0, const SimConfig& cfg, std::size_t n_paths,
                                          const Exec& exec = {});

struct HittingSample {
  std::vector<double> times;  // inf when censored at T
  std::size_t censored = 0;
};

// First time Y <= level (downward) or Y >= level (upward) per path.
HittingSample hitting_time(const BranchingMechanism& mech, const CompetitionFunction& g, double x0,
                           double level, bool upward, const SimConfig& cfg, std::size_t n_paths,
                           const Exec& exec = {});

struct ExitRow {
  double t;
  double sup_p;  // sup over the y grid of the empirical P_y(S < t)
  double worst_y;
  double ratio;  // sup_p / sqrt(t)
};

struct ExitScan {
  std::vector<ExitRow> rows;
  double C_fit = 0.0;  // least-squares C in P = C sqrt(t)
  double r2 = 0.0;
};

// S = exit time of (A, B) from y in a grid on (A', B').
ExitScan exit_probability_scan(const BranchingMechanism& mech, const CompetitionFunction& g, double A,
                               double B, double A1, double B1, const std::vector<double>& t_grid,
                               std::size_t n_paths, const SimConfig& cfg, int y_points = 5,
                               const Exec& exec = {});

struct LaplaceCheck {
  double mc_mean = 0.0;
  double std_error = 0.0;
  double analytic = 0.0;
  double z = 0.0;
  std::size_t n_paths = 0;
};

// Monte Carlo mean of exp(-lambda Y_t) against exp(-x0 v_t(lambda)); g must be zero.
LaplaceCheck mc_laplace_check(const BranchingMechanism& mech, const CompetitionFunction& g, double x0,
                              double lambda, double t, std::size_t n_paths, const SimConfig& cfg,
                              const Exec& exec = {});

}  // namespace cbc
