#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbc/mechanism.hpp"
#include "cbc/parallel.hpp"
#include "cbc/simulator.hpp"
#include "cbc/stats.hpp"

namespace cbc {

// Initial law: a point mass or uniform resampling of a sample set.
class InitialLaw {
 public:
  static InitialLaw point(double x);
  static InitialLaw empirical(std::vector<double> samples);

  double draw(RandomStream& rng) const;
  bool is_point() const noexcept { return atoms_.size() == 1; }
  const std::vector<double>& atoms() const noexcept { return atoms_; }
  std::string describe() const;

 private:
  std::vector<double> atoms_;
};

struct NaiveLaw {
  EmpiricalDistribution dist;
  std::size_t survivors = 0;
  std::size_t n_paths = 0;
  double survivor_fraction() const { return n_paths ? double(survivors) / double(n_paths) : 0.0; }
};

// Simulates n_paths from init (g-dynamics), keeps the paths alive at t.
// bins = 0 picks default_bin_count(survivors). Throws DomainError when
// fewer than 100 paths survive.
NaiveLaw conditional_law_naive(const BranchingMechanism& mech, const CompetitionFunction& g, const InitialLaw& init,
                               double t, std::size_t n_paths, std::size_t bins, const SimConfig& cfg,
                               const Exec& exec = {});

struct Resurrection {
  double t;
  std::size_t particle, parent;
};

struct FvOptions {
  double window = 0.0;  // synchronization window; 0 means 10 dt
  bool keep_log = false;
};

struct FvSnapshot {
  double t = 0.0;
  std::vector<double> states;
};

struct FvRun {
  std::vector<FvSnapshot> snapshots;
  std::size_t resurrections = 0;
  std::vector<Resurrection> log;
};

// Fleming-Viot system of N particles observed at the increasing times.
// Particles move independently over each window; deaths in a window are then
// resolved in (death time, index) order, each dead particle taking the
// window-end state of a uniformly chosen live particle.
FvRun fleming_viot_run(const BranchingMechanism& mech, const CompetitionFunction& g, const InitialLaw& init,
                       const std::vector<double>& times, std::size_t N, const SimConfig& cfg,
                       const FvOptions& opts = {}, const Exec& exec = {});

struct FvLaw {
  EmpiricalDistribution dist;
  std::size_t resurrections = 0;
  std::vector<Resurrection> log;
};

FvLaw fleming_viot(const BranchingMechanism& mech, const CompetitionFunction& g, const InitialLaw& init, double t,
                   std::size_t N, std::size_t bins, const SimConfig& cfg, const FvOptions& opts = {},
                   const Exec& exec = {});

enum class FitVerdict { Converged, AlreadyConverged, Insufficient, NotDecaying };

const char* fit_verdict_name(FitVerdict v);

struct ConvergenceFit {
  std::vector<double> t, d;
  double lambda_hat = 0.0;
  double C_hat = 0.0;
  double r2 = 0.0;
  double noise_floor = 0.0;
  std::size_t points_used = 0;
  // With fewer than 2 usable points: -log(noise_floor) / t at the first
  // point at the floor, assuming d(0) <= 1.
  double lambda_lower = 0.0;
  FitVerdict verdict = FitVerdict::Insufficient;
};

// Least squares of log d = log C - lambda t over the leading decreasing points (t ascending)
// with d > noise_floor.
ConvergenceFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& d, double noise_floor);

// d(t) = TV between Fleming-Viot laws from init1 and init2 (N particles each)
// on common equal-probability bins; noise floor 2 / sqrt(N).
ConvergenceFit convergence_rate_fit(const BranchingMechanism& mech, const CompetitionFunction& g,
                                    const InitialLaw& init1, const InitialLaw& init2,
                                    const std::vector<double>& t_grid, std::size_t N, const SimConfig& cfg,
                                    const FvOptions& opts = {}, const Exec& exec = {});

// TV between pi_hat and the law at t of paths started from pi_hat and
// conditioned to survive.
double qsd_fixed_point_residual(const BranchingMechanism& mech, const CompetitionFunction& g,
                                const EmpiricalDistribution& pi_hat, double t, std::size_t n_paths,
                                const SimConfig& cfg, const Exec& exec = {});

struct SmallInitRow {
  double y = 0.0;
  std::size_t survivors = 0;
  double survival = 0.0;
  double std_error = 0.0;
  Interval ci;
  std::optional<double> envelope;  // phi(y)/t + phi(y)/phi(delta)
  bool dominated = true;           // survival - 2 SE <= envelope
};

struct SmallInitProbe {
  double theta = 0.0;
  double rho = 0.0;
  std::optional<double> delta;  // largest grid point with L phi < -1 below it
  double t = 0.0;
  std::size_t n_paths = 0;
  std::vector<SmallInitRow> rows;  // in the order of the y grid
  bool monotone = true;            // survival non-increasing as y decreases
  std::string note;
};

// Survival P_y(tau_0 > t) for small y against the envelope built from
// phi(r) = 1 - exp(-r^rho), rho = (1 - theta) / 2. Paths reaching
// cfg.state_cap count as survivors.
SmallInitProbe small_initial_extinction_probe(const BranchingMechanism& mech, const CompetitionFunction& g,
                                              std::vector<double> ys, double t, std::size_t n_paths,
                                              const SimConfig& cfg, const Exec& exec = {});

// Largest delta = 2^{-k/4} <= 1/4 with L phi < -1 on the grid in (0, delta].
std::optional<double> search_delta(const BranchingMechanism& mech, const CompetitionFunction& g, double rho);

}  // namespace cbc
