#pragma once

#include <string>
#include <vector>

#include "cbc/mechanism.hpp"

namespace cbc {

struct FlowOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-300;
  int max_steps = 2'000'000;
  // Restart in log v coordinates once max v / min v exceeds this ratio.
  double log_switch_ratio = 1e3;
};

struct FlowStats {
  int steps = 0;
  int rejected = 0;
  double max_local_error = 0.0;  // scaled error norm of accepted steps
  bool log_coordinates = false;
};

// Solution of dv/dt = -Psi(v), v_0 = lambda, with cubic Hermite dense output.
class FlowSolution {
 public:
  double lambda() const noexcept { return lambda_; }
  double t_max() const noexcept { return times_.back(); }
  bool blow_up() const noexcept { return blow_up_; }
  const FlowStats& stats() const noexcept { return stats_; }
  const std::vector<double>& times() const noexcept { return times_; }
  // Node values of v (not of the internal coordinate).
  std::vector<double> values() const;

  double at(double t) const;
  double final_value() const;

 private:
  friend FlowSolution solve_v(const BranchingMechanism&, double, double, const FlowOptions&);
  double lambda_ = 0.0;
  bool blow_up_ = false;
  bool log_ = false;
  FlowStats stats_;
  std::vector<double> times_, y_, f_;  // y, dy/dt in the integration coordinate
};

FlowSolution solve_v(const BranchingMechanism& mech, double lambda, double t_max,
                     const FlowOptions& opts = {});

// E_x exp(-lambda Y_t) = exp(-x v_t(lambda)) for the pure CB process.
double laplace_transform(const BranchingMechanism& mech, double x, double lambda, double t);

struct ExtinctionEntry {
  double t;
  double vbar;  // inf when not finite
  bool finite;
};

// G(v) = int_v^inf du / Psi(u), with an analytic tail beyond the cutoff.
double grey_integral(const BranchingMechanism& mech, double v);

ExtinctionEntry vbar(const BranchingMechanism& mech, double t);
std::vector<ExtinctionEntry> extinction_profile(const BranchingMechanism& mech,
                                                const std::vector<double>& times);
// exp(-x vbar_t): probability that the CB process from x is extinct by t.
double extinction_prob(const BranchingMechanism& mech, double x, double t);

}  // namespace cbc
