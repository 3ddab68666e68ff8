#pragma once

#include <string>
#include <vector>

#include "cbc/conditions.hpp"
#include "cbc/generator.hpp"

namespace cbc {

struct LyapunovRow {
  int n = 0;
  double r_n = 0.0;
  double b_n = 0.0;
  double K_n = 0.0;  // K_n = [0, K_n]
  double margin = 0.0;
  double worst_x = 0.0;
};

struct LyapunovOptions {
  int rows = 8;
  // Grid 0 and 2^{k/steps_per_octave} for 2^lo_exp <= x <= 2^hi_exp.
  int steps_per_octave = 4;
  int lo_exp = -10;
  int hi_exp = 20;
};

// Witness of -LW(x) >= r_n W(x) - b_n 1{x in K_n} with r_n -> inf.
struct LyapunovCertificate {
  TestFunction W;
  double alpha = 0.0;
  double l = 0.0;
  double C0 = 0.0;
  int steps_per_octave = 4;
  std::vector<double> grid;
  std::vector<double> LW;
  std::vector<LyapunovRow> rows;
  ConditionReport hypotheses;
};

// Throws DomainError when the hypotheses fail and NumericFailure when no l up
// to 2^20 satisfies LW <= -h/2 with h = g/g0 non-decreasing beyond l.
LyapunovCertificate build_lyapunov(const BranchingMechanism& mech, const CompetitionFunction& g,
                                   double alpha, const GrowthFunction& varphi,
                                   const LyapunovOptions& opts = {});

struct MarginPoint {
  int n;
  double x, lhs, rhs, margin;
};

struct LyapunovReport {
  bool ok = true;
  std::vector<LyapunovRow> rows;  // minimum margin per n on the refined grid
  std::vector<MarginPoint> points;
  int offending_n = 0;
  double offending_x = 0.0;
};

// Re-evaluates the inequality on a grid of twice the density for n <= n_max.
LyapunovReport verify_lyapunov(const LyapunovCertificate& cert, const BranchingMechanism& mech,
                               const CompetitionFunction& g, int n_max);

struct NonExplosionCertificate {
  bool ok = false;
  double C1 = 0.0;
  double C2 = 0.0;
  double min_margin = 0.0;
  std::vector<double> grid, LV, V;
  std::string diagnostic;
};

// Smallest (C1, C2) with LV <= C1 + C2 V on a geometric grid up to x_max;
// ok = false when LV/V diverges along the grid.
NonExplosionCertificate verify_nonexplosion(const BranchingMechanism& mech, const CompetitionFunction& g,
                                            const TestFunction& V, double x_max);

}  // namespace cbc
