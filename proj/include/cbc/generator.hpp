#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "cbc/conditions.hpp"
#include "cbc/mechanism.hpp"
#include "cbc/test_function.hpp"

namespace cbc {

struct GeneratorOptions {
  double rel_tol = 1e-10;
  // Evaluate the jump integral of Exponential test functions by quadrature
  // instead of through Psi.
  bool force_quadrature = false;
};

// Lf(x) = -[b x + g(x)] f'(x) + c x f''(x) + x int [f(x+z) - f(x) - z f'(x) 1{z<=1}] mu(dz).
double apply_L(const BranchingMechanism& mech, const CompetitionFunction& g, const TestFunction& f,
               double x, const GeneratorOptions& opts = {});

// int [f(x+z) - f(x) - z f'(x) 1{z<=1}] mu(dz), by quadrature.
double jump_integral(const LevyMeasure& mu, const TestFunction& f, double x, double rel_tol = 1e-10);

// mu_a = [mu ^ (delta_a * mu)] / 2.
class OverlapMeasure {
 public:
  OverlapMeasure(LevyMeasure mu, double a);

  double shift() const noexcept { return a_; }
  const LevyMeasure& base() const noexcept { return mu_; }
  double density(double z) const;
  // Total mass; inf for a = 0 with an infinite-activity base.
  double mass() const noexcept { return mass_; }
  bool infinite() const noexcept { return std::isinf(mass_); }
  // Matched atoms (location in z, weight).
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }

  // Integral of h against mu_a; h(z) = O(z^growth).
  quad::Result integrate(const std::function<double(double)>& h, double growth = 0.0,
                         const quad::Options& opts = {}) const;

 private:
  double w_density(double w) const;
  LevyMeasure mu_;
  double a_;
  double mass_ = 0.0;
  std::vector<Atom> atoms_;
};

double overlap_mass(const LevyMeasure& mu, double a);

// Coupling generator applied to F at x > y > 0.
double apply_coupling_L(const BranchingMechanism& mech, const CompetitionFunction& g,
                        const PairFunction& F, double x, double y, const GeneratorOptions& opts = {});

// Difference form for F(x, y) = f(x - y) with f(0) = 0:
// -[g(x) - g(y)] f'(d) + 4 c y f''(d) + y [f(2d) - 2 f(d)] mu_d(R+) + L0 f(d),
// d = x - y, where L0 is the generator without competition.
double apply_coupling_L_diff(const BranchingMechanism& mech, const CompetitionFunction& g,
                             const TestFunction& f, double x, double y, const GeneratorOptions& opts = {});

struct CouplingTraceRow {
  double l;
  double worst_value;  // max of the generator over the grid with x - y < l
  double worst_x, worst_y;
};

struct CouplingInequalityResult {
  bool found = false;
  double l = 0.0;
  double worst_value = 0.0;
  double margin = 0.0;  // -target_C - worst_value
  std::vector<CouplingTraceRow> trace;
  ConditionReport fluctuation;
};

// Largest l = 2^-k (k = 1..20) with L~phi_rho(x, y) <= -target_C on a grid of
// A < y < x < B, 0 < x - y < l.
CouplingInequalityResult verify_coupling_inequality(const BranchingMechanism& mech,
                                                    const CompetitionFunction& g, double rho, double A,
                                                    double B, double target_C);

}  // namespace cbc
