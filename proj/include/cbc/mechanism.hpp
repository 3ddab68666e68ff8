#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cbc/levy_measure.hpp"
#include "cbc/quadrature.hpp"

namespace cbc {

// Psi(lambda) = b lambda + c lambda^2 + int (e^{-lambda z} - 1 + lambda z 1{z<=1}) mu(dz).
class BranchingMechanism {
 public:
  BranchingMechanism() = default;
  BranchingMechanism(double b, double c, LevyMeasure mu);

  static BranchingMechanism feller(double b, double c) { return {b, c, LevyMeasure::none()}; }

  double b() const noexcept { return b_; }
  double c() const noexcept { return c_; }
  const LevyMeasure& mu() const noexcept { return mu_; }

  std::string describe() const;

 private:
  double b_ = 0.0;
  double c_ = 0.0;
  LevyMeasure mu_;
};

struct PsiOptions {
  double rel_tol = 1e-10;
  bool force_quadrature = false;
};

struct PsiValue {
  double value = 0.0;
  double abs_error = 0.0;
  bool closed_form = false;
  bool converged = true;
};

// Jump part of Psi only.
PsiValue psi_jump(const LevyMeasure& mu, double lambda, const PsiOptions& opts = {});
PsiValue psi_eval_detailed(const BranchingMechanism& mech, double lambda, const PsiOptions& opts = {});
// Throws NumericFailure (carrying the partial value) when quadrature does not converge.
double psi_eval(const BranchingMechanism& mech, double lambda, const PsiOptions& opts = {});
// Same value, always through quadrature (used to cross-check closed forms).
double psi_quadrature(const BranchingMechanism& mech, double lambda);

// Psi'(0+) = b - int_{z>1} z mu(dz); -inf when the tail has infinite mean.
double psi_prime_zero(const BranchingMechanism& mech);

// Largest root of Psi on [0, inf); empty when Psi <= 0 up to the cap.
std::optional<double> psi_largest_root(const BranchingMechanism& mech, double cap = 0x1p60);

// Second differences of Psi on a log grid; throws InvariantBreach on a
// convexity violation beyond tol * scale.
void check_psi_convexity(const BranchingMechanism& mech, double tol = 1e-7);

// Non-decreasing g with g(0) = 0.
class CompetitionFunction {
 public:
  enum class Kind { Zero, Power, Logistic, Tabulated, Custom };

  CompetitionFunction() = default;

  static CompetitionFunction zero();
  static CompetitionFunction power(double a, double p);
  static CompetitionFunction logistic(double a);
  // Piecewise linear through (x, g) points starting at (0, 0), extended with
  // the last slope.
  static CompetitionFunction tabulated(std::vector<std::pair<double, double>> points);
  static CompetitionFunction custom(std::function<double(double)> g, bool declared_monotone,
                                    std::string name = "custom");

  CompetitionFunction with_theta(double theta) const;

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double p() const noexcept { return p_; }
  std::optional<double> theta() const noexcept { return theta_; }
  bool is_zero() const noexcept { return kind_ == Kind::Zero; }

  double operator()(double x) const;
  double derivative(double x) const;
  std::string describe() const;

 private:
  void validate() const;

  Kind kind_ = Kind::Zero;
  double a_ = 0.0;
  double p_ = 0.0;
  std::optional<double> theta_;
  std::vector<std::pair<double, double>> table_;
  std::function<double(double)> fn_;
  std::string name_ = "zero";
};

// Increasing positive phi on [0, inf) used in the growth hypotheses.
class GrowthFunction {
 public:
  enum class Kind { LogPower, Power };

  // (log(1 + r))^k
  static GrowthFunction log_power(double k);
  // (1 + r)^p
  static GrowthFunction power(double p);

  Kind kind() const noexcept { return kind_; }
  double exponent() const noexcept { return k_; }
  double operator()(double r) const;
  double derivative(double r) const;
  // Whether int_1^inf dr / (r phi(r)) is finite.
  bool reciprocal_integrable() const;
  std::string describe() const;

 private:
  GrowthFunction(Kind k, double e) : kind_(k), k_(e) {}
  Kind kind_;
  double k_;
};

}  // namespace cbc
