#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cbc/quadrature.hpp"

namespace cbc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Atom {
  double z;  // jump size > 0
  double w;  // mass > 0
};

struct DensityPoint {
  double z;
  double m;
};

// Jump measure mu on (0, inf) of a branching mechanism. Parametric families
// carry closed forms for the functionals used elsewhere; the tabulated
// family is interpolated log-log between grid points and extended by declared
// power laws below the first and beyond the last grid point.
class LevyMeasure {
 public:
  enum class Kind { None, TruncatedStable, Stable, Neveu, TemperedStable, FiniteAtoms, Tabulated };

  LevyMeasure() = default;

  static LevyMeasure none();
  // C z^{-(1+beta)} dz on (0, 1].
  static LevyMeasure truncated_stable(double C, double beta);
  // C z^{-(1+beta)} dz on (0, inf).
  static LevyMeasure stable(double C, double beta);
  // C z^{-2} dz on (0, inf).
  static LevyMeasure neveu(double C);
  // C z^{-(1+beta)} e^{-lambda0 z} dz on (0, inf).
  static LevyMeasure tempered_stable(double C, double beta, double lambda0);
  static LevyMeasure atoms(std::vector<Atom> atoms);
  // Density m(z) ~ z^{-(1+small_exponent)} near 0 and ~ z^{-(1+tail_exponent)}
  // at infinity outside the grid.
  static LevyMeasure tabulated(std::vector<DensityPoint> grid, double small_exponent,
                               double tail_exponent);

  Kind kind() const noexcept { return kind_; }
  std::string kind_name() const;
  bool is_zero() const noexcept { return kind_ == Kind::None; }
  double C() const noexcept { return C_; }
  double beta() const noexcept { return beta_; }
  double lambda0() const noexcept { return lambda0_; }
  const std::vector<Atom>& atom_list() const noexcept { return atoms_; }
  const std::vector<DensityPoint>& table() const noexcept { return table_; }

  bool has_density() const noexcept;
  // Density of the absolutely continuous part (0 for atoms-only measures).
  double density(double z) const;
  double support_end() const;
  // s with m(z) ~ z^{-(1+s)} as z -> 0; empty when there is no mass near 0.
  std::optional<double> small_exponent() const;
  // a with m(z) = O(z^{-(1+a)}) as z -> inf; inf for bounded support or
  // exponential decay.
  double tail_exponent() const;

  // mu((z, inf)) for z > 0.
  double tail_mass(double z) const;
  // Integral of z mu(dz) over (lo, hi]; hi may be inf (returns inf when
  // divergent).
  double first_moment(double lo, double hi) const;
  // Integral of z^p mu(dz) over (0, z] for p in {2, 3}.
  double moment_below(int p, double z) const;
  // Integral of (1 ^ z^2) mu(dz).
  double finiteness_mass() const;

  // Integral of f against mu over (lo, hi], 0 < lo < hi < inf. Atoms are
  // summed exactly, the density part is integrated piecewise in log z.
  quad::Result integrate(const std::function<double(double)>& f, double lo, double hi,
                         const quad::Options& opts = {}) const;
  // Integral of f over (lo, inf). f(z) = O(z^growth) with growth below the
  // tail exponent; the far tail is closed by f(Z) mu((Z, inf)).
  quad::Result integrate_to_infinity(const std::function<double(double)>& f, double lo,
                                     double growth, const quad::Options& opts = {}) const;

  // Sorted interior points where the density is not smooth, within (lo, hi).
  std::vector<double> breakpoints(double lo, double hi) const;

  std::string describe() const;

 private:
  void validate() const;
  double tab_density(double z) const;
  double numeric_moment(int p, double lo, double hi) const;

  Kind kind_ = Kind::None;
  double C_ = 0.0;
  double beta_ = 0.0;
  double lambda0_ = 0.0;
  double small_exp_ = 0.0;
  double tail_exp_ = 0.0;
  std::vector<Atom> atoms_;
  std::vector<DensityPoint> table_;
};

}  // namespace cbc
