#pragma once

#include <functional>
#include <memory>
#include <string>

#include "cbc/mechanism.hpp"

namespace cbc {

// g0 of the Lyapunov construction, chosen by the alpha regime of the
// large-jump tail: x phi(x) for alpha in (1, 2), x phi(x) log(1 + x) for
// alpha = 1, x^{2 - alpha} for alpha in (0, 1).
class LyapunovProfile {
 public:
  LyapunovProfile(GrowthFunction varphi, double alpha);

  double operator()(double x) const;
  double derivative(double x) const;
  // int_x^inf dy / g0(y), asymptotic form valid for large x.
  double tail_integral(double x) const;

  double alpha() const noexcept { return alpha_; }
  const GrowthFunction& varphi() const noexcept { return varphi_; }
  std::string describe() const;

 private:
  GrowthFunction varphi_;
  double alpha_;
};

struct CustomSpec {
  std::function<double(double)> value, d1, d2;
  std::function<double(double)> d3;  // optional; central difference of d2 otherwise
  double growth = 0.0;               // f(x) = O(x^growth)
  bool unbounded = false;            // f -> inf as x -> inf
  std::string name = "custom";
};

// One-variable test function for the generator L.
class TestFunction {
 public:
  enum class Kind { Exponential, CouplingPhi, Lyapunov, Linear, Log1p, Constant, Custom };

  // e^{-lambda x}
  static TestFunction exponential(double lambda);
  // 1 - e^{-r^rho}
  static TestFunction coupling_phi(double rho);
  // f(x) = f1 + int_1^x 1/g0 for x >= 1, a concave quadratic on [0, 1]
  // matching value, slope and curvature at 1 with f(0) = 1.
  static TestFunction lyapunov(const LyapunovProfile& g0);
  static TestFunction linear();
  // log(1 + x)
  static TestFunction log1p();
  static TestFunction constant(double c);
  static TestFunction custom(CustomSpec spec);

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return par_; }

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  double d3(double x) const;
  // f(x + z) - f(x), computed without cancellation where possible.
  double increment(double x, double z) const;
  // f(x + z) - f(x) - z f'(x).
  double compensated(double x, double z) const;

  double growth_exponent() const;
  bool unbounded() const;
  // Length over which f is smooth around x; sets the Taylor threshold of
  // jump integrals.
  double scale(double x) const;
  // sup f; inf when unbounded.
  double sup() const;
  std::string describe() const;

 private:
  struct LyapunovData;

  Kind kind_ = Kind::Constant;
  double par_ = 0.0;
  std::shared_ptr<const LyapunovData> lyap_;
  std::shared_ptr<const CustomSpec> custom_;
};

// Two-variable test function F(x, y) for the coupling generator.
class PairFunction {
 public:
  enum class Kind { OfFirst, OfSecond, OfDifference, Constant, Custom };

  struct Spec {
    std::function<double(double, double)> value, dx, dy, dxx, dyy, dxy;
    double growth = 0.0;
    std::string name = "custom";
  };

  static PairFunction of_first(TestFunction f);
  static PairFunction of_second(TestFunction f);
  // f(x - y)
  static PairFunction of_difference(TestFunction f);
  static PairFunction constant(double c);
  static PairFunction custom(Spec spec);

  Kind kind() const noexcept { return kind_; }
  const TestFunction& base() const noexcept { return f_; }

  double value(double x, double y) const;
  double dx(double x, double y) const;
  double dy(double x, double y) const;
  double dxx(double x, double y) const;
  double dyy(double x, double y) const;
  double dxy(double x, double y) const;
  // Third derivative along x and along the diagonal (for Taylor tails).
  double dxxx(double x, double y) const;
  double diag3(double x, double y) const;

  // F(x + z, y) - F(x, y) and F(x + z, y + z) - F(x, y).
  double increment_x(double x, double y, double z) const;
  double increment_diag(double x, double y, double z) const;

  double growth_exponent() const;
  double scale(double x, double y) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  TestFunction f_;
  double c_ = 0.0;
  std::shared_ptr<const Spec> spec_;
};

}  // namespace cbc
