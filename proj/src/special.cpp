#include "cbc/special.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "cbc/error.hpp"

namespace cbc::special {

double expm1_plus(double u) {
  if (std::abs(u) < 0.05) {
    // Alternating Taylor series u^2/2 - u^3/6 + ...
    double term = u * u / 2.0;
    double sum = term;
    for (int k = 3; k < 14; ++k) {
      term *= -u / k;
      sum += term;
    }
    return sum;
  }
  return std::expm1(-u) + u;
}

double upper_gamma(double a, double x) {
  if (!(x > 0.0)) throw DomainError("upper_gamma requires x > 0");
  if (a > 0.0) return boost::math::tgamma(a, x);
  if (a == 0.0) return boost::math::expint(1, x);
  if (a <= -4.0) throw DomainError("upper_gamma order out of range");
  // Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a
  return (upper_gamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

double lower_gamma(double a, double x) {
  if (!(a > 0.0)) throw DomainError("lower_gamma requires a > 0");
  if (x <= 0.0) return 0.0;
  return boost::math::tgamma_lower(a, x);
}

double gamma_fn(double a) { return boost::math::tgamma(a); }

}  // namespace cbc::special
