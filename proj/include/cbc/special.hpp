#pragma once

namespace cbc::special {

// e^{-u} - 1 + u, accurate for small |u|.
double expm1_plus(double u);

// Upper incomplete gamma Gamma(a, x) for x > 0 and any real a > -4,
// including zero and negative orders (via downward recurrence).
double upper_gamma(double a, double x);

// Lower incomplete gamma gamma(a, x) for a > 0, x >= 0.
double lower_gamma(double a, double x);

// Gamma(a) for non-integer negative a as well as positive a.
double gamma_fn(double a);

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

}  // namespace cbc::special
