#pragma once

#include <functional>

namespace cbc::quad {

struct Options {
  double rel_tol = 1e-11;
  double abs_tol = 1e-300;
  int max_intervals = 2000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

using Integrand = std::function<double(double)>;

// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]. The interval with the
// largest error estimate is bisected until the total error meets the
// tolerance or the interval budget runs out.
Result gauss_kronrod(const Integrand& f, double a, double b, const Options& opts = {});

// Same, in the variable u = log z, i.e. the integral of f(z) dz over [a, b]
// with 0 < a < b. Suited to integrands with power-law behavior over many
// decades.
Result log_gauss_kronrod(const Integrand& f, double a, double b, const Options& opts = {});

Result operator+(const Result& lhs, const Result& rhs);

}  // namespace cbc::quad
