#include "cbc/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "cbc/error.hpp"

namespace cbc::quad {

namespace {

// Kronrod nodes on [0, 1]; odd indices are the embedded Gauss nodes.
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment rule15(const Integrand& f, double a, double b, int& evals) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  evals += 15;
  kronrod *= half;
  gauss *= half;
  double err = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod)) {
    throw NumericFailure("non-finite integrand value in quadrature");
  }
  return {a, b, kronrod, err};
}

}  // namespace

Result gauss_kronrod(const Integrand& f, double a, double b, const Options& opts) {
  Result res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  if (b < a) {
    res = gauss_kronrod(f, b, a, opts);
    res.value = -res.value;
    return res;
  }
  std::priority_queue<Segment> heap;
  Segment first = rule15(f, a, b, res.evaluations);
  heap.push(first);
  double total = first.value;
  double total_err = first.error;
  int intervals = 1;
  const double eps = 50.0 * std::numeric_limits<double>::epsilon();
  while (total_err > std::max(opts.abs_tol, opts.rel_tol * std::abs(total)) &&
         intervals < opts.max_intervals) {
    Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b ||
        (worst.b - worst.a) < eps * std::max(std::abs(worst.a), std::abs(worst.b))) {
      break;  // cannot refine further at double precision
    }
    heap.pop();
    Segment left = rule15(f, worst.a, mid, res.evaluations);
    Segment right = rule15(f, mid, worst.b, res.evaluations);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed accumulated round-off from the running updates.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  res.value = total;
  res.abs_error = total_err;
  res.converged = total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total)) ||
                  total_err <= 1e3 * eps * std::abs(total);
  return res;
}

Result log_gauss_kronrod(const Integrand& f, double a, double b, const Options& opts) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("log_gauss_kronrod needs positive limits");
  const Integrand g = [&f](double u) {
    const double z = std::exp(u);
    return f(z) * z;
  };
  return gauss_kronrod(g, std::log(a), std::log(b), opts);
}

Result operator+(const Result& lhs, const Result& rhs) {
  return {lhs.value + rhs.value, lhs.abs_error + rhs.abs_error,
          lhs.evaluations + rhs.evaluations, lhs.converged && rhs.converged};
}

}  // namespace cbc::quad
