#include "cbc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "cbc/error.hpp"

namespace cbc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * sum) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.statistic = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  r.p_value = d == 0.0 ? 1.0 : kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n), p = successes / nn, z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  Interval iv{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (successes == 0) iv.lo = 0.0;
  if (successes == n) iv.hi = 1.0;
  return iv;
}

MeanSe mean_se(const std::vector<double>& x) {
  MeanSe r;
  if (x.empty()) return r;
  const double n = static_cast<double>(x.size());
  r.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (x.size() < 2) return r;
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.std_error = std::sqrt(ss / (n - 1) / n);
  return r;
}

std::size_t default_bin_count(std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)) / 3.0));
  return std::max<std::size_t>(5, std::min<std::size_t>(50, k));
}

std::vector<double> equal_probability_edges(const std::vector<double>& pooled, std::size_t bins) {
  if (pooled.empty()) throw DomainError("equal_probability_edges: no samples");
  if (bins < 1) throw DomainError("equal_probability_edges: bins >= 1 required");
  std::vector<double> s = pooled;
  std::sort(s.begin(), s.end());
  std::vector<double> edges{0.0};
  for (std::size_t k = 1; k < bins; ++k) {
    const std::size_t idx = k * s.size() / bins;
    // Midpoint between neighbouring order statistics keeps ties on one side.
    const double e = idx == 0 ? s[0] : 0.5 * (s[idx - 1] + s[idx]);
    if (e > edges.back()) edges.push_back(e);
  }
  edges.push_back(kInf);
  return edges;
}

EmpiricalDistribution EmpiricalDistribution::from_samples(std::vector<double> samples,
                                                          const std::vector<double>& edges) {
  EmpiricalDistribution d;
  d.samples = std::move(samples);
  std::sort(d.samples.begin(), d.samples.end());
  d.total_weight = static_cast<double>(d.samples.size());
  d.ess = d.total_weight;
  d.rebin(edges);
  return d;
}

EmpiricalDistribution EmpiricalDistribution::from_samples(std::vector<double> samples, std::size_t bins) {
  const auto edges = equal_probability_edges(samples, bins == 0 ? default_bin_count(samples.size()) : bins);
  return from_samples(std::move(samples), edges);
}

EmpiricalDistribution EmpiricalDistribution::point_mass(double x) {
  return from_samples({x}, std::vector<double>{0.0, x, kInf});
}

void EmpiricalDistribution::rebin(const std::vector<double>& e) {
  if (e.size() < 2 || e.front() != 0.0) throw DomainError("EmpiricalDistribution: edges must start at 0");
  for (std::size_t i = 1; i < e.size(); ++i)
    if (!(e[i] > e[i - 1])) throw DomainError("EmpiricalDistribution: edges must increase strictly");
  if (samples.empty()) throw DomainError("EmpiricalDistribution: no samples");
  if (!(samples.front() > 0.0))
    throw DomainError(fmt::format("EmpiricalDistribution: sample {} outside (0, inf)", samples.front()));
  edges = e;
  mass.assign(edges.size() - 1, 0.0);
  // Bins are (lo, hi]; the last one absorbs everything above its lower edge.
  for (double x : samples) {
    auto it = std::lower_bound(edges.begin() + 1, edges.end(), x);
    std::size_t k = it == edges.end() ? mass.size() - 1 : static_cast<std::size_t>(it - edges.begin()) - 1;
    mass[k] += 1.0;
  }
  for (double& m : mass) m /= static_cast<double>(samples.size());
  check();
}

double EmpiricalDistribution::mean() const {
  return samples.empty() ? 0.0 : std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
}

void EmpiricalDistribution::check() const {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12)
    throw InvariantBreach(fmt::format("EmpiricalDistribution: total mass {} != 1", total));
  if (!samples.empty() && !(samples.front() > 0.0))
    throw InvariantBreach("EmpiricalDistribution: mass at or below 0");
}

namespace {

// Piecewise-linear CDF of a histogram; the unbounded last bin contributes its
// mass at its lower edge.
double hist_cdf(const EmpiricalDistribution& p, double x) {
  double c = 0.0;
  for (std::size_t k = 0; k < p.mass.size(); ++k) {
    const double lo = p.edges[k], hi = p.edges[k + 1];
    if (x >= hi) {
      c += p.mass[k];
    } else if (x > lo) {
      c += std::isfinite(hi) ? p.mass[k] * (x - lo) / (hi - lo) : p.mass[k];
      break;
    } else {
      break;
    }
  }
  return c;
}

double w1_samples(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pts;
  pts.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(pts));
  double w = 0.0;
  std::size_t i = 0, j = 0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    while (i < a.size() && a[i] <= pts[k]) ++i;
    while (j < b.size() && b[j] <= pts[k]) ++j;
    w += std::abs(i / na - j / nb) * (pts[k + 1] - pts[k]);
  }
  return w;
}

}  // namespace

double distribution_distance(const EmpiricalDistribution& p, const EmpiricalDistribution& q, Metric m) {
  if (m == Metric::TV) {
    if (p.edges != q.edges) throw DomainError("distribution_distance: TV needs identical bin edges");
    double s = 0.0;
    for (std::size_t k = 0; k < p.mass.size(); ++k) s += std::abs(p.mass[k] - q.mass[k]);
    return 0.5 * s;
  }
  if (!p.samples.empty() && !q.samples.empty()) return w1_samples(p.samples, q.samples);
  std::vector<double> grid;
  for (double e : p.edges)
    if (std::isfinite(e)) grid.push_back(e);
  for (double e : q.edges)
    if (std::isfinite(e)) grid.push_back(e);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double w = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double mid = 0.5 * (grid[k] + grid[k + 1]);
    w += std::abs(hist_cdf(p, mid) - hist_cdf(q, mid)) * (grid[k + 1] - grid[k]);
  }
  return w;
}

double tv_on_common_bins(const std::vector<double>& a, const std::vector<double>& b, std::size_t bins) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  if (bins == 0) bins = default_bin_count(std::min(a.size(), b.size()));
  const auto edges = equal_probability_edges(pooled, bins);
  return distribution_distance(EmpiricalDistribution::from_samples(a, edges),
                               EmpiricalDistribution::from_samples(b, edges), Metric::TV);
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("least_squares: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("least_squares: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

}  // namespace cbc
