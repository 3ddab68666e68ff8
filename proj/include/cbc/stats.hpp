#pragma once

#include <cstddef>
#include <vector>

namespace cbc {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov tail.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct Interval {
  double lo = 0.0, hi = 0.0;
};

Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.96);

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
};

MeanSe mean_se(const std::vector<double>& x);

// Probability law on (0, inf) given by equally weighted samples and a
// histogram on fixed edges. The last edge may be +inf.
struct EmpiricalDistribution {
  std::vector<double> samples;  // sorted
  std::vector<double> edges;
  std::vector<double> mass;
  double total_weight = 0.0;
  double ess = 0.0;

  static EmpiricalDistribution from_samples(std::vector<double> samples, const std::vector<double>& edges);
  static EmpiricalDistribution from_samples(std::vector<double> samples, std::size_t bins);
  static EmpiricalDistribution point_mass(double x);

  void rebin(const std::vector<double>& edges);
  double mean() const;
  void check() const;  // normalization and support
};

// max(5, min(50, floor(sqrt(n) / 3))).
std::size_t default_bin_count(std::size_t n);

// Equal-probability edges from pooled samples: 0, interior quantiles, +inf.
// Repeated quantiles are merged, so fewer bins may result.
std::vector<double> equal_probability_edges(const std::vector<double>& pooled, std::size_t bins);

enum class Metric { TV, W1 };

// TV requires identical edges. W1 uses the samples when both carry them and
// the histogram CDFs on the merged edge grid otherwise.
double distribution_distance(const EmpiricalDistribution& p, const EmpiricalDistribution& q, Metric m);

// Bins both sample sets on common equal-probability edges and returns TV.
double tv_on_common_bins(const std::vector<double>& a, const std::vector<double>& b, std::size_t bins = 0);

struct LinearFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cbc
