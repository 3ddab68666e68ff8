#include "cbc/cbflow.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cbc/conditions.hpp"
#include "cbc/error.hpp"
#include "cbc/quadrature.hpp"

namespace cbc {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Attempt {
  bool ok;
  bool switch_to_log;
};

}  // namespace

std::vector<double> FlowSolution::values() const {
  std::vector<double> v(y_.size());
  for (std::size_t i = 0; i < y_.size(); ++i) v[i] = log_ ? std::exp(y_[i]) : y_[i];
  return v;
}

double FlowSolution::final_value() const { return log_ ? std::exp(y_.back()) : y_.back(); }

double FlowSolution::at(double t) const {
  if (t < 0.0 || t > times_.back() * (1.0 + 1e-15))
    throw DomainError(fmt::format("flow queried at t={} outside [0, {}]", t, times_.back()));
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  if (i + 1 >= times_.size()) return final_value();
  const double h = times_[i + 1] - times_[i];
  const double s = (t - times_[i]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  const double y = h00 * y_[i] + h10 * h * f_[i] + h01 * y_[i + 1] + h11 * h * f_[i + 1];
  return log_ ? std::exp(y) : y;
}

FlowSolution solve_v(const BranchingMechanism& mech, double lambda, double t_max, const FlowOptions& opts) {
  if (!(lambda > 0.0)) throw DomainError("solve_v: lambda > 0 required");
  if (!(t_max > 0.0)) throw DomainError("solve_v: t_max > 0 required");

  for (bool log_mode : {false, true}) {
    FlowSolution sol;
    sol.lambda_ = lambda;
    sol.log_ = log_mode;
    sol.stats_.log_coordinates = log_mode;
    auto rhs = [&](double y) {
      if (log_mode) {
        const double v = std::exp(y);
        return -psi_eval(mech, v) / v;
      }
      return -psi_eval(mech, std::max(y, 0.0));
    };
    double t = 0.0;
    double y = log_mode ? std::log(lambda) : lambda;
    double k1 = rhs(y);
    sol.times_.push_back(t);
    sol.y_.push_back(y);
    sol.f_.push_back(k1);
    double vmin = lambda, vmax = lambda;
    auto scale = [&](double a, double b) {
      return log_mode ? opts.rel_tol : opts.abs_tol + opts.rel_tol * std::max(std::abs(a), std::abs(b));
    };
    double h = std::abs(k1) > 0.0 ? std::min(t_max, 0.01 * (log_mode ? 1.0 : std::abs(y)) / std::abs(k1))
                                  : t_max;
    h = std::max(h, 1e-12 * t_max);
    double err_prev = 1.0;
    bool restart = false;
    const double h_floor = t_max * 1e-15;
    while (t < t_max) {
      if (sol.stats_.steps + sol.stats_.rejected > opts.max_steps) {
        sol.blow_up_ = true;
        break;
      }
      h = std::min(h, t_max - t);
      const double k2 = rhs(y + h * a21 * k1);
      const double k3 = rhs(y + h * (a31 * k1 + a32 * k2));
      const double k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const double k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const double k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const double ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double k7 = rhs(ynew);
      const double est = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double err = std::abs(est) / scale(y, ynew);
      if (!std::isfinite(err) || (!log_mode && ynew <= 0.0)) err = 1e10;
      if (err <= 1.0) {
        t = (t_max - t - h < 1e-14 * t_max) ? t_max : t + h;
        y = ynew;
        k1 = k7;
        sol.times_.push_back(t);
        sol.y_.push_back(y);
        sol.f_.push_back(k1);
        ++sol.stats_.steps;
        sol.stats_.max_local_error = std::max(sol.stats_.max_local_error, err);
        const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5) * std::pow(err_prev, 0.4 / 5);
        h *= std::clamp(fac, 0.2, 5.0);
        err_prev = std::max(err, 1e-4);
        if (!log_mode) {
          vmin = std::min(vmin, y);
          vmax = std::max(vmax, y);
          if (vmax / vmin > opts.log_switch_ratio) {
            restart = true;
            break;
          }
        }
      } else {
        ++sol.stats_.rejected;
        h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        if (h < h_floor) {
          sol.blow_up_ = true;
          break;
        }
      }
    }
    if (!restart) return sol;
  }
  throw NumericFailure("solve_v: unreachable");
}

double laplace_transform(const BranchingMechanism& mech, double x, double lambda, double t) {
  if (!(x >= 0.0)) throw DomainError("laplace_transform: x >= 0 required");
  if (x == 0.0) return 1.0;
  if (t == 0.0) return std::exp(-x * lambda);
  const FlowSolution s = solve_v(mech, lambda, t);
  if (s.blow_up()) throw NumericFailure("laplace_transform: flow solver failed", s.final_value());
  return std::exp(-x * s.final_value());
}

double grey_integral(const BranchingMechanism& mech, double v) {
  const double Lambda = 1e12 * std::max(1.0, v);
  quad::Options qo;
  qo.rel_tol = 1e-12;
  const quad::Result body =
      quad::log_gauss_kronrod([&](double u) { return 1.0 / psi_eval(mech, u); }, v, Lambda, qo);
  const double psi_hi = psi_eval(mech, Lambda);
  const double p = std::log2(psi_hi / psi_eval(mech, 0.5 * Lambda));
  if (!(p > 1.0)) return kInf;
  return body.value + Lambda / (psi_hi * (p - 1.0));
}

ExtinctionEntry vbar(const BranchingMechanism& mech, double t) {
  if (!(t > 0.0)) throw DomainError("vbar: t > 0 required");
  if (!grey_check(mech).satisfied()) return {t, kInf, false};
  const double root = *psi_largest_root(mech);
  double hi = std::max(1.0, 2.0 * root);
  while (grey_integral(mech, hi) > t) hi *= 4.0;
  double lo = hi;
  for (int i = 0; i < 400 && grey_integral(mech, lo) < t; ++i) lo = root + 0.25 * (lo - root);
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < 200 && lhi - llo > 1e-13; ++i) {
    const double mid = 0.5 * (llo + lhi);
    (grey_integral(mech, std::exp(mid)) > t ? llo : lhi) = mid;
  }
  return {t, std::exp(0.5 * (llo + lhi)), true};
}

std::vector<ExtinctionEntry> extinction_profile(const BranchingMechanism& mech,
                                                const std::vector<double>& times) {
  std::vector<ExtinctionEntry> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(vbar(mech, t));
  return out;
}

double extinction_prob(const BranchingMechanism& mech, double x, double t) {
  if (!(x >= 0.0)) throw DomainError("extinction_prob: x >= 0 required");
  if (x == 0.0) return 1.0;
  const ExtinctionEntry e = vbar(mech, t);
  return e.finite ? std::exp(-x * e.vbar) : 0.0;
}

}  // namespace cbc
