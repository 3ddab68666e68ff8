#include "cbc/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cbc/error.hpp"
#include "cbc/special.hpp"

namespace cbc {

using special::expm1_plus;
using special::gamma_fn;
using special::upper_gamma;

BranchingMechanism::BranchingMechanism(double b, double c, LevyMeasure mu)
    : b_(b), c_(c), mu_(std::move(mu)) {
  if (!std::isfinite(b)) throw DomainError("mechanism: b must be finite");
  if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("mechanism: c >= 0 required");
}

std::string BranchingMechanism::describe() const {
  return fmt::format("b={},c={},mu={}", b_, c_, mu_.describe());
}

namespace {

// (1+u)^beta - 1 - beta u, accurate for small u.
double binomial_remainder(double beta, double u) {
  if (std::abs(u) < 0.1) {
    double term = beta;
    double sum = 0.0;
    for (int k = 2; k < 40; ++k) {
      term *= (beta - (k - 1)) / k * u;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum * u;
  }
  return std::expm1(beta * std::log1p(u)) - beta * u;
}

double stable_jump(double C, double beta, double lambda) {
  if (beta == 1.0) return C * (lambda * std::log(lambda) + (special::kEulerGamma - 1.0) * lambda);
  const double g = gamma_fn(-beta) * std::pow(lambda, beta);
  return beta < 1.0 ? C * (g + lambda / (1.0 - beta)) : C * (g - lambda / (beta - 1.0));
}

double truncated_jump(double C, double beta, double lambda) {
  if (lambda <= 2.0) {
    // C sum_{k>=2} (-lambda)^k / (k! (k - beta))
    double term = 1.0;
    double sum = 0.0;
    for (int k = 1; k < 80; ++k) {
      term *= -lambda / k;
      if (k < 2) continue;
      const double add = term / (k - beta);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return C * sum;
  }
  const double beyond = std::pow(lambda, beta) * upper_gamma(-beta, lambda) - 1.0 / beta;
  return stable_jump(C, beta, lambda) - C * beyond;
}

double tempered_jump(double C, double beta, double l0, double lambda) {
  const double u = lambda / l0;
  const double g = gamma_fn(-beta) * std::pow(l0, beta);
  if (beta < 1.0) {
    return C * (g * std::expm1(beta * std::log1p(u)) +
                lambda * std::pow(l0, beta - 1.0) * special::lower_gamma(1.0 - beta, l0));
  }
  return C * (g * binomial_remainder(beta, u) -
              lambda * std::pow(l0, beta - 1.0) * upper_gamma(1.0 - beta, l0));
}

PsiValue jump_by_quadrature(const LevyMeasure& mu, double lambda, double rel_tol) {
  PsiValue out;
  // Below z_t the integrand is replaced by its Taylor expansion.
  const double zt = 1e-4 / std::max(1.0, lambda);
  double small = 0.5 * lambda * lambda * mu.moment_below(2, zt) -
                 lambda * lambda * lambda / 6.0 * mu.moment_below(3, zt);
  auto h = [lambda](double z) {
    return z <= 1.0 ? expm1_plus(lambda * z) : std::expm1(-lambda * z);
  };
  quad::Options qo;
  qo.rel_tol = rel_tol;
  quad::Result r = mu.integrate_to_infinity(h, zt, 0.0, qo);
  out.value = small + r.value;
  out.abs_error = r.abs_error;
  out.converged = r.converged;
  return out;
}

}  // namespace

PsiValue psi_jump(const LevyMeasure& mu, double lambda, const PsiOptions& opts) {
  if (!(lambda >= 0.0)) throw DomainError("psi: lambda >= 0 required");
  PsiValue out;
  out.closed_form = true;
  if (lambda == 0.0 || mu.is_zero()) return out;
  if (!opts.force_quadrature) {
    switch (mu.kind()) {
      case LevyMeasure::Kind::FiniteAtoms: {
        double s = 0.0;
        for (const Atom& a : mu.atom_list())
          s += a.w * (a.z <= 1.0 ? expm1_plus(lambda * a.z) : std::expm1(-lambda * a.z));
        out.value = s;
        return out;
      }
      case LevyMeasure::Kind::Stable:
      case LevyMeasure::Kind::Neveu:
        out.value = stable_jump(mu.C(), mu.beta(), lambda);
        return out;
      case LevyMeasure::Kind::TruncatedStable:
        out.value = truncated_jump(mu.C(), mu.beta(), lambda);
        return out;
      case LevyMeasure::Kind::TemperedStable:
        if (mu.beta() != 1.0) {
          out.value = tempered_jump(mu.C(), mu.beta(), mu.lambda0(), lambda);
          return out;
        }
        break;
      default:
        break;
    }
  }
  out = jump_by_quadrature(mu, lambda, opts.rel_tol);
  out.closed_form = false;
  return out;
}

PsiValue psi_eval_detailed(const BranchingMechanism& mech, double lambda, const PsiOptions& opts) {
  PsiValue j = psi_jump(mech.mu(), lambda, opts);
  j.value += mech.b() * lambda + mech.c() * lambda * lambda;
  return j;
}

double psi_eval(const BranchingMechanism& mech, double lambda, const PsiOptions& opts) {
  PsiValue v = psi_eval_detailed(mech, lambda, opts);
  if (!v.converged)
    throw NumericFailure(fmt::format("inconclusive quadrature for Psi({})", lambda), v.value);
  return v.value;
}

double psi_quadrature(const BranchingMechanism& mech, double lambda) {
  PsiOptions o;
  o.force_quadrature = true;
  return psi_eval(mech, lambda, o);
}

double psi_prime_zero(const BranchingMechanism& mech) {
  const double tail = mech.mu().first_moment(1.0, kInf);
  if (std::isinf(tail)) return -kInf;
  return mech.b() - tail;
}

std::optional<double> psi_largest_root(const BranchingMechanism& mech, double cap) {
  double prev = 0.0;
  for (double lam = 0x1p-40; lam <= cap; lam *= 2.0) {
    if (psi_eval(mech, lam) > 0.0) {
      if (prev == 0.0 && psi_prime_zero(mech) >= 0.0) return 0.0;
      double lo = prev, hi = lam;
      for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (psi_eval(mech, mid) > 0.0 ? hi : lo) = mid;
      }
      return hi;
    }
    prev = lam;
  }
  return std::nullopt;
}

void check_psi_convexity(const BranchingMechanism& mech, double tol) {
  std::vector<double> grid{0.0};
  for (int k = -8; k <= 16; ++k) grid.push_back(std::ldexp(1.0, k));
  std::vector<double> vals;
  for (double l : grid) vals.push_back(psi_eval(mech, l));
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double w = (grid[i] - grid[i - 1]) / (grid[i + 1] - grid[i - 1]);
    const double chord = (1.0 - w) * vals[i - 1] + w * vals[i + 1];
    const double scale = std::max({1.0, std::abs(vals[i - 1]), std::abs(vals[i + 1])});
    if (vals[i] > chord + tol * scale)
      throw InvariantBreach(fmt::format("Psi not convex near lambda={} ({} > {})", grid[i], vals[i], chord));
  }
}

// ---- competition ----

CompetitionFunction CompetitionFunction::zero() { return CompetitionFunction{}; }

CompetitionFunction CompetitionFunction::power(double a, double p) {
  CompetitionFunction g;
  g.kind_ = Kind::Power;
  g.a_ = a;
  g.p_ = p;
  g.name_ = "power";
  g.validate();
  return g;
}

CompetitionFunction CompetitionFunction::logistic(double a) {
  CompetitionFunction g;
  g.kind_ = Kind::Logistic;
  g.a_ = a;
  g.p_ = 2.0;
  g.name_ = "logistic";
  g.validate();
  return g;
}

CompetitionFunction CompetitionFunction::tabulated(std::vector<std::pair<double, double>> points) {
  CompetitionFunction g;
  g.kind_ = Kind::Tabulated;
  if (points.empty() || points.front().first != 0.0) points.insert(points.begin(), {0.0, 0.0});
  g.table_ = std::move(points);
  g.name_ = "tabulated";
  for (std::size_t i = 1; i < g.table_.size(); ++i)
    if (!(g.table_[i].first > g.table_[i - 1].first))
      throw DomainError("competition: tabulated x values must be strictly increasing");
  g.validate();
  return g;
}

CompetitionFunction CompetitionFunction::custom(std::function<double(double)> fn, bool declared_monotone,
                                                std::string name) {
  if (!declared_monotone)
    throw DomainError("competition: g is a continuous and non-decreasing function; custom g not declared monotone");
  CompetitionFunction g;
  g.kind_ = Kind::Custom;
  g.fn_ = std::move(fn);
  g.name_ = std::move(name);
  g.validate();
  return g;
}

CompetitionFunction CompetitionFunction::with_theta(double theta) const {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("competition: theta must lie in (0, 1)");
  CompetitionFunction g = *this;
  g.theta_ = theta;
  return g;
}

void CompetitionFunction::validate() const {
  if (kind_ == Kind::Power || kind_ == Kind::Logistic) {
    if (!(a_ > 0.0)) throw DomainError("competition: a > 0 required");
    if (!(p_ > 0.0)) throw DomainError("competition: p > 0 required");
  }
  const double g0 = (*this)(0.0);
  if (g0 != 0.0) throw DomainError(fmt::format("competition: g(0) = 0 required, got {}", g0));
  double prev = 0.0;
  for (int k = -30; k <= 30; ++k) {
    const double x = std::ldexp(1.0, k);
    const double v = (*this)(x);
    if (!std::isfinite(v) || v < prev - 1e-12 * std::abs(prev))
      throw DomainError(fmt::format(
          "competition: g is a continuous and non-decreasing function; sample g({}) = {} < {}", x, v, prev));
    prev = v;
  }
  for (std::size_t i = 1; i < table_.size(); ++i) {
    if (table_[i].second < table_[i - 1].second)
      throw DomainError(fmt::format(
          "competition: g is a continuous and non-decreasing function; g({}) = {} < g({}) = {}",
          table_[i].first, table_[i].second, table_[i - 1].first, table_[i - 1].second));
  }
}

double CompetitionFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Power: return x <= 0.0 ? 0.0 : a_ * std::pow(x, p_);
    case Kind::Logistic: return a_ * x * x;
    case Kind::Custom: return fn_(x);
    case Kind::Tabulated: {
      auto it = std::upper_bound(table_.begin(), table_.end(), x,
                                 [](double v, const auto& p) { return v < p.first; });
      if (it == table_.begin()) return table_.front().second;
      if (it == table_.end()) it = table_.end() - 1;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double slope = (hi.second - lo.second) / (hi.first - lo.first);
      return lo.second + slope * (x - lo.first);
    }
  }
  return 0.0;
}

double CompetitionFunction::derivative(double x) const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Power: return x <= 0.0 ? (p_ >= 1.0 ? (p_ == 1.0 ? a_ : 0.0) : kInf) : a_ * p_ * std::pow(x, p_ - 1.0);
    case Kind::Logistic: return 2.0 * a_ * x;
    default: {
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      const double lo = std::max(0.0, x - h);
      return ((*this)(x + h) - (*this)(lo)) / (x + h - lo);
    }
  }
}

std::string CompetitionFunction::describe() const {
  switch (kind_) {
    case Kind::Zero: return "zero";
    case Kind::Power: return fmt::format("power(a={},p={})", a_, p_);
    case Kind::Logistic: return fmt::format("logistic(a={})", a_);
    case Kind::Tabulated: return fmt::format("tabulated(points={})", table_.size());
    case Kind::Custom: return name_;
  }
  return "?";
}

// ---- growth ----

GrowthFunction GrowthFunction::log_power(double k) {
  if (!(k > 0.0)) throw DomainError("growth: exponent must be > 0");
  return {Kind::LogPower, k};
}

GrowthFunction GrowthFunction::power(double p) {
  if (!(p > 0.0)) throw DomainError("growth: exponent must be > 0");
  return {Kind::Power, p};
}

double GrowthFunction::operator()(double r) const {
  return kind_ == Kind::LogPower ? std::pow(std::log1p(r), k_) : std::pow(1.0 + r, k_);
}

double GrowthFunction::derivative(double r) const {
  if (kind_ == Kind::LogPower) return k_ * std::pow(std::log1p(r), k_ - 1.0) / (1.0 + r);
  return k_ * std::pow(1.0 + r, k_ - 1.0);
}

bool GrowthFunction::reciprocal_integrable() const {
  return kind_ == Kind::LogPower ? k_ > 1.0 : true;
}

std::string GrowthFunction::describe() const {
  return kind_ == Kind::LogPower ? fmt::format("log_power(k={})", k_) : fmt::format("power(p={})", k_);
}

}  // namespace cbc
