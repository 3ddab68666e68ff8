#include "cbc/levy_measure.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cbc/error.hpp"
#include "cbc/special.hpp"

namespace cbc {

namespace {

// Integral of K z^q over [lo, hi], hi possibly infinite.
double power_integral(double K, double q, double lo, double hi) {
  if (hi <= lo) return 0.0;
  if (q == -1.0) return std::isinf(hi) ? kInf : K * std::log(hi / lo);
  const double e = q + 1.0;
  if (std::isinf(hi)) return e < 0.0 ? -K * std::pow(lo, e) / e : kInf;
  if (lo == 0.0) return e > 0.0 ? K * std::pow(hi, e) / e : kInf;
  return K * (std::pow(hi, e) - std::pow(lo, e)) / e;
}

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

LevyMeasure LevyMeasure::none() { return LevyMeasure{}; }

LevyMeasure LevyMeasure::truncated_stable(double C, double beta) {
  LevyMeasure m;
  m.kind_ = Kind::TruncatedStable;
  m.C_ = C;
  m.beta_ = beta;
  m.validate();
  return m;
}

LevyMeasure LevyMeasure::stable(double C, double beta) {
  LevyMeasure m;
  m.kind_ = Kind::Stable;
  m.C_ = C;
  m.beta_ = beta;
  m.validate();
  return m;
}

LevyMeasure LevyMeasure::neveu(double C) {
  LevyMeasure m;
  m.kind_ = Kind::Neveu;
  m.C_ = C;
  m.beta_ = 1.0;
  m.validate();
  return m;
}

LevyMeasure LevyMeasure::tempered_stable(double C, double beta, double lambda0) {
  LevyMeasure m;
  m.kind_ = Kind::TemperedStable;
  m.C_ = C;
  m.beta_ = beta;
  m.lambda0_ = lambda0;
  m.validate();
  return m;
}

LevyMeasure LevyMeasure::atoms(std::vector<Atom> atoms) {
  LevyMeasure m;
  m.kind_ = Kind::FiniteAtoms;
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.z < b.z; });
  m.atoms_ = std::move(atoms);
  m.validate();
  return m;
}

LevyMeasure LevyMeasure::tabulated(std::vector<DensityPoint> grid, double small_exponent,
                                   double tail_exponent) {
  LevyMeasure m;
  m.kind_ = Kind::Tabulated;
  m.table_ = std::move(grid);
  m.small_exp_ = small_exponent;
  m.tail_exp_ = tail_exponent;
  m.validate();
  return m;
}

void LevyMeasure::validate() const {
  switch (kind_) {
    case Kind::None:
      return;
    case Kind::TruncatedStable:
    case Kind::Stable:
    case Kind::TemperedStable:
      require(C_ > 0.0, "Levy measure: C must be > 0");
      require(beta_ > 0.0 && beta_ < 2.0, "Levy measure: beta must lie in (0, 2)");
      if (kind_ == Kind::TemperedStable) require(lambda0_ > 0.0, "Levy measure: lambda0 must be > 0");
      break;
    case Kind::Neveu:
      require(C_ > 0.0, "Levy measure: C must be > 0");
      break;
    case Kind::FiniteAtoms:
      require(!atoms_.empty(), "Levy measure: atom list is empty");
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        require(atoms_[i].z > 0.0 && atoms_[i].w > 0.0,
                "Levy measure: atoms need positive location and weight");
        if (i > 0) require(atoms_[i].z > atoms_[i - 1].z, "Levy measure: duplicate atom location");
      }
      break;
    case Kind::Tabulated:
      require(table_.size() >= 2, "Levy measure: tabulated density needs >= 2 points");
      for (std::size_t i = 0; i < table_.size(); ++i) {
        require(table_[i].z > 0.0 && table_[i].m > 0.0,
                "Levy measure: tabulated density values must be strictly positive");
        if (i > 0) require(table_[i].z > table_[i - 1].z, "Levy measure: grid must be strictly increasing");
      }
      require(small_exp_ < 2.0, "Levy measure: small-z exponent must be < 2");
      require(tail_exp_ > 0.0, "Levy measure: tail exponent must be > 0");
      break;
  }
  const double mass = finiteness_mass();
  if (!std::isfinite(mass)) throw DomainError("Levy measure: (1 ^ z^2) mu(dz) is not finite");
}

std::string LevyMeasure::kind_name() const {
  switch (kind_) {
    case Kind::None: return "none";
    case Kind::TruncatedStable: return "truncated_stable";
    case Kind::Stable: return "stable";
    case Kind::Neveu: return "neveu";
    case Kind::TemperedStable: return "tempered_stable";
    case Kind::FiniteAtoms: return "atoms";
    case Kind::Tabulated: return "tabulated";
  }
  return "?";
}

bool LevyMeasure::has_density() const noexcept {
  return kind_ != Kind::None && kind_ != Kind::FiniteAtoms;
}

double LevyMeasure::tab_density(double z) const {
  const auto& t = table_;
  if (z <= t.front().z) return t.front().m * std::pow(z / t.front().z, -(1.0 + small_exp_));
  if (z >= t.back().z) return t.back().m * std::pow(z / t.back().z, -(1.0 + tail_exp_));
  auto it = std::upper_bound(t.begin(), t.end(), z,
                             [](double v, const DensityPoint& p) { return v < p.z; });
  const DensityPoint& hi = *it;
  const DensityPoint& lo = *(it - 1);
  const double w = std::log(z / lo.z) / std::log(hi.z / lo.z);
  return std::exp((1.0 - w) * std::log(lo.m) + w * std::log(hi.m));
}

double LevyMeasure::density(double z) const {
  if (!(z > 0.0)) return 0.0;
  switch (kind_) {
    case Kind::TruncatedStable:
      return z <= 1.0 ? C_ * std::pow(z, -1.0 - beta_) : 0.0;
    case Kind::Stable:
      return C_ * std::pow(z, -1.0 - beta_);
    case Kind::Neveu:
      return C_ / (z * z);
    case Kind::TemperedStable:
      return C_ * std::pow(z, -1.0 - beta_) * std::exp(-lambda0_ * z);
    case Kind::Tabulated:
      return tab_density(z);
    default:
      return 0.0;
  }
}

double LevyMeasure::support_end() const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::TruncatedStable: return 1.0;
    case Kind::FiniteAtoms: return atoms_.back().z;
    default: return kInf;
  }
}

std::optional<double> LevyMeasure::small_exponent() const {
  switch (kind_) {
    case Kind::TruncatedStable:
    case Kind::Stable:
    case Kind::TemperedStable:
    case Kind::Neveu:
      return beta_;
    case Kind::Tabulated:
      return small_exp_;
    default:
      return std::nullopt;
  }
}

double LevyMeasure::tail_exponent() const {
  switch (kind_) {
    case Kind::Stable:
    case Kind::Neveu:
      return beta_;
    case Kind::Tabulated:
      return tail_exp_;
    default:
      return kInf;
  }
}

double LevyMeasure::numeric_moment(int p, double lo, double hi) const {
  if (hi <= lo) return 0.0;
  quad::Result r = integrate([p](double z) { return std::pow(z, p); }, lo, hi);
  return r.value;
}

double LevyMeasure::tail_mass(double z) const {
  if (!(z > 0.0)) throw DomainError("tail_mass requires z > 0");
  switch (kind_) {
    case Kind::None:
      return 0.0;
    case Kind::TruncatedStable:
      return z >= 1.0 ? 0.0 : C_ * (std::pow(z, -beta_) - 1.0) / beta_;
    case Kind::Stable:
      return C_ * std::pow(z, -beta_) / beta_;
    case Kind::Neveu:
      return C_ / z;
    case Kind::TemperedStable:
      return C_ * std::pow(lambda0_, beta_) * special::upper_gamma(-beta_, lambda0_ * z);
    case Kind::FiniteAtoms: {
      double s = 0.0;
      for (const Atom& a : atoms_)
        if (a.z > z) s += a.w;
      return s;
    }
    case Kind::Tabulated: {
      const DensityPoint& f = table_.front();
      const DensityPoint& b = table_.back();
      const double Kb = b.m * std::pow(b.z, 1.0 + tail_exp_);
      if (z >= b.z) return power_integral(Kb, -1.0 - tail_exp_, z, kInf);
      double mass = power_integral(Kb, -1.0 - tail_exp_, b.z, kInf);
      const double lo = std::max(z, f.z);
      mass += numeric_moment(0, lo, b.z);
      if (z < f.z) mass += power_integral(f.m * std::pow(f.z, 1.0 + small_exp_), -1.0 - small_exp_, z, f.z);
      return mass;
    }
  }
  return 0.0;
}

double LevyMeasure::first_moment(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  switch (kind_) {
    case Kind::None:
      return 0.0;
    case Kind::TruncatedStable:
      return power_integral(C_, -beta_, lo, std::min(hi, 1.0));
    case Kind::Stable:
    case Kind::Neveu:
      return power_integral(C_, -beta_, lo, hi);
    case Kind::TemperedStable: {
      const double scale = C_ * std::pow(lambda0_, beta_ - 1.0);
      const double upper_hi = std::isinf(hi) ? 0.0 : special::upper_gamma(1.0 - beta_, lambda0_ * hi);
      if (lo == 0.0) {
        if (beta_ >= 1.0) return kInf;
        return scale * (special::gamma_fn(1.0 - beta_) - upper_hi);
      }
      return scale * (special::upper_gamma(1.0 - beta_, lambda0_ * lo) - upper_hi);
    }
    case Kind::FiniteAtoms: {
      double s = 0.0;
      for (const Atom& a : atoms_)
        if (a.z > lo && a.z <= hi) s += a.z * a.w;
      return s;
    }
    case Kind::Tabulated: {
      const DensityPoint& f = table_.front();
      const DensityPoint& b = table_.back();
      double s = 0.0;
      if (lo < f.z)
        s += power_integral(f.m * std::pow(f.z, 1.0 + small_exp_), -small_exp_, lo, std::min(hi, f.z));
      s += numeric_moment(1, std::max(lo, f.z), std::min(hi, b.z));
      if (hi > b.z)
        s += power_integral(b.m * std::pow(b.z, 1.0 + tail_exp_), -tail_exp_, std::max(lo, b.z), hi);
      return s;
    }
  }
  return 0.0;
}

double LevyMeasure::moment_below(int p, double z) const {
  if (z <= 0.0) return 0.0;
  switch (kind_) {
    case Kind::None:
      return 0.0;
    case Kind::TruncatedStable:
      return power_integral(C_, p - 1.0 - beta_, 0.0, std::min(z, 1.0));
    case Kind::Stable:
    case Kind::Neveu:
      return power_integral(C_, p - 1.0 - beta_, 0.0, z);
    case Kind::TemperedStable:
      return C_ * std::pow(lambda0_, beta_ - p) * special::lower_gamma(p - beta_, lambda0_ * z);
    case Kind::FiniteAtoms: {
      double s = 0.0;
      for (const Atom& a : atoms_)
        if (a.z <= z) s += std::pow(a.z, p) * a.w;
      return s;
    }
    case Kind::Tabulated: {
      const DensityPoint& f = table_.front();
      const double Kf = f.m * std::pow(f.z, 1.0 + small_exp_);
      double s = power_integral(Kf, p - 1.0 - small_exp_, 0.0, std::min(z, f.z));
      if (z > f.z) {
        const DensityPoint& b = table_.back();
        s += numeric_moment(p, f.z, std::min(z, b.z));
        if (z > b.z) s += power_integral(b.m * std::pow(b.z, 1.0 + tail_exp_), p - 1.0 - tail_exp_, b.z, z);
      }
      return s;
    }
  }
  return 0.0;
}

double LevyMeasure::finiteness_mass() const {
  if (kind_ == Kind::None) return 0.0;
  return moment_below(2, 1.0) + tail_mass(1.0);
}

std::vector<double> LevyMeasure::breakpoints(double lo, double hi) const {
  std::vector<double> pts;
  auto add = [&](double p) {
    if (p > lo && p < hi) pts.push_back(p);
  };
  add(1.0);
  if (kind_ == Kind::Tabulated)
    for (const DensityPoint& p : table_) add(p.z);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

quad::Result LevyMeasure::integrate(const std::function<double(double)>& f, double lo, double hi,
                                    const quad::Options& opts) const {
  quad::Result total;
  total.converged = true;
  if (!(hi > lo)) return total;
  if (!(lo > 0.0) || std::isinf(hi)) throw DomainError("LevyMeasure::integrate needs 0 < lo < hi < inf");
  for (const Atom& a : atoms_) {
    if (a.z > lo && a.z <= hi) total.value += a.w * f(a.z);
  }
  if (!has_density()) return total;
  const double end = std::min(hi, support_end());
  if (end <= lo) return total;
  std::vector<double> pts{lo};
  for (double p : breakpoints(lo, end)) pts.push_back(p);
  pts.push_back(end);
  const auto integrand = [&](double z) { return f(z) * density(z); };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total = total + quad::log_gauss_kronrod(integrand, pts[i], pts[i + 1], opts);
  }
  return total;
}

quad::Result LevyMeasure::integrate_to_infinity(const std::function<double(double)>& f, double lo,
                                                double growth, const quad::Options& opts) const {
  const double a = tail_exponent();
  if (std::isinf(support_end()) && !std::isinf(a) && !(growth < a)) {
    throw DomainError(fmt::format(
        "jump integral diverges: integrand growth z^{} against tail exponent {}", growth, a));
  }
  double far;
  if (!std::isinf(support_end())) {
    far = std::max(support_end(), lo);
    quad::Result r = integrate(f, lo, far, opts);
    return r;
  }
  if (kind_ == Kind::TemperedStable) {
    far = std::max(lo, 1.0) + 45.0 / lambda0_;
  } else {
    far = std::max(lo, 1.0) * std::pow(1e15, 1.0 / (a - growth));
    far = std::min(far, 1e280);
  }
  quad::Result r = integrate(f, lo, far, opts);
  const double tail = tail_mass(far);
  if (tail > 0.0) r.value += f(far) * tail;
  return r;
}

std::string LevyMeasure::describe() const {
  switch (kind_) {
    case Kind::None:
      return "none";
    case Kind::TruncatedStable:
    case Kind::Stable:
      return fmt::format("{}(C={},beta={})", kind_name(), C_, beta_);
    case Kind::Neveu:
      return fmt::format("neveu(C={})", C_);
    case Kind::TemperedStable:
      return fmt::format("tempered_stable(C={},beta={},lambda0={})", C_, beta_, lambda0_);
    case Kind::FiniteAtoms: {
      std::string s = "atoms(";
      for (std::size_t i = 0; i < atoms_.size(); ++i)
        s += fmt::format("{}{}:{}", i ? "," : "", atoms_[i].z, atoms_[i].w);
      return s + ")";
    }
    case Kind::Tabulated:
      return fmt::format("tabulated(points={},small_exponent={},tail_exponent={})", table_.size(),
                         small_exp_, tail_exp_);
  }
  return "?";
}

}  // namespace cbc
