#include "cbc/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cbc/error.hpp"

namespace cbc {

namespace {

// Jump integral of a compensated integrand. Below zt the integrand is
// replaced by d2 z^2/2 + d3 z^3/6.
double compensated_integral(const LevyMeasure& mu, const std::function<double(double)>& comp,
                            double d2, double d3, double scale, double growth, double rel_tol) {
  if (mu.is_zero()) return 0.0;
  const double zt = 1e-4 * std::min(1.0, scale);
  double small = 0.0;
  if (d2 != 0.0) small += 0.5 * d2 * mu.moment_below(2, zt);
  if (d3 != 0.0) small += d3 / 6.0 * mu.moment_below(3, zt);
  quad::Options qo;
  qo.rel_tol = rel_tol;
  const quad::Result r = mu.integrate_to_infinity(comp, zt, growth, qo);
  // Pieces that are tiny next to the total may stall on rounding noise; judge
  // the error against the whole integral.
  if (!r.converged && !(r.abs_error <= 1e3 * rel_tol * std::abs(small + r.value)))
    throw NumericFailure("jump integral: quadrature did not converge", small + r.value);
  return small + r.value;
}

}  // namespace

double jump_integral(const LevyMeasure& mu, const TestFunction& f, double x, double rel_tol) {
  if (mu.is_zero()) return 0.0;
  const auto comp = [&](double z) { return z <= 1.0 ? f.compensated(x, z) : f.increment(x, z); };
  return compensated_integral(mu, comp, f.d2(x), f.d3(x), f.scale(x), f.growth_exponent(), rel_tol);
}

double apply_L(const BranchingMechanism& mech, const CompetitionFunction& g, const TestFunction& f,
               double x, const GeneratorOptions& opts) {
  if (!(x >= 0.0)) throw DomainError("apply_L: x >= 0 required");
  if (x == 0.0) return 0.0;
  double J = 0.0;
  if (!mech.mu().is_zero()) {
    if (f.kind() == TestFunction::Kind::Exponential && !opts.force_quadrature) {
      PsiOptions po;
      po.rel_tol = opts.rel_tol;
      J = f.value(x) * psi_jump(mech.mu(), f.parameter(), po).value;
    } else {
      J = jump_integral(mech.mu(), f, x, opts.rel_tol);
    }
  }
  const double drift = -(mech.b() * x + g(x)) * f.d1(x);
  const double diffusion = mech.c() == 0.0 ? 0.0 : mech.c() * x * f.d2(x);
  return drift + diffusion + x * J;
}

// ---------------------------------------------------------------- OverlapMeasure

namespace {

bool decreasing_density(const LevyMeasure& mu) {
  switch (mu.kind()) {
    case LevyMeasure::Kind::TruncatedStable:
    case LevyMeasure::Kind::Stable:
    case LevyMeasure::Kind::Neveu:
    case LevyMeasure::Kind::TemperedStable:
      return true;
    default:
      return false;
  }
}

}  // namespace

OverlapMeasure::OverlapMeasure(LevyMeasure mu, double a) : mu_(std::move(mu)), a_(a) {
  if (mu_.is_zero()) return;
  if (a_ == 0.0) {
    const auto s = mu_.small_exponent();
    if (mu_.has_density() && s && *s >= 0.0) {
      mass_ = kInf;
      return;
    }
    for (const Atom& at : mu_.atom_list()) atoms_.push_back({at.z, 0.5 * at.w});
    mass_ = 0.5 * mu_.tail_mass(std::numeric_limits<double>::min());
    return;
  }
  const double s = std::abs(a_);
  const auto& list = mu_.atom_list();
  for (const Atom& hi : list) {
    for (const Atom& lo : list) {
      if (std::abs(hi.z - (lo.z + s)) <= 1e-12 * std::max(1.0, hi.z)) {
        // Overlap point in z: the upper atom for a > 0, the lower for a < 0.
        atoms_.push_back({a_ > 0.0 ? hi.z : lo.z, 0.5 * std::min(hi.w, lo.w)});
      }
    }
  }
  double m = 0.0;
  for (const Atom& at : atoms_) m += at.w;
  if (mu_.has_density()) {
    if (decreasing_density(mu_)) {
      m += 0.5 * mu_.tail_mass(s);
    } else {
      OverlapMeasure dens(*this);
      dens.atoms_.clear();
      m += dens.integrate([](double) { return 1.0; }).value;
    }
  }
  mass_ = m;
}

double OverlapMeasure::w_density(double w) const {
  const double s = std::abs(a_);
  if (!(w > s)) return 0.0;
  if (decreasing_density(mu_)) return 0.5 * mu_.density(w);
  return 0.5 * std::min(mu_.density(w), mu_.density(w - s));
}

double OverlapMeasure::density(double z) const {
  if (a_ == 0.0) return 0.5 * mu_.density(z);
  const double w = a_ > 0.0 ? z : z + std::abs(a_);
  return w_density(w);
}

quad::Result OverlapMeasure::integrate(const std::function<double(double)>& h, double growth,
                                       const quad::Options& opts) const {
  quad::Result total;
  total.converged = true;
  if (mu_.is_zero()) return total;
  if (a_ == 0.0) {
    if (infinite()) throw DomainError("overlap measure at a = 0 has infinite mass");
    total = mu_.integrate_to_infinity(h, std::numeric_limits<double>::min(), growth, opts);
    total.value *= 0.5;
    total.abs_error *= 0.5;
    return total;
  }
  for (const Atom& at : atoms_) total.value += at.w * h(at.z);
  if (!mu_.has_density()) return total;

  // Integrate in w, the upper of the two matched points; z = w - (a < 0 ? s : 0).
  const double s = std::abs(a_);
  const double off = a_ > 0.0 ? 0.0 : s;
  const double tail_exp = mu_.tail_exponent();
  double end = mu_.support_end();
  bool closed = true;
  if (std::isinf(end)) {
    closed = false;
    if (!std::isinf(tail_exp) && !(growth < tail_exp))
      throw DomainError(fmt::format("overlap integral diverges: growth {} against tail exponent {}",
                                    growth, tail_exp));
    if (mu_.kind() == LevyMeasure::Kind::TemperedStable) {
      end = std::max(s, 1.0) + 45.0 / mu_.lambda0();
    } else {
      end = std::min(1e280, std::max(s, 1.0) * std::pow(1e15, 1.0 / (tail_exp - growth)));
    }
  }
  if (!(end > s)) return total;
  std::vector<double> pts{s};
  auto add = [&](double p) {
    if (p > s && p < end) pts.push_back(p);
  };
  for (double p : mu_.breakpoints(0.0, end + s)) {
    add(p);
    add(p + s);
  }
  add(1.0);
  add(1.0 + s);
  add(2.0 * s);
  pts.push_back(end);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const auto integrand = [&](double w) { return h(w - off) * w_density(w); };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total = total + quad::log_gauss_kronrod(integrand, pts[i], pts[i + 1], opts);
  if (!closed) total.value += h(end - off) * 0.5 * mu_.tail_mass(end);
  return total;
}

double overlap_mass(const LevyMeasure& mu, double a) { return OverlapMeasure(mu, a).mass(); }

// ---------------------------------------------------------------- coupling generator

double apply_coupling_L(const BranchingMechanism& mech, const CompetitionFunction& g,
                        const PairFunction& F, double x, double y, const GeneratorOptions& opts) {
  if (!(x > y && y > 0.0))
    throw DomainError(fmt::format("coupling generator needs x > y > 0 (off the diagonal), got ({}, {})", x, y));
  const double b = mech.b(), c = mech.c();
  double out = (-b * x - g(x)) * F.dx(x, y) + (-b * y - g(y)) * F.dy(x, y);
  if (c != 0.0) out += c * x * F.dxx(x, y) + c * y * F.dyy(x, y) - 2.0 * c * y * F.dxy(x, y);
  const LevyMeasure& mu = mech.mu();
  if (mu.is_zero()) return out;

  using K = PairFunction::Kind;
  const double scale = F.scale(x, y);
  const double growth = F.growth_exponent();
  if (F.kind() != K::OfSecond && F.kind() != K::Constant) {
    const double Fx = F.dx(x, y);
    const auto comp = [&](double z) {
      const double inc = F.increment_x(x, y, z);
      return z <= 1.0 ? inc - Fx * z : inc;
    };
    out += (x - y) * compensated_integral(mu, comp, F.dxx(x, y), F.dxxx(x, y), scale, growth, opts.rel_tol);
  }
  if (F.kind() != K::OfDifference && F.kind() != K::Constant) {
    const double Fd = F.dx(x, y) + F.dy(x, y);
    const double D2 = F.dxx(x, y) + 2.0 * F.dxy(x, y) + F.dyy(x, y);
    const auto comp = [&](double z) {
      const double inc = F.increment_diag(x, y, z);
      return z <= 1.0 ? inc - Fd * z : inc;
    };
    out += y * compensated_integral(mu, comp, D2, F.diag3(x, y), scale, growth, opts.rel_tol);
  }
  if (F.kind() == K::Constant) return out;

  quad::Options qo;
  qo.rel_tol = opts.rel_tol;
  const OverlapMeasure up(mu, x - y), down(mu, y - x);
  if (up.mass() > 0.0) {
    const auto h5 = [&](double z) { return F.value(x + z, 2.0 * y + z - x) - F.value(x + z, y + z); };
    const quad::Result r = up.integrate(h5, growth, qo);
    if (!r.converged) throw NumericFailure("coupling generator: overlap quadrature did not converge", r.value);
    out += y * r.value;
  }
  if (down.mass() > 0.0) {
    const auto h6 = [&](double z) { return F.value(x + z, x + z) - F.value(x + z, y + z); };
    const quad::Result r = down.integrate(h6, growth, qo);
    if (!r.converged) throw NumericFailure("coupling generator: overlap quadrature did not converge", r.value);
    out += y * r.value;
  }
  return out;
}

double apply_coupling_L_diff(const BranchingMechanism& mech, const CompetitionFunction& g,
                             const TestFunction& f, double x, double y, const GeneratorOptions& opts) {
  if (!(x > y && y > 0.0))
    throw DomainError(fmt::format("difference form needs x > y > 0, got ({}, {})", x, y));
  if (std::abs(f.value(0.0)) > 1e-14) throw DomainError("difference form requires f(0) = 0");
  const double d = x - y;
  double out = -(g(x) - g(y)) * f.d1(d) + 4.0 * mech.c() * y * f.d2(d);
  const double mass = overlap_mass(mech.mu(), d);
  if (mass > 0.0) out += y * (f.value(2.0 * d) - 2.0 * f.value(d)) * mass;
  return out + apply_L(mech, CompetitionFunction::zero(), f, d, opts);
}

CouplingInequalityResult verify_coupling_inequality(const BranchingMechanism& mech,
                                                    const CompetitionFunction& g, double rho, double A,
                                                    double B, double target_C) {
  if (!(A > 0.0 && B > A)) throw DomainError("coupling inequality: 0 < A < B required");
  if (!(target_C >= 0.0)) throw DomainError("coupling inequality: target C >= 0 required");
  CouplingInequalityResult res;
  res.fluctuation = fluctuation_check(mech);
  const TestFunction phi = TestFunction::coupling_phi(rho);

  // Worst value for each gap d = 2^{-m/4}; the gaps are shared by all l.
  struct GapRow {
    double d, worst, x, y;
  };
  std::vector<GapRow> gaps;
  constexpr int kYPoints = 16;
  for (int m = 1;; ++m) {
    const double d = std::exp2(-m / 4.0);
    if (d < 1e-8) break;
    if (!(d < B - A)) continue;
    const double L0 = apply_L(mech, CompetitionFunction::zero(), phi, d);
    const double mass = overlap_mass(mech.mu(), d);
    const double split = mass > 0.0 ? (phi.value(2.0 * d) - 2.0 * phi.value(d)) * mass : 0.0;
    const double f1 = phi.d1(d), f2 = phi.d2(d);
    const double span = B - d - A;
    std::vector<double> ys{A + 1e-6 * span, B - d - 1e-6 * span};
    for (int i = 0; i < kYPoints; ++i) ys.push_back(A + span * (i + 0.5) / kYPoints);
    GapRow row{d, -kInf, 0.0, 0.0};
    for (double y : ys) {
      const double x = y + d;
      const double v = -(g(x) - g(y)) * f1 + 4.0 * mech.c() * y * f2 + y * split + L0;
      if (v > row.worst) row = {d, v, x, y};
    }
    gaps.push_back(row);
  }
  for (int k = 1; k <= 20; ++k) {
    const double l = std::exp2(-k);
    CouplingTraceRow tr{l, -kInf, 0.0, 0.0};
    for (const GapRow& r : gaps) {
      if (r.d < l && r.worst > tr.worst_value) tr = {l, r.worst, r.x, r.y};
    }
    res.trace.push_back(tr);
    if (tr.worst_value <= -target_C) {
      res.found = true;
      res.l = l;
      res.worst_value = tr.worst_value;
      res.margin = -target_C - tr.worst_value;
      return res;
    }
  }
  if (!res.trace.empty()) {
    res.worst_value = res.trace.back().worst_value;
    res.margin = -target_C - res.worst_value;
  }
  return res;
}

}  // namespace cbc
