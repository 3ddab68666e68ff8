#include "cbc/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "cbc/error.hpp"
#include "cbc/quadrature.hpp"

namespace cbc {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Satisfied: return "satisfied";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

const char* criticality_name(Criticality c) {
  switch (c) {
    case Criticality::Subcritical: return "subcritical";
    case Criticality::Critical: return "critical";
    case Criticality::Supercritical: return "supercritical";
    case Criticality::SupercriticalOrUndefined: return "supercritical-or-undefined";
  }
  return "?";
}

std::optional<double> ConditionReport::find(const std::string& name) const {
  for (const Evidence& e : evidence)
    if (e.name == name) return e.value;
  return std::nullopt;
}

CriticalityResult classify_criticality(const BranchingMechanism& mech, double tol) {
  const double d = psi_prime_zero(mech);
  if (std::isinf(d)) return {Criticality::SupercriticalOrUndefined, d};
  if (std::abs(d) <= tol) return {Criticality::Critical, d};
  return {d > 0.0 ? Criticality::Subcritical : Criticality::Supercritical, d};
}

Verdict divergence_verdict(const std::vector<double>& values, double threshold, int window) {
  const int n = static_cast<int>(values.size());
  if (n < window) return Verdict::Inconclusive;
  bool increasing = true;
  bool non_increasing = true;
  for (int i = n - window + 1; i < n; ++i) {
    if (!(values[i] > values[i - 1])) increasing = false;
    if (values[i] > values[i - 1]) non_increasing = false;
  }
  if (increasing && values.back() > threshold) return Verdict::Satisfied;
  if (non_increasing) return Verdict::Violated;
  return Verdict::Inconclusive;
}

double growth_ratio(const CompetitionFunction& g, const GrowthFunction& varphi, double alpha, double x) {
  if (alpha > 1.0) return g(x) / (x * varphi(x));
  if (alpha == 1.0) return g(x) / (x * varphi(x) * std::log(x));
  return g(x) / std::pow(x, 2.0 - alpha);
}

ConditionReport grey_check(const BranchingMechanism& mech) {
  ConditionReport r;
  r.condition = "grey";
  r.tolerance = 1e-8;
  const double cap = 0x1p60;
  const std::optional<double> root = psi_largest_root(mech, cap);
  if (!root) {
    r.verdict = Verdict::Violated;
    r.add("search_cap", cap, "no lambda with Psi(lambda) > 0 found");
    return r;
  }
  const double theta = std::max(2.0 * *root, 1.0);
  const double Lambda = 1e12 * theta;
  r.add("largest_root", *root);
  r.add("theta", theta);
  quad::Options qo;
  qo.rel_tol = 1e-8;
  const quad::Result body =
      quad::log_gauss_kronrod([&](double l) { return 1.0 / psi_eval(mech, l); }, theta, Lambda, qo);
  const double psi_hi = psi_eval(mech, Lambda);
  const double p = std::log2(psi_hi / psi_eval(mech, 0.5 * Lambda));
  const double tail = p > 1.0 ? Lambda / (psi_hi * (p - 1.0)) : kInf;
  r.add("integral_theta_to_cutoff", body.value);
  r.add("cutoff", Lambda);
  r.add("fitted_exponent", p);
  r.add("tail_estimate", tail);
  if (mech.c() > 0.0) {
    r.verdict = Verdict::Satisfied;
    r.add("dominant_tail_bound", 1.0 / (mech.c() * Lambda), "c lambda^2 dominates");
    return r;
  }
  const std::optional<double> s = mech.mu().small_exponent();
  if (!s) {
    r.verdict = Verdict::Violated;
    r.add("small_exponent", 0.0, "no mass near 0: Psi grows at most linearly");
    return r;
  }
  r.add("small_exponent", *s);
  if (*s > 1.0 && *s - 1.0 < r.tolerance) {
    r.verdict = Verdict::Inconclusive;
  } else if (*s > 1.0) {
    r.verdict = Verdict::Satisfied;
    // Lower bound C Gamma(2-beta)/(beta(beta-1)) lambda^beta for power-law densities.
    if (mech.mu().kind() != LevyMeasure::Kind::Tabulated)
      r.add("power_term_coefficient",
            mech.mu().C() * std::tgamma(2.0 - *s) / (*s * (*s - 1.0)));
  } else {
    r.verdict = Verdict::Violated;
  }
  return r;
}

ConditionReport fluctuation_check(const BranchingMechanism& mech) {
  ConditionReport r;
  r.condition = "fluctuation";
  r.tolerance = 0.0;
  const LevyMeasure& mu = mech.mu();
  switch (mu.kind()) {
    case LevyMeasure::Kind::TruncatedStable:
    case LevyMeasure::Kind::Stable:
    case LevyMeasure::Kind::Neveu:
      r.verdict = Verdict::Satisfied;
      r.add("C", mu.C());
      r.add("beta", mu.beta());
      return r;
    case LevyMeasure::Kind::TemperedStable:
      r.verdict = Verdict::Satisfied;
      r.add("C", mu.C() * std::exp(-mu.lambda0()), "tempering factor bounded below on (0, 1]");
      r.add("beta", mu.beta());
      return r;
    case LevyMeasure::Kind::Tabulated: {
      const double s = *mu.small_exponent();
      r.add("small_exponent", s);
      if (!(s > 0.0)) {
        r.verdict = Verdict::Violated;
        r.add("C", 0.0, "small-z exponent <= 0: no beta in (0, 2) bound");
        return r;
      }
      double best_C = 0.0, best_beta = 0.0;
      for (int i = 1; i <= 39; ++i) {
        const double beta = std::min(0.05 * i, s);
        // Below the first grid point m z^{1+beta} = K z^{beta - s}, minimal at z_0.
        double inf = kInf;
        for (const DensityPoint& p : mu.table())
          if (p.z <= 1.0) inf = std::min(inf, p.m * std::pow(p.z, 1.0 + beta));
        inf = std::min(inf, mu.density(1.0));
        if (inf > best_C || (inf == best_C && beta > best_beta)) {
          best_C = inf;
          best_beta = beta;
        }
      }
      r.verdict = best_C > 0.0 ? Verdict::Satisfied : Verdict::Violated;
      r.add("C", best_C);
      r.add("beta", best_beta);
      return r;
    }
    default:
      r.verdict = Verdict::Violated;
      r.add("C", 0.0, "no absolutely continuous mass near 0");
      return r;
  }
}

ConditionReport nontriviality_check(const BranchingMechanism& mech) {
  ConditionReport r;
  r.condition = "nontriviality";
  r.tolerance = 0.0;
  if (mech.c() > 0.0) {
    r.verdict = Verdict::Satisfied;
    r.add("c", mech.c());
    return r;
  }
  const std::optional<double> s = mech.mu().small_exponent();
  if (s && *s >= 1.0) {
    r.verdict = Verdict::Satisfied;
    r.add("small_exponent", *s, "int_0^1 z mu(dz) diverges at 0");
    r.add("first_moment_0_1", kInf);
    return r;
  }
  const double m1 = mech.mu().first_moment(0.0, 1.0);
  r.add("first_moment_0_1", m1);
  if (s) r.add("small_exponent", *s);
  r.verdict = std::isinf(m1) ? Verdict::Satisfied : Verdict::Violated;
  return r;
}

namespace {

// inf over (0, 1] of m(z) z^2, for the Cz^{-2} lower bound.
double inverse_square_bound(const LevyMeasure& mu) {
  switch (mu.kind()) {
    case LevyMeasure::Kind::TruncatedStable:
    case LevyMeasure::Kind::Stable:
    case LevyMeasure::Kind::Neveu:
      return mu.beta() >= 1.0 ? mu.C() : 0.0;
    case LevyMeasure::Kind::TemperedStable:
      return mu.beta() >= 1.0 ? mu.C() * std::exp(-mu.lambda0()) : 0.0;
    case LevyMeasure::Kind::Tabulated: {
      if (*mu.small_exponent() < 1.0) return 0.0;
      double inf = mu.density(1.0);
      for (const DensityPoint& p : mu.table())
        if (p.z <= 1.0) inf = std::min(inf, p.m * p.z * p.z);
      return inf;
    }
    default:
      return 0.0;
  }
}

}  // namespace

ConditionReport near_zero_competition_check(const BranchingMechanism& mech, const CompetitionFunction& g) {
  ConditionReport r;
  r.condition = "near_zero_competition";
  r.tolerance = 1e-12;
  Verdict v = Verdict::Satisfied;
  auto worse = [&v](Verdict w) {
    if (w == Verdict::Violated || v == Verdict::Violated) v = Verdict::Violated;
    else if (w == Verdict::Inconclusive) v = Verdict::Inconclusive;
  };
  r.add("c", mech.c());
  if (mech.c() != 0.0) worse(Verdict::Violated);

  std::optional<double> theta = g.theta();
  if (!theta && g.kind() == CompetitionFunction::Kind::Power && g.p() < 1.0) theta = g.p();
  if (!theta) {
    r.add("theta", 0.0, "no near-zero exponent declared for g");
    worse(g.is_zero() ? Verdict::Violated : Verdict::Inconclusive);
  } else {
    r.add("theta", *theta);
    std::vector<double> vals;
    for (int k = 1; k <= 40; ++k) {
      const double x = std::ldexp(1.0, -k);
      vals.push_back(g(x) * std::pow(x, -*theta));
    }
    r.add("g_x_pow_minus_theta_at_2^-40", vals.back());
    Verdict gv;
    switch (g.kind()) {
      case CompetitionFunction::Kind::Zero:
        gv = Verdict::Violated;
        break;
      case CompetitionFunction::Kind::Power:
      case CompetitionFunction::Kind::Logistic:
        gv = g.p() <= *theta ? Verdict::Satisfied : Verdict::Violated;
        break;
      default: {
        const std::size_t n = vals.size();
        const double last = vals.back(), back8 = vals[n - 8];
        bool decreasing = true;
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, vals[i]);
        for (std::size_t i = n - 7; i < n; ++i)
          if (!(vals[i] < vals[i - 1])) decreasing = false;
        if (decreasing && last < 1e-3 * peak) gv = Verdict::Violated;
        else if (last > r.tolerance && last >= 0.5 * back8) gv = Verdict::Satisfied;
        else gv = Verdict::Inconclusive;
      }
    }
    worse(gv);
  }
  const double C = inverse_square_bound(mech.mu());
  r.add("inverse_square_C", C);
  if (!(C > 0.0)) worse(Verdict::Violated);
  r.verdict = v;
  return r;
}

namespace {

ConditionReport large_jump_bound(const LevyMeasure& mu, double alpha) {
  ConditionReport r;
  r.condition = "large_jump_density_bound";
  r.tolerance = 0.0;
  r.add("alpha", alpha);
  auto set = [&r](bool ok, double c0) {
    r.verdict = ok ? Verdict::Satisfied : Verdict::Violated;
    r.add("c0", ok ? c0 : kInf);
  };
  switch (mu.kind()) {
    case LevyMeasure::Kind::None:
    case LevyMeasure::Kind::TruncatedStable:
      set(true, 0.0);
      break;
    case LevyMeasure::Kind::Stable:
    case LevyMeasure::Kind::Neveu:
      set(mu.beta() >= alpha, mu.C());
      break;
    case LevyMeasure::Kind::TemperedStable: {
      double sup = 0.0;
      for (double z = 1.0; z < 1e6; z *= 1.01)
        sup = std::max(sup, std::pow(z, alpha - mu.beta()) * std::exp(-mu.lambda0() * z));
      set(true, mu.C() * sup);
      break;
    }
    case LevyMeasure::Kind::FiniteAtoms: {
      bool ok = true;
      for (const Atom& a : mu.atom_list())
        if (a.z > 1.0) ok = false;
      set(ok, 0.0);
      break;
    }
    case LevyMeasure::Kind::Tabulated: {
      const double a = mu.tail_exponent();
      const DensityPoint& last = mu.table().back();
      double sup = mu.density(1.0);
      for (const DensityPoint& p : mu.table())
        if (p.z > 1.0) sup = std::max(sup, p.m * std::pow(p.z, 1.0 + alpha));
      sup = std::max(sup, last.m * std::pow(std::max(last.z, 1.0), 1.0 + alpha));
      set(a >= alpha, sup);
      break;
    }
  }
  return r;
}

}  // namespace

ConditionReport qsd_hypotheses_check(const BranchingMechanism& mech, const CompetitionFunction& g,
                                     const GrowthFunction& varphi, double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0, 2)");
  ConditionReport r;
  r.condition = "qsd_hypotheses";
  r.tolerance = 1e3;

  r.children.push_back(large_jump_bound(mech.mu(), alpha));

  ConditionReport phi;
  phi.condition = "varphi_reciprocal_integrable";
  const quad::Result q = quad::log_gauss_kronrod(
      [&](double x) { return 1.0 / (x * varphi(x)); }, 1.0, 1e12, quad::Options{1e-8, 1e-300, 2000});
  phi.add("integral_1_to_1e12", q.value);
  phi.add("exponent", varphi.exponent(), varphi.describe());
  phi.verdict = varphi.reciprocal_integrable() ? Verdict::Satisfied : Verdict::Violated;
  r.children.push_back(phi);

  ConditionReport growth;
  growth.condition = "growth_limit";
  growth.tolerance = 1e3;
  std::vector<double> ratios;
  for (int k = 1; k <= 40; ++k) ratios.push_back(growth_ratio(g, varphi, alpha, std::ldexp(1.0, k)));
  growth.add("ratio_at_2^32", ratios[31]);
  growth.add("ratio_at_2^40", ratios.back());
  growth.verdict = divergence_verdict(ratios, 1e3, 8);
  r.children.push_back(growth);

  ConditionReport branch;
  branch.condition = "grey_or_near_zero_competition";
  branch.children.push_back(grey_check(mech));
  branch.children.push_back(near_zero_competition_check(mech, g));
  const Verdict a = branch.children[0].verdict, b = branch.children[1].verdict;
  if (a == Verdict::Satisfied || b == Verdict::Satisfied) branch.verdict = Verdict::Satisfied;
  else if (a == Verdict::Violated && b == Verdict::Violated) branch.verdict = Verdict::Violated;
  else branch.verdict = Verdict::Inconclusive;
  r.children.push_back(branch);

  bool all = true, any_violated = false;
  for (const ConditionReport& c : r.children) {
    if (c.verdict != Verdict::Satisfied) all = false;
    if (c.verdict == Verdict::Violated) any_violated = true;
  }
  r.verdict = all ? Verdict::Satisfied : any_violated ? Verdict::Violated : Verdict::Inconclusive;
  return r;
}

}  // namespace cbc
