#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbc/mechanism.hpp"

namespace cbc {

enum class Verdict { Satisfied, Violated, Inconclusive };

const char* verdict_name(Verdict v);

struct Evidence {
  std::string name;
  double value;
  std::string note;
};

struct ConditionReport {
  std::string condition;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<Evidence> evidence;
  double tolerance = 0.0;
  std::vector<ConditionReport> children;

  bool satisfied() const { return verdict == Verdict::Satisfied; }
  void add(std::string name, double value, std::string note = {}) {
    evidence.push_back({std::move(name), value, std::move(note)});
  }
  std::optional<double> find(const std::string& name) const;
};

enum class Criticality { Subcritical, Critical, Supercritical, SupercriticalOrUndefined };

const char* criticality_name(Criticality c);

struct CriticalityResult {
  Criticality verdict;
  double psi_prime_zero;  // -inf for infinite-mean tails
};

CriticalityResult classify_criticality(const BranchingMechanism& mech, double tol = 1e-10);

ConditionReport grey_check(const BranchingMechanism& mech);
ConditionReport fluctuation_check(const BranchingMechanism& mech);
ConditionReport nontriviality_check(const BranchingMechanism& mech);
// c = 0, liminf g(x) x^{-theta} > 0 as x -> 0, mu >= C z^{-2} dz on (0, 1].
ConditionReport near_zero_competition_check(const BranchingMechanism& mech, const CompetitionFunction& g);
ConditionReport qsd_hypotheses_check(const BranchingMechanism& mech, const CompetitionFunction& g,
                                     const GrowthFunction& varphi, double alpha);

// Decision rule for limit claims along a grid: satisfied when the last value
// exceeds the threshold and the last `window` values increase; violated when
// the last `window` values do not increase; inconclusive otherwise.
Verdict divergence_verdict(const std::vector<double>& values, double threshold = 1e3, int window = 8);

// Growth ratio of the large-x hypothesis for the given alpha regime.
double growth_ratio(const CompetitionFunction& g, const GrowthFunction& varphi, double alpha, double x);

}  // namespace cbc
