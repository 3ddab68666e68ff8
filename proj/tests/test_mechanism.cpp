#include <cmath>
#include <vector>

#include <doctest.h>

#include "cbc/conditions.hpp"
#include "cbc/error.hpp"
#include "cbc/mechanism.hpp"
#include "oracles.hpp"

using namespace cbc;

namespace {

const double kEulerGamma = 0.57721566490153286;

std::vector<BranchingMechanism> sample_mechanisms() {
  return {
      BranchingMechanism::feller(0.0, 1.0),
      BranchingMechanism::feller(-0.5, 2.0),
      {0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)},
      {0.3, 0.5, LevyMeasure::truncated_stable(2.0, 0.7)},
      {1.0 - kEulerGamma, 0.0, LevyMeasure::neveu(1.0)},
      {0.0, 0.2, LevyMeasure::stable(1.0, 1.3)},
      {0.1, 0.0, LevyMeasure::tempered_stable(1.0, 1.5, 2.0)},
      {0.0, 0.0, LevyMeasure::atoms({{0.5, 1.0}, {2.0, 0.5}})},
  };
}

}  // namespace

TEST_CASE("psi of the Feller mechanism is a polynomial") {
  CHECK(psi_eval(BranchingMechanism::feller(0.0, 1.0), 2.0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(psi_eval(BranchingMechanism::feller(1.5, 0.5), 2.0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("psi vanishes at zero") {
  for (const auto& m : sample_mechanisms()) CHECK(psi_eval(m, 0.0) == 0.0);
}

TEST_CASE("truncated stable psi against brute-force quadrature") {
  const BranchingMechanism m{0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)};
  const double lambda = 3.0;
  const double ref = oracle::simpson_log(
      [&](double z) { return oracle::exp_remainder(lambda * z) * std::pow(z, -2.5); }, 1e-40, 1.0, 400000);
  CHECK(std::abs(psi_eval(m, lambda) - ref) <= 1e-8 * std::abs(ref));
}

TEST_CASE("tempered stable psi against brute-force quadrature") {
  const BranchingMechanism m{0.0, 0.0, LevyMeasure::tempered_stable(1.0, 1.5, 2.0)};
  const double lambda = 1.7;
  auto dens = [](double z) { return std::pow(z, -2.5) * std::exp(-2.0 * z); };
  const double inner = oracle::simpson_log([&](double z) { return oracle::exp_remainder(lambda * z) * dens(z); },
                                           1e-40, 1.0, 400000);
  const double outer = oracle::simpson_log([&](double z) { return std::expm1(-lambda * z) * dens(z); }, 1.0, 60.0);
  CHECK(psi_eval(m, lambda) == doctest::Approx(inner + outer).epsilon(1e-8));
}

TEST_CASE("Neveu psi with b = 1 - gamma is lambda log lambda") {
  const BranchingMechanism m{1.0 - kEulerGamma, 0.0, LevyMeasure::neveu(1.0)};
  for (double l : {0.1, 0.5, 2.0, 10.0, 1e3}) CHECK(psi_eval(m, l) == doctest::Approx(l * std::log(l)).epsilon(1e-9));
}

TEST_CASE("closed forms agree with quadrature") {
  for (const auto& m : sample_mechanisms())
    for (double l : {0.01, 0.3, 1.0, 4.0, 50.0}) {
      const double a = psi_eval(m, l), q = psi_quadrature(m, l);
      CHECK(std::abs(a - q) <= 1e-7 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("psi is convex") {
  for (const auto& m : sample_mechanisms()) CHECK_NOTHROW(check_psi_convexity(m));
}

TEST_CASE("truncated stable psi dominates the stable lower bound") {
  // Psi(l) >= C Gamma(2-beta) / (beta (beta-1)) l^beta - C l / (beta-1) - mu[1, inf)
  for (double beta : {1.2, 1.5, 1.8}) {
    const double C = 1.3;
    const BranchingMechanism m{0.0, 0.0, LevyMeasure::truncated_stable(C, beta)};
    const double k = C * std::tgamma(2.0 - beta) / (beta * (beta - 1.0));
    for (double l = 0.01; l < 1e5; l *= 3.0)
      CHECK(psi_eval(m, l) >= k * std::pow(l, beta) - C * l / (beta - 1.0) - 1e-9 * (1.0 + l));
  }
}

TEST_CASE("criticality") {
  CHECK(classify_criticality(BranchingMechanism::feller(1.0, 1.0)).verdict == Criticality::Subcritical);
  CHECK(classify_criticality(BranchingMechanism::feller(0.0, 1.0)).verdict == Criticality::Critical);
  const auto r = classify_criticality({0.0, 0.0, LevyMeasure::atoms({{2.0, 1.0}})});
  CHECK(r.verdict == Criticality::Supercritical);
  CHECK(r.psi_prime_zero == doctest::Approx(-2.0).epsilon(1e-12));
  // Neveu: infinite-mean tail
  const auto n = classify_criticality({0.0, 0.0, LevyMeasure::neveu(1.0)});
  CHECK(n.verdict == Criticality::SupercriticalOrUndefined);
}

TEST_CASE("Grey condition") {
  CHECK(grey_check(BranchingMechanism::feller(0.0, 1.0)).verdict == Verdict::Satisfied);
  CHECK(grey_check({1.0 - kEulerGamma, 0.0, LevyMeasure::neveu(1.0)}).verdict == Verdict::Violated);
  CHECK(grey_check({0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)}).verdict == Verdict::Satisfied);
  CHECK(grey_check({0.0, 0.0, LevyMeasure::atoms({{1.0, 1.0}})}).verdict == Verdict::Violated);
  CHECK(grey_check(BranchingMechanism::feller(1.0, 0.0)).verdict == Verdict::Violated);
  // beta <= 1: Psi grows at most like lambda^beta log, G diverges
  CHECK(grey_check({0.0, 0.0, LevyMeasure::truncated_stable(1.0, 0.8)}).verdict == Verdict::Violated);
}

TEST_CASE("fluctuation condition") {
  const auto r = fluctuation_check({0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)});
  CHECK(r.verdict == Verdict::Satisfied);
  CHECK(*r.find("C") == doctest::Approx(1.0));
  CHECK(*r.find("beta") == doctest::Approx(1.5));
  CHECK(fluctuation_check(BranchingMechanism::feller(0.0, 1.0)).verdict == Verdict::Violated);
  CHECK(fluctuation_check({0.0, 0.0, LevyMeasure::atoms({{0.5, 1.0}})}).verdict == Verdict::Violated);
}

TEST_CASE("nontriviality condition") {
  CHECK(nontriviality_check(BranchingMechanism::feller(0.0, 1.0)).verdict == Verdict::Satisfied);
  CHECK(nontriviality_check({0.0, 0.0, LevyMeasure::atoms({{0.5, 1.0}})}).verdict == Verdict::Violated);
  CHECK(nontriviality_check({0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.2)}).verdict == Verdict::Satisfied);
  CHECK(nontriviality_check({0.0, 0.0, LevyMeasure::truncated_stable(1.0, 0.8)}).verdict == Verdict::Violated);
}

TEST_CASE("hypotheses for the quasi-stationary limit") {
  const auto feller = BranchingMechanism::feller(1.0, 1.0);
  const auto phi = GrowthFunction::log_power(2.0);
  CHECK(qsd_hypotheses_check(feller, CompetitionFunction::logistic(1.0), phi, 1.5).verdict == Verdict::Satisfied);
  CHECK(qsd_hypotheses_check(feller, CompetitionFunction::zero(), phi, 1.5).verdict == Verdict::Violated);
}

TEST_CASE("near-zero competition condition") {
  const BranchingMechanism neveu{1.0 - kEulerGamma, 0.0, LevyMeasure::neveu(1.0)};
  const auto r = near_zero_competition_check(neveu, CompetitionFunction::power(1.0, 0.5));
  CHECK(r.verdict == Verdict::Satisfied);
  CHECK(*r.find("theta") == doctest::Approx(0.5));
  CHECK(near_zero_competition_check(neveu, CompetitionFunction::power(1.0, 2.0)).verdict != Verdict::Satisfied);
}

TEST_CASE("competition functions") {
  const auto g = CompetitionFunction::logistic(2.0);
  CHECK(g(0.0) == 0.0);
  CHECK(g(3.0) == doctest::Approx(18.0));
  const auto t = CompetitionFunction::tabulated({{1.0, 1.0}, {2.0, 3.0}});
  CHECK(t(0.5) == doctest::Approx(0.5));
  CHECK(t(1.5) == doctest::Approx(2.0));
  CHECK(t(3.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(CompetitionFunction::tabulated({{1.0, 2.0}, {2.0, 1.0}}), DomainError);
  CHECK_THROWS_AS(CompetitionFunction::power(-1.0, 2.0), DomainError);
}

TEST_CASE("Levy measure validation") {
  CHECK_THROWS_AS(LevyMeasure::atoms({{1.0, -1.0}}), DomainError);
  CHECK_THROWS_AS(LevyMeasure::truncated_stable(1.0, 2.5), DomainError);
  CHECK_THROWS_AS(BranchingMechanism(0.0, -1.0, LevyMeasure::none()), DomainError);
  const auto ts = LevyMeasure::truncated_stable(1.0, 1.5);
  CHECK(ts.tail_mass(0.25) == doctest::Approx((std::pow(0.25, -1.5) - 1.0) / 1.5));
  CHECK(ts.first_moment(0.25, 1.0) == doctest::Approx(2.0 * (1.0 / std::sqrt(0.25) - 1.0)));
}
