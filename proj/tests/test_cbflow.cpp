#include <cmath>
#include <vector>

#include <doctest.h>

#include "cbc/cbflow.hpp"
#include "cbc/mechanism.hpp"
#include "oracles.hpp"

using namespace cbc;

namespace {

// Stable(C, beta) with C = 1 / Gamma(-beta) and b = C / (beta - 1) has Psi = lambda^beta.
BranchingMechanism pure_power(double beta) {
  const double C = 1.0 / std::tgamma(-beta);
  return {C / (beta - 1.0), 0.0, LevyMeasure::stable(C, beta)};
}

}  // namespace

TEST_CASE("tuned stable mechanism has psi = lambda^beta") {
  const auto m = pure_power(1.5);
  for (double l : {0.1, 1.0, 7.0}) CHECK(psi_eval(m, l) == doctest::Approx(std::pow(l, 1.5)).epsilon(1e-9));
}

TEST_CASE("Feller flow closed form") {
  const auto m = BranchingMechanism::feller(0.0, 1.0);
  CHECK(std::abs(solve_v(m, 1.0, 1.0).at(1.0) - 0.5) <= 1e-8);
  const auto sub = BranchingMechanism::feller(0.7, 1.3);
  const auto sol = solve_v(sub, 2.5, 3.0);
  for (double t : {0.0, 0.1, 0.9, 2.0, 3.0})
    CHECK(sol.at(t) == doctest::Approx(oracle::feller_v(0.7, 1.3, 2.5, t)).epsilon(1e-8));
}

TEST_CASE("flow starts at lambda") {
  const auto m = BranchingMechanism{0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)};
  CHECK(solve_v(m, 3.0, 1.0).at(0.0) == 3.0);
}

TEST_CASE("power mechanism flow closed form") {
  const auto m = pure_power(1.5);
  CHECK(solve_v(m, 1.0, 2.0).at(2.0) == doctest::Approx(0.25).epsilon(1e-8));
  for (double l : {0.2, 5.0, 100.0})
    CHECK(solve_v(m, l, 1.5).at(1.5) == doctest::Approx(oracle::stable_v(1.5, l, 1.5)).epsilon(1e-8));
}

TEST_CASE("semigroup law") {
  const std::vector<BranchingMechanism> mechs{
      BranchingMechanism::feller(0.5, 1.0),
      {0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)},
      {0.2, 0.3, LevyMeasure::tempered_stable(1.0, 1.2, 1.0)},
      {0.0, 0.0, LevyMeasure::atoms({{1.0, 2.0}})},
  };
  for (const auto& m : mechs)
    for (double l : {0.5, 2.0})
      for (double s : {0.3, 1.0}) {
        const double vs = solve_v(m, l, s).at(s);
        for (double t : {0.2, 0.8}) {
          const double lhs = solve_v(m, l, t + s).at(t + s);
          CHECK(std::abs(lhs - solve_v(m, vs, t).at(t)) <= 1e-7 * std::abs(lhs));
        }
      }
}

TEST_CASE("Laplace transform") {
  const auto feller = BranchingMechanism::feller(0.0, 1.0);
  CHECK(laplace_transform(feller, 1.0, 1.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  CHECK(laplace_transform(feller, 0.0, 3.0, 2.0) == 1.0);
  CHECK(laplace_transform(feller, 1.5, 2.0, 0.0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-14));
}

TEST_CASE("extinction profile") {
  const auto feller = BranchingMechanism::feller(0.0, 1.0);
  CHECK(vbar(feller, 1.0).vbar == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(vbar(feller, 2.0).vbar == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(vbar(pure_power(1.5), 1.0).vbar == doctest::Approx(4.0).epsilon(1e-7));
  const auto sub = BranchingMechanism::feller(1.0, 2.0);
  // vbar_t = b / (c (e^{bt} - 1)) for Feller
  CHECK(vbar(sub, 0.5).vbar == doctest::Approx(1.0 / (2.0 * std::expm1(0.5))).epsilon(1e-7));
  CHECK(extinction_prob(feller, 1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  CHECK(extinction_prob(feller, 2.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  CHECK(extinction_prob(feller, 0.0, 1.0) == 1.0);
}

TEST_CASE("Grey-violating mechanisms never go extinct") {
  const auto e = vbar({1.0 - 0.57721566490153286, 0.0, LevyMeasure::neveu(1.0)}, 1.0);
  CHECK_FALSE(e.finite);
  CHECK(std::isinf(e.vbar));
}

TEST_CASE("vbar is the large-lambda limit of the flow") {
  const BranchingMechanism m{0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)};
  const double t = 0.5, vb = vbar(m, t).vbar;
  double prev = 0.0;
  for (double l : {1e2, 1e4, 1e6, 1e8}) {
    const double v = solve_v(m, l, t).at(t);
    CHECK(v <= vb * (1.0 + 1e-7));
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev == doctest::Approx(vb).epsilon(2e-3));
}

TEST_CASE("extinction profile is decreasing in t") {
  const auto prof = extinction_profile({0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)}, {0.25, 0.5, 1.0, 2.0});
  REQUIRE(prof.size() == 4);
  for (std::size_t i = 1; i < prof.size(); ++i) CHECK(prof[i].vbar < prof[i - 1].vbar);
}
