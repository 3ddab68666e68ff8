#include <cmath>
#include <vector>

#include <doctest.h>

#include "cbc/cbflow.hpp"
#include "cbc/rng.hpp"
#include "cbc/simulator.hpp"
#include "cbc/stats.hpp"

using namespace cbc;

namespace {

SimConfig base(double T, std::uint64_t seed = 1) {
  SimConfig c;
  c.T = T;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("noise-free linear decay") {
  SimConfig c = base(2.0);
  c.record_path = true;
  const auto p = simulate_path(BranchingMechanism::feller(1.0, 0.0), CompetitionFunction::zero(), 1.0, c);
  REQUIRE(p.t.size() > 10);
  for (std::size_t i = 0; i < p.t.size(); ++i) CHECK(std::abs(p.y[i] - std::exp(-p.t[i])) <= 1e-6);
}

TEST_CASE("noise-free logistic decay") {
  const auto p = simulate_path(BranchingMechanism::feller(0.0, 0.0), CompetitionFunction::power(1.0, 2.0), 1.0,
                               base(1.0));
  CHECK(std::abs(p.final_value - 0.5) <= 1e-5);
}

TEST_CASE("Laplace transform by Monte Carlo") {
  const auto r = mc_laplace_check(BranchingMechanism::feller(0.0, 1.0), CompetitionFunction::zero(), 1.0, 1.0, 1.0,
                                  20000, base(1.0, 3));
  CHECK(r.analytic == doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
  CHECK(std::abs(r.z) <= 3.5);
}

TEST_CASE("Laplace check at t = 0 is exact") {
  const auto r = mc_laplace_check(BranchingMechanism::feller(0.0, 1.0), CompetitionFunction::zero(), 1.3, 0.7, 0.0,
                                  100, base(1.0));
  CHECK(r.mc_mean == doctest::Approx(std::exp(-0.91)).epsilon(1e-14));
  CHECK(r.z == 0.0);
}

TEST_CASE("extinction frequency") {
  const auto paths = simulate_ensemble(BranchingMechanism::feller(0.0, 1.0), CompetitionFunction::zero(), 1.0,
                                       base(1.0, 5), 20000);
  std::size_t dead = 0;
  for (const auto& p : paths) dead += p.absorbed();
  const double ph = double(dead) / paths.size(), se = std::sqrt(ph * (1 - ph) / paths.size());
  CHECK(std::abs(ph - std::exp(-1.0)) <= 3.0 * se);
}

TEST_CASE("coupled pairs keep their order") {
  const BranchingMechanism ts{0.5, 0.5, LevyMeasure::truncated_stable(1.0, 1.5)};
  const auto g = CompetitionFunction::logistic(1.0);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    SimConfig c = base(1.0, 17);
    c.stream = i;
    CHECK(simulate_coupled_pair(ts, g, 2.0, 1.0, c).ordering_violations == 0);
  }
}

TEST_CASE("competition path stays below the pure branching path") {
  const auto m = BranchingMechanism::feller(0.0, 1.0);
  for (std::uint64_t i = 0; i < 200; ++i) {
    SimConfig c = base(1.0, 23);
    c.stream = i;
    c.record_path = true;
    const auto pr = simulate_coupled_pair(m, CompetitionFunction::zero(), CompetitionFunction::logistic(1.0), 1.0,
                                          1.0, c);
    CHECK(pr.ordering_violations == 0);
    CHECK(pr.lower.final_value <= pr.upper.final_value);
  }
}

TEST_CASE("identical starts give identical paths") {
  SimConfig c = base(1.0, 9);
  c.record_path = true;
  const auto pr = simulate_coupled_pair(BranchingMechanism{0.0, 1.0, LevyMeasure::truncated_stable(1.0, 1.5)},
                                        CompetitionFunction::logistic(1.0), 1.0, 1.0, c);
  REQUIRE(pr.upper.y.size() == pr.lower.y.size());
  for (std::size_t i = 0; i < pr.upper.y.size(); ++i) CHECK(pr.upper.y[i] == pr.lower.y[i]);
}

TEST_CASE("paths are reproducible from seed and stream") {
  const BranchingMechanism m{0.0, 0.5, LevyMeasure::truncated_stable(1.0, 1.5)};
  SimConfig c = base(0.5, 42);
  c.stream = 7;
  c.record_path = true;
  const auto a = simulate_path(m, CompetitionFunction::logistic(1.0), 3.0, c);
  const auto b = simulate_path(m, CompetitionFunction::logistic(1.0), 3.0, c);
  CHECK(a.y == b.y);
  c.stream = 8;
  CHECK(simulate_path(m, CompetitionFunction::logistic(1.0), 3.0, c).y != a.y);
}

TEST_CASE("ensembles do not depend on the thread count") {
  const auto m = BranchingMechanism::feller(0.0, 1.0);
  const auto a = simulate_ensemble(m, CompetitionFunction::zero(), 1.0, base(0.5, 2), 64, Exec{1});
  const auto b = simulate_ensemble(m, CompetitionFunction::zero(), 1.0, base(0.5, 2), 64, Exec{3});
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].final_value == b[i].final_value);
}

TEST_CASE("hitting the starting level takes no time") {
  const auto h = hitting_time(BranchingMechanism::feller(0.0, 1.0), CompetitionFunction::zero(), 1.0, 1.0, false,
                              base(1.0), 50);
  for (double t : h.times) CHECK(t == 0.0);
}

TEST_CASE("exit probabilities") {
  const std::vector<double> ts{0.01, 0.04, 0.16};
  const auto none = exit_probability_scan(BranchingMechanism::feller(0.0, 0.0), CompetitionFunction::zero(), 0.5, 2.0,
                                          0.9, 1.1, ts, 200, base(1.0));
  for (const auto& r : none.rows) CHECK(r.sup_p == 0.0);

  SimConfig c = base(1.0, 4);
  const auto small = exit_probability_scan(BranchingMechanism::feller(0.0, 1.0), CompetitionFunction::zero(), 0.5,
                                           2.0, 0.9, 1.1, {c.dt}, 2000, c);
  CHECK(small.rows[0].sup_p < 0.01);

  const auto scan = exit_probability_scan(BranchingMechanism::feller(0.0, 1.0), CompetitionFunction::zero(), 0.5, 2.0,
                                          0.9, 1.1, ts, 2000, c);
  // P(S < t) / sqrt(t) does not grow as t shrinks
  REQUIRE(scan.rows.back().ratio > 0.0);
  for (const auto& r : scan.rows) CHECK(r.ratio <= 3.0 * scan.rows.back().ratio);
}

TEST_CASE("jump sizes follow the normalized measure") {
  const double eps = 0.01;
  const JumpSampler js(LevyMeasure::truncated_stable(1.0, 1.5), eps);
  CHECK(js.rate() == doctest::Approx((std::pow(eps, -1.5) - 1.0) / 1.5));
  RandomStream rng(5, 0, 0);
  std::vector<double> z(40000);
  for (auto& v : z) v = js.sample(rng);
  // mean of z on (eps, 1] under z^-2.5: int z^-1.5 / int z^-2.5
  const double mean = (2.0 * (std::pow(eps, -0.5) - 1.0)) / js.rate();
  const MeanSe ms = mean_se(z);
  CHECK(std::abs(ms.mean - mean) <= 4.0 * ms.std_error);
  for (double v : z) CHECK((v > eps && v <= 1.0));
}

TEST_CASE("scheme coefficients") {
  const auto s = scheme_coefficients({0.0, 0.0, LevyMeasure::truncated_stable(1.0, 1.5)}, 0.01);
  CHECK(s.m_eps == doctest::Approx(2.0 * (std::pow(0.01, -0.5) - 1.0)));
  CHECK(s.sigma2 == doctest::Approx(std::pow(0.01, 0.5) / 0.5));
}

TEST_CASE("invalid configurations") {
  SimConfig c;
  c.eps = 2.0;
  CHECK_THROWS(c.validate());
  c = SimConfig{};
  c.dt = 0.0;
  CHECK_THROWS(c.validate());
}
