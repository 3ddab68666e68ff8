#include <cmath>
#include <vector>

#include <doctest.h>

#include "cbc/error.hpp"
#include "cbc/qsd.hpp"

using namespace cbc;

namespace {

SimConfig cfg(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  return c;
}

const BranchingMechanism kFellerLogistic = BranchingMechanism::feller(1.0, 1.0);
const CompetitionFunction kLogistic = CompetitionFunction::logistic(1.0);

}  // namespace

TEST_CASE("log-linear fit of exact data") {
  std::vector<double> t{0.5, 1.0, 1.5, 2.0, 2.5}, d;
  for (double s : t) d.push_back(0.8 * std::exp(-2.0 * s));
  const auto f = fit_log_linear(t, d, 1e-6);
  CHECK(f.lambda_hat == doctest::Approx(2.0).epsilon(5e-4));
  CHECK(f.C_hat == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(f.r2 > 0.999);
  CHECK(f.verdict == FitVerdict::Converged);
  CHECK(f.points_used == 5);
}

TEST_CASE("log-linear fit stops at the noise floor") {
  const auto f = fit_log_linear({0.25, 0.5, 1, 2}, {0.5, 0.25, 0.01, 0.2}, 0.05);
  CHECK(f.points_used == 2);
  CHECK(f.lambda_lower == doctest::Approx(-std::log(0.05) / 1.0));
  const auto flat = fit_log_linear({1, 2, 3, 4}, {0.01, 0.02, 0.01, 0.01}, 0.05);
  CHECK(flat.verdict == FitVerdict::AlreadyConverged);
  CHECK_THROWS_AS(fit_log_linear({1, 2, 3}, {1, 1, 1}, 0.1), DomainError);
}

TEST_CASE("identical initial laws are already converged") {
  const auto f = convergence_rate_fit(kFellerLogistic, kLogistic, InitialLaw::point(1.0), InitialLaw::point(1.0),
                                      {0.5, 1.0, 1.5, 2.0}, 1000, cfg(3));
  CHECK(f.verdict == FitVerdict::AlreadyConverged);
  // FV particles are correlated, so single points may sit slightly above 2 / sqrt(N)
  CHECK(f.d.front() <= f.noise_floor);
  for (double d : f.d) CHECK(d <= 2.0 * f.noise_floor);
}

TEST_CASE("naive law at t = 0 is the point mass") {
  const auto law = conditional_law_naive(kFellerLogistic, kLogistic, InitialLaw::point(1.0), 0.0, 500, 0, cfg(1));
  CHECK(law.survivors == 500);
  for (double x : law.dist.samples) CHECK(x == 1.0);
}

TEST_CASE("naive survivor fraction without competition") {
  const auto law = conditional_law_naive(BranchingMechanism::feller(0.0, 1.0), CompetitionFunction::zero(),
                                         InitialLaw::point(1.0), 1.0, 10000, 0, cfg(8));
  const double p = 1.0 - std::exp(-1.0);
  CHECK(std::abs(law.survivor_fraction() - p) <= 3.0 * std::sqrt(p * (1 - p) / 10000.0));
}

TEST_CASE("naive law needs survivors") {
  CHECK_THROWS_AS(conditional_law_naive(kFellerLogistic, kLogistic, InitialLaw::point(1.0), 10.0, 300, 0, cfg(1)),
                  DomainError);
}

TEST_CASE("Fleming-Viot without deaths") {
  // c = 0, mu = 0, b < 0: deterministic growth, no absorption
  const auto m = BranchingMechanism::feller(-0.5, 0.0);
  FvOptions o;
  o.keep_log = true;
  const auto law = fleming_viot(m, CompetitionFunction::zero(), InitialLaw::point(1.0), 1.0, 100, 0, cfg(1), o);
  CHECK(law.resurrections == 0);
  CHECK(law.log.empty());
  for (double x : law.dist.samples) CHECK(x == doctest::Approx(std::exp(0.5)).epsilon(1e-6));
}

TEST_CASE("Fleming-Viot log and positivity") {
  FvOptions o;
  o.keep_log = true;
  const auto run = fleming_viot_run(kFellerLogistic, kLogistic, InitialLaw::point(1.0), {1.0, 2.0}, 200, cfg(4), o);
  REQUIRE(run.snapshots.size() == 2);
  CHECK(run.resurrections > 0);
  CHECK(run.log.size() == run.resurrections);
  for (const auto& r : run.log) CHECK(r.particle != r.parent);
  for (const auto& s : run.snapshots)
    for (double x : s.states) CHECK(x > 0.0);
}

TEST_CASE("Fleming-Viot is reproducible") {
  const auto a = fleming_viot(kFellerLogistic, kLogistic, InitialLaw::point(1.0), 1.0, 100, 0, cfg(6));
  const auto b = fleming_viot(kFellerLogistic, kLogistic, InitialLaw::point(1.0), 1.0, 100, 0, cfg(6));
  CHECK(a.dist.samples == b.dist.samples);
}

TEST_CASE("fixed-point residual rejects a wrong law") {
  const auto far = EmpiricalDistribution::from_samples(std::vector<double>(1000, 100.0), 0);
  CHECK(qsd_fixed_point_residual(kFellerLogistic, CompetitionFunction::logistic(5.0), far, 1.0, 2000, cfg(2)) > 0.5);
}

TEST_CASE("fixed-point residual at t = 0 is at the noise floor") {
  const auto fv = fleming_viot(kFellerLogistic, kLogistic, InitialLaw::point(1.0), 5.0, 1000, 0, cfg(2));
  CHECK(qsd_fixed_point_residual(kFellerLogistic, kLogistic, fv.dist, 0.0, 4000, cfg(3)) <= 2.0 / std::sqrt(1000.0));
}

TEST_CASE("delta search for the square-root competition") {
  const BranchingMechanism neveu{1.0 - 0.57721566490153286, 0.0, LevyMeasure::neveu(1.0)};
  const auto d = search_delta(neveu, CompetitionFunction::power(1.0, 0.5), 0.25);
  REQUIRE(d);
  CHECK(*d > 0.0);
  CHECK(*d <= 0.25);
}

TEST_CASE("small-initial probe rejects diffusive mechanisms") {
  CHECK_THROWS_AS(small_initial_extinction_probe(kFellerLogistic, CompetitionFunction::power(1.0, 0.5), {0.1}, 1.0,
                                                 100, cfg(1)),
                  DomainError);
}
