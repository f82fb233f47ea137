#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "cubqmc/baselines.hpp"
#include "cubqmc/engine.hpp"
#include "cubqmc/experiments.hpp"
#include "cubqmc/models/sobol_indices.hpp"
#include "cubqmc/models/test_functions.hpp"
#include "cubqmc/selftest.hpp"
#include "oracles.hpp"

using namespace cubqmc;

namespace {

struct RandomCase {
  double lo, hi;
  Tolerance tol;
};

// Intervals on either side of and straddling zero; tolerances pure absolute, pure
// relative and hybrid.
RandomCase random_case(std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomCase c;
  c.lo = 4.0 * u(eng) - 2.0;
  c.hi = c.lo + std::exp(4.0 * u(eng) - 4.0);
  switch (eng() % 3) {
    case 0: c.tol = {std::exp(-6.0 * u(eng)), 0.0}; break;
    case 1: c.tol = {0.0, 0.99 * u(eng) + 0.001}; break;
    default: c.tol = {std::exp(-6.0 * u(eng)), 0.99 * u(eng)}; break;
  }
  return c;
}

}  // namespace

TEST(OptimalEstimate, Examples) {
  EXPECT_EQ(optimal_estimate(-1.0, 1.0, {1.0, 0.0}), 0.0);
  EXPECT_NEAR(optimal_estimate(2.0, 4.0, {0.0, 0.1}), 8.0 / 3.0, 1e-15);
  const Tolerance t{0.5, 0.5};
  const double vh = optimal_estimate(-1.0, 3.0, t);
  EXPECT_EQ(vh, 0.0);
  EXPECT_NEAR(tolerance_value(-1.0, vh, t), 4.0, 1e-12);
  EXPECT_NEAR(tolerance_value(3.0, vh, t), 4.0, 1e-12);
}

TEST(OptimalEstimate, ExamplesAgreeWithGridSearch) {
  EXPECT_NEAR(oracle::grid_best_estimate(2.0, 4.0, 0.0, 0.1, 3000, 300), 8.0 / 3.0, 1e-3);
  EXPECT_NEAR(oracle::grid_best_estimate(-1.0, 3.0, 0.5, 0.5, 4000, 400), 0.0, 1e-3);
}

TEST(OptimalEstimate, DegenerateZeroInterval) {
  EXPECT_EQ(optimal_estimate(0.0, 0.0, {0.0, 0.5}), 0.0);
  EXPECT_EQ(sup_tolerance(0.0, 0.0, {0.0, 0.5}), 0.0);
}

TEST(SupTolerance, Examples) {
  EXPECT_EQ(sup_tolerance(1.5, 1.5, {0.01, 0.0}), 0.0);
  EXPECT_EQ(sup_tolerance(-3.0, -3.0, {0.0, 0.3}), 0.0);
  // Scalar case with mean 1, err 0.1: 0.04 / 0.16.
  EXPECT_NEAR(sup_tolerance(0.9, 1.1, {0.0, 0.2}), 0.25, 1e-15);
  EXPECT_NEAR(optimal_estimate(0.9, 1.1, {0.0, 0.2}), 0.99, 1e-15);
}

TEST(SupTolerance, MatchesFineGrid) {
  std::mt19937_64 eng(31);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_case(eng);
    const double vh = optimal_estimate(c.lo, c.hi, c.tol);
    const double grid = oracle::grid_sup_tol(c.lo, c.hi, vh, c.tol.abs, c.tol.rel, 10000);
    const double closed = sup_tolerance(c.lo, c.hi, c.tol);
    EXPECT_NEAR(grid, closed, 1e-9 * std::max(1.0, closed)) << c.lo << ' ' << c.hi;
  }
}

TEST(EstimatorProperties, OptimalityEndpointsMembershipShrinkage) {
  std::mt19937_64 eng(32);
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_case(eng);
    const double vh = optimal_estimate(c.lo, c.hi, c.tol);
    const double sup = sup_tolerance(c.lo, c.hi, c.tol);
    const double t_lo = oracle::tol(c.lo, vh, c.tol.abs, c.tol.rel);
    const double t_hi = oracle::tol(c.hi, vh, c.tol.abs, c.tol.rel);
    const double scale = std::max(1.0, sup);
    EXPECT_NEAR(t_lo, t_hi, 1e-9 * scale);
    EXPECT_NEAR(t_lo, sup, 1e-9 * scale);
    EXPECT_GE(vh, c.lo);
    EXPECT_LE(vh, c.hi);
    const double mid = 0.5 * (c.lo + c.hi);
    EXPECT_LE(std::abs(vh), std::abs(mid) + 1e-15);
    if (vh != 0.0) EXPECT_EQ(std::signbit(vh), std::signbit(mid));
    if (i < 100) {
      // A coarse optimization oracle: no candidate beats the closed form.
      double best = 0.0;
      oracle::grid_best_estimate(c.lo, c.hi, c.tol.abs, c.tol.rel, 400, 400, &best);
      EXPECT_LE(sup, best + 1e-9 * scale);
    }
  }
}

TEST(EstimatorProperties, MonotoneStoppingOnSubBoxes) {
  std::mt19937_64 eng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 5000 && checked < 500; ++i) {
    const auto c = random_case(eng);
    if (sup_tolerance(c.lo, c.hi, c.tol) > 1.0) continue;
    // Shrink keeping each endpoint's sign.
    double lo = c.lo + u(eng) * (c.hi - c.lo);
    double hi = lo + u(eng) * (c.hi - lo);
    if (std::signbit(lo) != std::signbit(c.lo)) lo = c.lo;
    if (std::signbit(hi) != std::signbit(c.hi)) hi = c.hi;
    if (lo > hi) continue;
    ++checked;
    EXPECT_LE(sup_tolerance(lo, hi, c.tol), 1.0) << c.lo << ' ' << c.hi << " -> " << lo << ' ' << hi;
  }
  EXPECT_GT(checked, 100);
}

TEST(EstimatorProperties, SelftestSuitePasses) {
  const auto r = selftest_estimator();
  EXPECT_TRUE(r.passed()) << r;
  EXPECT_EQ(r.cases, 1000u);
}

TEST(ToleranceInput, Validation) {
  Tolerance both{0.01, 0.1, Tolerance::Criterion::both};
  try {
    both.validate();
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported"), std::string::npos);
  }
  EXPECT_THROW((Tolerance{0.01, 1.0}).validate(), InputError);
  EXPECT_THROW((Tolerance{0.0, 0.0}).validate(), InputError);
  EXPECT_THROW((Tolerance{-1.0, 0.1}).validate(), InputError);
  EXPECT_NO_THROW((Tolerance{0.0, 0.5}).validate());
  const auto f = product_integrand(2);
  EXPECT_THROW(integrate_scalar(f, {0.01, 1.0}, ConeParams{}, Family::digital, 1), InputError);
}

TEST(Integrate, ConstantStopsAtMinimumSize) {
  const auto f = scalar_integrand(4, [](std::span<const double>) { return 2.5; });
  for (Family fam : {Family::digital, Family::lattice}) {
    for (Tolerance t : {Tolerance{1e-8, 0.0}, Tolerance{0.0, 1e-6}, Tolerance{0.1, 0.1}}) {
      const auto r = integrate_scalar(f, t, ConeParams{}, fam, 3);
      EXPECT_EQ(r.n, 1024u);
      EXPECT_EQ(r.v_hat, 2.5);
      EXPECT_EQ(r.estimates[0].err, 0.0);
      EXPECT_EQ(r.status, Status::tolerance_met);
      EXPECT_TRUE(r.violations.empty());
    }
  }
}

TEST(Integrate, ProductOfTwoXOverThreeDimensions) {
  const auto f = scalar_integrand(3, [](std::span<const double> x) { return 8.0 * x[0] * x[1] * x[2]; });
  for (Family fam : {Family::digital, Family::lattice}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = integrate_scalar(f, {1e-3, 0.0}, ConeParams{}, fam, seed);
      EXPECT_TRUE(r.tolerance_met);
      EXPECT_LE(r.sup_tol, 1.0);
      EXPECT_LE(std::abs(r.v_hat - 1.0), 1e-3) << to_string(fam) << " seed " << seed;
      EXPECT_GE(r.v_hat, r.v_lower);
      EXPECT_LE(r.v_hat, r.v_upper);
    }
  }
}

TEST(Integrate, PureRelativeShrinkageForm) {
  const auto f = product_integrand(3, 0.5);
  for (Family fam : {Family::digital, Family::lattice}) {
    const auto r = integrate_scalar(f, {0.0, 1e-3}, ConeParams{}, fam, 11);
    const double mu = r.estimates[0].mean, err = r.estimates[0].err;
    EXPECT_NEAR(r.v_hat, std::max(mu * mu - err * err, 0.0) / mu, 1e-14);
    EXPECT_LE(std::abs(r.v_hat - 1.0), 1e-3);
  }
}

TEST(Integrate, CoverageOnSmoothFamily) {
  // Empirical form of the guarantee: the bound holds on every seed for a smooth integrand.
  const auto f = product_integrand(4, 0.8);
  const double exact = 1.0;
  for (Family fam : {Family::digital, Family::lattice}) {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      const auto r = integrate_scalar(f, {1e-4, 0.0}, ConeParams{}, fam, seed);
      EXPECT_LE(std::abs(exact - r.estimates[0].mean), r.estimates[0].err) << to_string(fam) << ' ' << seed;
      EXPECT_LE(oracle::tol(exact, r.v_hat, 1e-4, 0.0), 1.0);
    }
  }
}

TEST(Integrate, BudgetExhausted) {
  ConeParams cone;
  cone.m_max = 11;
  const auto r = integrate_scalar(product_integrand(3, 0.5), {1e-12, 0.0}, cone, Family::digital, 5);
  EXPECT_EQ(r.status, Status::budget_exhausted);
  EXPECT_FALSE(r.tolerance_met);
  EXPECT_EQ(r.n, 2048u);
  EXPECT_GT(r.sup_tol, 1.0);
}

TEST(Integrate, NarrowBumpOutsideTheConeIsMissed) {
  // No point of the first 1024 lands in a box of width 2^-16, so the data look constant:
  // the bound is 0 and the answer is wrong by the bump's mass. Nothing data-based can help.
  const auto r = integrate_scalar(bump_integrand(2), {1e-3, 0.0}, ConeParams{}, Family::digital, 5);
  EXPECT_EQ(r.n, 1024u);
  EXPECT_EQ(r.estimates[0].err, 0.0);
  EXPECT_NEAR(r.v_hat, 1.0, 1e-15);
}

TEST(Integrate, EvaluationErrorsPropagate) {
  const auto f = scalar_integrand(2, [](std::span<const double> x) { return x[0] < 0.5 ? 1.0 : INFINITY; });
  EXPECT_THROW(integrate_scalar(f, {0.01, 0.0}, ConeParams{}, Family::digital, 1), EvaluationError);
}

TEST(Integrate, BratleyFirstIndexSampleSize) {
  // Tabulated single run: n = 8192. Require every seed within one doubling.
  const auto f = sobol_index_integrand(bratley_g, 6, 1);
  const auto functional = sobol_index_functional();
  for (std::uint64_t seed = 42; seed < 52; ++seed) {
    const auto r = integrate(f, functional, {5e-3, 0.0}, ConeParams{},
                             make_generator(Family::digital, 12, generator_seed(seed)), seed);
    EXPECT_TRUE(r.tolerance_met);
    EXPECT_GE(r.n, 4096u) << "seed " << seed;
    EXPECT_LE(r.n, 16384u) << "seed " << seed;
  }
}

TEST(Integrate, AsianPlainSampleSize) {
  // Tabulated single run: 16384 points at abs tol 0.01 without control variates.
  ExperimentConfig cfg;
  const auto runs = run_asian(AsianOption{}, 5, false, cfg);
  for (const auto& r : runs) {
    EXPECT_TRUE(r.plain.tolerance_met);
    EXPECT_GE(r.plain.n, 8192u) << "seed " << r.seed;
    EXPECT_LE(r.plain.n, 32768u) << "seed " << r.seed;
  }
  EXPECT_EQ(runs[0].plain.n, 16384u);
}

TEST(ResultCsv, FieldsAndDeterminism) {
  const auto f = product_integrand(2, 0.5);
  const auto a = integrate_scalar(f, {1e-3, 0.0}, ConeParams{}, Family::lattice, 77);
  const auto b = integrate_scalar(f, {1e-3, 0.0}, ConeParams{}, Family::lattice, 77);
  const auto row = result_csv_fields(a, 1, false);
  EXPECT_EQ(row, result_csv_fields(b, 1, false));
  EXPECT_EQ(row.rfind(",0"), row.size() - 2);
  EXPECT_EQ(row.substr(0, 11), "77,lattice,");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(kResultCsvHeader, kResultCsvHeader + std::strlen(kResultCsvHeader), ','));
  EXPECT_NE(row.find(",tolerance-met,"), std::string::npos);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Baselines, ConstantHasZeroClaimedBound) {
  const auto f = scalar_integrand(3, [](std::span<const double>) { return -1.25; });
  for (auto s : {HeuristicStrategy::iid_replications, HeuristicStrategy::internal_replications,
                 HeuristicStrategy::quasi_standard_error}) {
    const auto e = heuristic_baseline(f, Family::digital, s, 8, 256, 9);
    EXPECT_EQ(e.mean, -1.25);
    EXPECT_EQ(e.claimed_bound, 0.0);
    EXPECT_EQ(e.evaluations, 8u * 256u);
  }
}

TEST(Baselines, IidReplicationsAgreeWithGuaranteedEngine) {
  ExperimentConfig cfg;
  cfg.tol = {1e-5, 0.0};
  const auto rows = run_baselines("smooth", HeuristicStrategy::iid_replications, 8, 1024, 20, cfg);
  std::size_t agree = 0;
  for (const auto& r : rows) agree += std::abs(r.heuristic.mean - r.guaranteed.v_hat) <= 3.0 * r.heuristic.claimed_bound;
  EXPECT_GE(agree, 19u);
}

TEST(Baselines, SpikyIntegrandBreaksTheClaimedBound) {
  ExperimentConfig cfg;
  const auto rows = run_baselines("spiky", HeuristicStrategy::iid_replications, 8, 1024, 20, cfg);
  std::size_t broken = 0;
  for (const auto& r : rows) broken += std::abs(r.heuristic.mean - *r.exact) > r.heuristic.claimed_bound;
  EXPECT_GE(broken, 1u);
}

TEST(Baselines, InputAndCapacityErrors) {
  const auto f = product_integrand(3);
  EXPECT_THROW(heuristic_baseline(f, Family::digital, HeuristicStrategy::iid_replications, 1, 64, 1), InputError);
  EXPECT_THROW(heuristic_baseline(f, Family::lattice, HeuristicStrategy::quasi_standard_error, 400, 64, 1),
               CapacityError);
  EXPECT_THROW(heuristic_baseline(f, Family::digital, HeuristicStrategy::quasi_standard_error, 8000, 64, 1),
               CapacityError);
  EXPECT_THROW(parse_strategy("bootstrap"), InputError);
}
