#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cubqmc/control_variates.hpp"
#include "cubqmc/experiments.hpp"
#include "cubqmc/models/asian.hpp"
#include "cubqmc/models/test_functions.hpp"

using namespace cubqmc;

namespace {

using Coefs = std::vector<std::complex<double>>;

Coefs random_coefs(std::size_t n, std::mt19937_64& eng, bool complex_valued) {
  std::normal_distribution<double> z;
  Coefs c(n);
  for (auto& x : c) x = {z(eng), complex_valued ? z(eng) : 0.0};
  return c;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Raw (f, g) ledger of the Asian pair at level m and the beta fitted as the engine does.
struct AsianLevel {
  CoefficientLedger raw;
  BetaFit fit;
};

AsianLevel asian_level(const AsianPathPayoffs& payoffs, Family family, std::uint64_t seed, int m, int r = 4) {
  auto raw = build_ledger(asian_pair_integrand(payoffs), make_generator(family, payoffs.option().steps, seed), m);
  const auto fc = signed_coefficients(family, raw[0].values);
  const auto gc = signed_coefficients(family, raw[1].values);
  auto fit = beta_qmc(fc, {gc}, beta_bins(m, r, raw[0].kappa_map));
  return {std::move(raw), std::move(fit)};
}

}  // namespace

TEST(BetaQmc, ControlEqualToIntegrandGivesOne) {
  std::mt19937_64 eng(1);
  for (bool cplx : {false, true}) {
    const auto f = random_coefs(1024, eng, cplx);
    const auto fit = beta_qmc(f, {f}, 10, 4);
    EXPECT_FALSE(fit.rank_deficient);
    EXPECT_NEAR(fit.beta[0], 1.0, 1e-14);
  }
}

TEST(BetaQmc, OrthogonalControlGivesZero) {
  // f lives on even bins and g on odd bins of the fitting range.
  Coefs f(256), g(256);
  for (std::size_t k = 0; k < 256; ++k) (k % 2 ? g : f)[k] = {1.0 + 0.01 * k, -0.5};
  const auto fit = beta_qmc(f, {g}, 8, 4);
  EXPECT_FALSE(fit.rank_deficient);
  EXPECT_EQ(fit.beta[0], 0.0);
}

TEST(BetaQmc, RecoversKnownCoefficientsFromNoisyData) {
  std::mt19937_64 eng(2);
  const int m = 12;
  const std::size_t n = std::size_t{1} << m;
  const auto g1 = random_coefs(n, eng, true), g2 = random_coefs(n, eng, true), noise = random_coefs(n, eng, true);
  Coefs f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = 0.7 * g1[k] - 1.3 * g2[k] + 1e-3 * noise[k];
  const auto fit = beta_qmc(f, {g1, g2}, m, 4);
  EXPECT_NEAR(fit.beta[0], 0.7, 1e-3);
  EXPECT_NEAR(fit.beta[1], -1.3, 1e-3);
}

TEST(BetaQmc, FitsOnlyTheHighWavenumberRange) {
  // Bins below 2^(m-r-1) disagree with beta = 2 and must be ignored.
  const int m = 10, r = 4;
  std::mt19937_64 eng(3);
  const auto g = random_coefs(1024, eng, false);
  Coefs f(1024);
  for (std::size_t k = 0; k < 1024; ++k) f[k] = k < 32 ? -5.0 * g[k] : 2.0 * g[k];
  EXPECT_NEAR(beta_qmc(f, {g}, m, r).beta[0], 2.0, 1e-13);
  const auto bins = beta_bins(m, r);
  EXPECT_EQ(bins.front(), 32u);
  EXPECT_EQ(bins.back(), 1023u);
  EXPECT_EQ(bins.size(), 1024u - 32u);
}

TEST(BetaQmc, BinsFollowKappaMap) {
  std::vector<std::uint64_t> map(16);
  for (std::size_t k = 0; k < 16; ++k) map[k] = 15 - k;
  const auto bins = beta_bins(4, 1, map);
  ASSERT_EQ(bins.size(), 12u);
  EXPECT_EQ(bins.front(), 11u);
  EXPECT_EQ(bins.back(), 0u);
  EXPECT_THROW(beta_bins(5, 1, map), InputError);
  Coefs f(8, {1.0, 0.0});
  const std::vector<std::uint64_t> bad{3, 9};
  EXPECT_THROW(beta_qmc(f, {f}, bad), InputError);
}

TEST(BetaQmc, RankDeficientFallsBackToZero) {
  Coefs f(64, {1.0, 0.0}), zero(64);
  auto fit = beta_qmc(f, {zero}, 6, 2);
  EXPECT_TRUE(fit.rank_deficient);
  EXPECT_EQ(fit.beta, std::vector<double>{0.0});
  std::mt19937_64 eng(4);
  const auto g = random_coefs(64, eng, true);
  fit = beta_qmc(f, {g, g}, 6, 2);
  EXPECT_TRUE(fit.rank_deficient);
  EXPECT_EQ(fit.beta, (std::vector<double>{0.0, 0.0}));
}

TEST(BetaQmc, RealOverloadMatchesComplex) {
  std::mt19937_64 eng(5);
  std::normal_distribution<double> z;
  std::vector<double> f(512), g(512);
  for (std::size_t k = 0; k < 512; ++k) {
    g[k] = z(eng);
    f[k] = 0.3 * g[k] + 0.1 * z(eng);
  }
  const auto a = beta_qmc(std::span<const double>(f), {g}, 9, 4);
  const Coefs fc(f.begin(), f.end()), gc(g.begin(), g.end());
  EXPECT_DOUBLE_EQ(a.beta[0], beta_qmc(fc, {gc}, 9, 4).beta[0]);
}

TEST(BetaQmc, LeastAbsoluteDeviationsIgnoresOutliers) {
  std::mt19937_64 eng(6);
  const auto g = random_coefs(1024, eng, false);
  Coefs f(1024);
  for (std::size_t k = 0; k < 1024; ++k) f[k] = 1.5 * g[k] + (k % 97 == 0 ? 50.0 : 0.0);
  const auto lad = beta_qmc_lad(f, {g}, 10, 4);
  EXPECT_NEAR(lad.beta[0], 1.5, 1e-3);
  EXPECT_GT(std::abs(beta_qmc(f, {g}, 10, 4).beta[0] - 1.5), std::abs(lad.beta[0] - 1.5));
}

TEST(BetaMc, Examples) {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u;
  const std::size_t n = 10000;
  std::vector<double> f(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = u(eng);
    g[i] = u(eng);
  }
  auto same = beta_mc(f, {f});
  EXPECT_NEAR(same.beta[0], 1.0, 1e-14);
  // Independent and equal variances: beta has standard deviation about 1/sqrt(n).
  EXPECT_LT(std::abs(beta_mc(f, {g}).beta[0]), 3.0 / std::sqrt(static_cast<double>(n)));
  const std::vector<double> constant(n, 2.0);
  EXPECT_TRUE(beta_mc(f, {constant}).rank_deficient);
  EXPECT_THROW(beta_mc(std::vector<double>{1.0}, {{1.0}}), InputError);
}

TEST(ControlVariateValues, UnbiasedIdentity) {
  std::mt19937_64 eng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> f(256), g1(256), g2(256);
    for (std::size_t i = 0; i < 256; ++i) {
      f[i] = u(eng);
      g1[i] = u(eng);
      g2[i] = u(eng);
    }
    const std::vector<double> beta{u(eng), u(eng)}, mu{u(eng), u(eng)};
    const auto h = control_variate_values(f, {g1, g2}, beta, mu);
    const double expected = beta[0] * (mu[0] - mean_of(g1)) + beta[1] * (mu[1] - mean_of(g2));
    EXPECT_NEAR(mean_of(h) - mean_of(f), expected, 1e-14);
  }
}

TEST(SpectrumReduction, FittedBetaNeverIncreasesTheFittedRange) {
  const AsianPathPayoffs payoffs(AsianOption{});
  for (Family fam : {Family::digital, Family::lattice}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto lvl = asian_level(payoffs, fam, seed, 10);
      const std::vector<double> mu_g{geometric_asian_price(payoffs.option())};
      const auto h = control_variate_values(lvl.raw[0].values, {lvl.raw[1].values}, lvl.fit.beta, mu_g);
      const auto fc = signed_coefficients(fam, lvl.raw[0].values);
      const auto hc = signed_coefficients(fam, h);
      double sf = 0.0, sh = 0.0;
      for (auto k : beta_bins(10, 4, lvl.raw[0].kappa_map)) {
        sf += std::norm(fc[k]);
        sh += std::norm(hc[k]);
      }
      EXPECT_LE(sh, sf);
    }
  }
}

TEST(AsianControlVariate, FirstLevelBetaIsTypical) {
  const AsianPathPayoffs payoffs(AsianOption{});
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto lvl = asian_level(payoffs, Family::digital, generator_seed(seed), 10);
    EXPECT_FALSE(lvl.fit.rank_deficient);
    EXPECT_GE(lvl.fit.beta[0], 0.9) << "seed " << seed;
    EXPECT_LE(lvl.fit.beta[0], 1.2) << "seed " << seed;
  }
}

TEST(AsianControlVariate, QmcAndMcCoefficientsDiffer) {
  const AsianPathPayoffs payoffs(AsianOption{});
  const auto lvl = asian_level(payoffs, Family::digital, generator_seed(42), 10);
  const auto mc = beta_mc(lvl.raw[0].values, {lvl.raw[1].values});
  EXPECT_NE(mc.beta[0], lvl.fit.beta[0]);
  EXPECT_GT(mc.beta[0], 0.5);
}

TEST(AsianControlVariate, SmallerTierSixForHBeta) {
  // Ledger dumps of f and h_beta at m = 10: tier m - r must shrink on nearly every seed.
  const AsianPathPayoffs payoffs(AsianOption{});
  const std::vector<double> mu_g{geometric_asian_price(payoffs.option())};
  std::size_t smaller = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto lvl = asian_level(payoffs, Family::digital, generator_seed(run_seed(42, seed)), 10);
    const auto h = control_variate_values(lvl.raw[0].values, {lvl.raw[1].values}, lvl.fit.beta, mu_g);
    const CoefficientLedger hl(Family::digital, {h});
    smaller += hl[0].tiers[6] < lvl.raw[0].tiers[6];
  }
  EXPECT_GE(smaller, 18u);
}

TEST(CvIntegrate, PerfectControlStopsImmediately) {
  const auto g = [](std::span<const double> x) { return x[0] * x[0] + std::sin(6.0 * x[1]); };
  const double mu_g = 1.0 / 3.0 + (1.0 - std::cos(6.0)) / 6.0;
  const Integrand joint{2, 2, [g](std::span<const double> x, std::span<double> y) { y[0] = y[1] = g(x); }};
  for (Family fam : {Family::digital, Family::lattice}) {
    const auto r = cv_integrate(joint, {{mu_g}}, {1e-8, 0.0}, ConeParams{}, fam, 3);
    EXPECT_EQ(r.result.n, 1024u);
    EXPECT_LE(r.result.estimates[0].err, 1e-12);
    EXPECT_NEAR(r.result.v_hat, mu_g, 1e-12);
    EXPECT_NEAR(r.fit.beta[0], 1.0, 1e-12);
  }
}

TEST(CvIntegrate, HighFrequencyResidualNeedsFewerPoints) {
  const std::uint64_t k = (std::uint64_t{1} << 20) + 5;
  const Integrand joint{2, 2, [k](std::span<const double> x, std::span<double> y) {
                          y[1] = x[0] * x[1];
                          y[0] = y[1] + 0.01 * walsh(k, x[0]);
                        }};
  const Integrand plain{2, 1, [k](std::span<const double> x, std::span<double> y) {
                          y[0] = x[0] * x[1] + 0.01 * walsh(k, x[0]);
                        }};
  // At 1e-4 the plain run sometimes already stops at the minimum 1024 points, which the CV
  // run cannot undercut; at 1e-5 the plain run always needs more.
  std::size_t strictly_fewer = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto gen = make_generator(Family::digital, 2, seed);
    const auto cv = cv_integrate(joint, {{0.25}}, {1e-4, 0.0}, ConeParams{}, gen, seed);
    const auto base = integrate_scalar(plain, {1e-4, 0.0}, ConeParams{}, gen, seed);
    EXPECT_LE(cv.result.n, base.n) << "seed " << seed;
    strictly_fewer += cv.result.n < base.n;
    EXPECT_LE(std::abs(cv.result.v_hat - 0.25), 1e-4);
    const auto cv5 = cv_integrate(joint, {{0.25}}, {1e-5, 0.0}, ConeParams{}, gen, seed);
    const auto base5 = integrate_scalar(plain, {1e-5, 0.0}, ConeParams{}, gen, seed);
    EXPECT_LT(cv5.result.n, base5.n) << "seed " << seed;
  }
  EXPECT_GE(strictly_fewer, 1u);
}

TEST(CvIntegrate, FreezeAndRefreshPolicies) {
  const AsianPathPayoffs payoffs(AsianOption{});
  const auto joint = asian_pair_integrand(payoffs);
  const std::vector<double> mu{geometric_asian_price(payoffs.option())};
  const auto gen = make_generator(Family::digital, 52, generator_seed(42));
  const auto frozen = cv_integrate(joint, {mu, BetaPolicy::freeze_after_first_level}, {0.01, 0.0}, ConeParams{}, gen);
  EXPECT_EQ(frozen.fit.beta, frozen.first_level_fit.beta);
  const auto refreshed = cv_integrate(joint, {mu, BetaPolicy::refresh_each_level}, {0.01, 0.0}, ConeParams{}, gen);
  EXPECT_EQ(refreshed.first_level_fit.beta, frozen.first_level_fit.beta);
  if (refreshed.result.n > 1024) EXPECT_NE(refreshed.fit.beta, refreshed.first_level_fit.beta);
  EXPECT_LE(std::abs(frozen.result.v_hat - refreshed.result.v_hat), 0.02);
}

TEST(CvIntegrate, InputValidation) {
  const auto f = product_integrand(2);
  EXPECT_THROW(cv_integrate(f, {{0.5}}, {0.01, 0.0}, ConeParams{}, Family::digital, 1), InputError);
  const Integrand joint{2, 2, [](std::span<const double> x, std::span<double> y) { y[0] = y[1] = x[0]; }};
  EXPECT_THROW(cv_integrate(joint, {{}}, {0.01, 0.0}, ConeParams{}, Family::digital, 1), InputError);
  EXPECT_THROW(cv_integrate(joint, {{NAN}}, {0.01, 0.0}, ConeParams{}, Family::digital, 1), InputError);
}

TEST(CvReport, CsvLayout) {
  const std::vector<CvComparisonRow> rows{{7, 16384, 4096, 1.0793, 0.009, 0.004}};
  std::ostringstream out;
  write_cv_report(out, rows);
  EXPECT_EQ(out.str(), "seed,n_plain,n_cv,beta,err_plain,err_cv\n7,16384,4096,1.0793,0.009,0.004\n");
}
