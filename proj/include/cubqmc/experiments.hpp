#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cubqmc/baselines.hpp"
#include "cubqmc/control_variates.hpp"
#include "cubqmc/engine.hpp"
#include "cubqmc/models/asian.hpp"
#include "cubqmc/models/mvn.hpp"
#include "cubqmc/models/sobol_indices.hpp"
#include "cubqmc/models/test_functions.hpp"

namespace cubqmc {

/// Resolved settings shared by every experiment command.
struct ExperimentConfig {
  Family family = Family::digital;
  Tolerance tol{0.01, 0.0};
  ConeParams cone;
  std::uint64_t seed = 42;
  GeneratorSources sources;
  bool timing = true;

  void validate() const {
    tol.validate();
    cone.validate();
  }
};

/// Seed of run k of a command: seed XOR k.
inline std::uint64_t run_seed(std::uint64_t seed, std::uint64_t run) { return seed ^ run; }

/// Decorrelate the generator randomization from other uses of a run seed.
inline std::uint64_t generator_seed(std::uint64_t s) { return s * 0x9E3779B97F4A7C15ull + 0x7F4A7C15ull; }

inline std::string config_csv_header() { return "abs_tol,rel_tol,l_star,r,C_scale,rho_scale,m_max"; }

inline std::string config_csv_fields(const ExperimentConfig& c) {
  return format_double(c.tol.abs) + ',' + format_double(c.tol.rel) + ',' + std::to_string(c.cone.l_star) +
         ',' + std::to_string(c.cone.r) + ',' + format_double(c.cone.c_scale) + ',' +
         format_double(c.cone.rho_scale) + ',' + std::to_string(c.cone.m_max);
}

// ---------------------------------------------------------------------------
// Multivariate normal probabilities
// ---------------------------------------------------------------------------

struct MvnRun {
  std::size_t run = 0;
  std::size_t d = 0;  // dimension of the probability (the integrand has max(d-1, 1))
  double sigma = 0.0;
  std::vector<double> upper;
  double mu = 0.0;    // one-dimensional reduction
  double tol_value = 0.0;
  CubatureResult result;
  int resampled = 0;
};

/// A random equicorrelated instance: sigma ~ U[0,1), d = floor(d_cap^D) with D ~ U[0,1),
/// b_j ~ U[0, sqrt(d)]. With `force_d` the dimension is fixed instead.
inline MvnRun mvn_instance(std::uint64_t seed, std::size_t d_cap, std::optional<std::size_t> force_d = {}) {
  std::mt19937_64 eng(seed);
  MvnRun run;
  do {
    run.sigma = detail::uniform01(eng);
    if (run.sigma >= 1.0) ++run.resampled;
  } while (run.sigma >= 1.0);
  const double big_d = detail::uniform01(eng);
  run.d = force_d ? *force_d
                  : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(d_cap), big_d))));
  run.upper.resize(run.d);
  for (auto& b : run.upper) b = detail::uniform01(eng) * std::sqrt(static_cast<double>(run.d));
  run.mu = mvn_equicorrelated_oracle(run.sigma, run.upper);
  return run;
}

inline std::vector<MvnRun> run_mvn(std::size_t runs, std::size_t d_cap, const ExperimentConfig& cfg,
                                   std::optional<std::size_t> force_d = {}) {
  cfg.validate();
  if (d_cap < 1) throw InputError("d_cap must be >= 1");
  std::vector<MvnRun> out;
  for (std::size_t k = 0; k < runs; ++k) {
    const auto s = run_seed(cfg.seed, k);
    MvnRun run = mvn_instance(s, d_cap, force_d);
    run.run = k;
    const auto f = genz_integrand(equicorrelated_problem(run.sigma, run.upper));
    run.result = integrate_scalar(f, cfg.tol, cfg.cone,
                                  make_generator(cfg.family, f.dimension, generator_seed(s), cfg.sources), s);
    run.tol_value = tolerance_value(run.mu, run.result.v_hat, cfg.tol);
    out.push_back(std::move(run));
  }
  return out;
}

inline void write_mvn_csv(std::ostream& out, const std::vector<MvnRun>& runs, const ExperimentConfig& cfg) {
  out << "run," << kResultCsvHeader << ",mvn_d,sigma,mu,tol," << config_csv_header() << '\n';
  for (const auto& r : runs)
    out << r.run << ',' << result_csv_fields(r.result, 1, cfg.timing) << ',' << r.d << ','
        << format_double(r.sigma) << ',' << format_double(r.mu) << ',' << format_double(r.tol_value) << ','
        << config_csv_fields(cfg) << '\n';
}

inline double success_fraction(const std::vector<MvnRun>& runs) {
  if (runs.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : runs) ok += r.tol_value <= 1.0;
  return static_cast<double>(ok) / static_cast<double>(runs.size());
}

// ---------------------------------------------------------------------------
// Sobol' indices of the Bratley function
// ---------------------------------------------------------------------------

/// Reference first-order indices as tabulated to four decimals.
inline constexpr std::array<double, 6> kBratleyReferenceIndices = {0.6529, 0.1791, 0.0370,
                                                                   0.0133, 0.0015, 0.0015};

struct SobolIndexRow {
  std::size_t j = 0;
  double reference = 0.0;
  double plug_in = 0.0;       // v(mu_hat)
  double tol_optimal = 0.0;   // tol(v, v_hat)
  double tol_plug_in = 0.0;   // tol(v, v(mu_hat))
  CubatureResult result;
};

inline std::vector<SobolIndexRow> run_sobol_indices(const ExperimentConfig& cfg) {
  cfg.validate();
  constexpr std::size_t d = 6;
  std::vector<SobolIndexRow> out;
  const auto functional = sobol_index_functional();
  for (std::size_t j = 1; j <= d; ++j) {
    const auto f = sobol_index_integrand(bratley_g, d, j);
    SobolIndexRow row;
    row.j = j;
    row.reference = kBratleyReferenceIndices[j - 1];
    row.result = integrate(f, functional, cfg.tol, cfg.cone,
                           make_generator(cfg.family, f.dimension, generator_seed(cfg.seed), cfg.sources), cfg.seed);
    const std::vector<double> mu{row.result.estimates[0].mean, row.result.estimates[1].mean,
                                 row.result.estimates[2].mean};
    row.plug_in = functional.value(mu);
    row.tol_optimal = tolerance_value(row.reference, row.result.v_hat, cfg.tol);
    row.tol_plug_in = tolerance_value(row.reference, row.plug_in, cfg.tol);
    out.push_back(std::move(row));
  }
  return out;
}

inline void write_sobol_csv(std::ostream& out, const std::vector<SobolIndexRow>& rows, const ExperimentConfig& cfg) {
  out << "j," << kResultCsvHeader << ",v_ref,v_plug_in,tol_v_hat,tol_plug_in," << config_csv_header() << '\n';
  for (const auto& r : rows)
    out << r.j << ',' << result_csv_fields(r.result, 3, cfg.timing) << ',' << format_double(r.reference) << ','
        << format_double(r.plug_in) << ',' << format_double(r.tol_optimal) << ','
        << format_double(r.tol_plug_in) << ',' << config_csv_fields(cfg) << '\n';
}

// ---------------------------------------------------------------------------
// Asian option with and without the geometric control variate
// ---------------------------------------------------------------------------

struct AsianRun {
  std::uint64_t seed = 0;
  CubatureResult plain;
  std::optional<CvResult> cv;
};

/// Plain sample mean of the arithmetic payoff over 2^m points of one randomization.
inline double asian_reference(const AsianOption& option, int m, Family family, std::uint64_t seed,
                              const GeneratorSources& sources = {}) {
  const AsianPathPayoffs payoffs(option);
  const auto f = asian_integrand(payoffs, AsianPayoff::arithmetic_call);
  return fixed_sample_mean(f, make_generator(family, f.dimension, seed, sources), m)[0];
}

inline std::vector<AsianRun> run_asian(const AsianOption& option, std::size_t seeds, bool with_cv,
                                       const ExperimentConfig& cfg) {
  cfg.validate();
  const AsianPathPayoffs payoffs(option);
  const auto arithmetic = asian_integrand(payoffs, AsianPayoff::arithmetic_call);
  const auto pair = asian_pair_integrand(payoffs);
  const ControlVariateSpec spec{{geometric_asian_price(option)}, BetaPolicy::freeze_after_first_level};
  std::vector<AsianRun> out;
  for (std::size_t k = 0; k < seeds; ++k) {
    AsianRun run;
    run.seed = run_seed(cfg.seed, k);
    const auto gen = make_generator(cfg.family, option.steps, generator_seed(run.seed), cfg.sources);
    run.plain = integrate_scalar(arithmetic, cfg.tol, cfg.cone, gen, run.seed);
    if (with_cv) run.cv = cv_integrate(pair, spec, cfg.tol, cfg.cone, gen, run.seed);
    out.push_back(std::move(run));
  }
  return out;
}

inline void write_asian_csv(std::ostream& out, const std::vector<AsianRun>& runs, double reference,
                            const ExperimentConfig& cfg) {
  out << "method," << kResultCsvHeader << ",beta,err,abs_error_vs_reference," << config_csv_header() << '\n';
  for (const auto& r : runs) {
    out << "plain," << result_csv_fields(r.plain, 1, cfg.timing) << ",0," << format_double(r.plain.estimates[0].err)
        << ',' << format_double(std::abs(r.plain.v_hat - reference)) << ',' << config_csv_fields(cfg) << '\n';
    if (r.cv)
      out << "cv," << result_csv_fields(r.cv->result, 1, cfg.timing) << ',' << format_double(r.cv->fit.beta[0])
          << ',' << format_double(r.cv->result.estimates[0].err) << ','
          << format_double(std::abs(r.cv->result.v_hat - reference)) << ',' << config_csv_fields(cfg) << '\n';
  }
}

inline std::vector<CvComparisonRow> cv_comparison(const std::vector<AsianRun>& runs) {
  std::vector<CvComparisonRow> rows;
  for (const auto& r : runs) {
    if (!r.cv) continue;
    rows.push_back({r.seed, r.plain.n, r.cv->result.n, r.cv->fit.beta[0], r.plain.estimates[0].err,
                    r.cv->result.estimates[0].err});
  }
  return rows;
}

/// Coefficient magnitudes of f and of h_beta at level m for one randomization, as the
/// ledger CSV with outputs 0 (f) and 1 (h_beta). Returns the fitted beta.
inline double write_asian_spectra(std::ostream& out, const AsianOption& option, int m, Family family,
                                  std::uint64_t seed, int r = 4, const GeneratorSources& sources = {}) {
  const AsianPathPayoffs payoffs(option);
  const auto pair = asian_pair_integrand(payoffs);
  const auto raw = build_ledger(pair, make_generator(family, option.steps, seed, sources), m);
  const auto fc = signed_coefficients(family, raw[0].values);
  const auto gc = signed_coefficients(family, raw[1].values);
  const auto fit = beta_qmc(fc, {gc}, beta_bins(m, r, raw[0].kappa_map));
  const std::vector<double> mu_g{geometric_asian_price(option)};
  std::vector<std::vector<double>> g{raw[1].values};
  const CoefficientLedger both(family, {raw[0].values, control_variate_values(raw[0].values, g, fit.beta, mu_g)});
  write_ledger_csv(out, both);
  return fit.beta[0];
}

// ---------------------------------------------------------------------------
// Heuristic baselines against the guaranteed engine
// ---------------------------------------------------------------------------

struct NamedIntegrand {
  Integrand f;
  std::optional<double> exact;
};

/// "constant", "smooth" (product, d = 3), "spiky" (product plus high Walsh terms, d = 3),
/// "bump" (narrow box in x_1, d = 2).
inline NamedIntegrand named_integrand(const std::string& name) {
  if (name == "constant") return {scalar_integrand(2, [](std::span<const double>) { return 7.0; }), 7.0};
  if (name == "smooth") return {product_integrand(3, 0.5), 1.0};
  if (name == "spiky") return {spiky_integrand(3).integrand, 1.0};
  if (name == "bump") return {bump_integrand(2), 1.1};
  throw InputError("unknown integrand '" + name + "' (expected constant, smooth, spiky or bump)");
}

struct BaselineRow {
  std::uint64_t seed = 0;
  HeuristicEstimate heuristic;
  CubatureResult guaranteed;
  std::optional<double> exact;
};

inline std::vector<BaselineRow> run_baselines(const std::string& integrand, HeuristicStrategy strategy,
                                              std::size_t replications, std::uint64_t n, std::size_t seeds,
                                              const ExperimentConfig& cfg, double inflation = 1.2) {
  cfg.validate();
  const auto named = named_integrand(integrand);
  std::vector<BaselineRow> out;
  for (std::size_t k = 0; k < seeds; ++k) {
    BaselineRow row;
    row.seed = run_seed(cfg.seed, k);
    row.exact = named.exact;
    row.heuristic = heuristic_baseline(named.f, cfg.family, strategy, replications, n, generator_seed(row.seed),
                                       inflation, cfg.sources);
    row.guaranteed = integrate_scalar(
        named.f, cfg.tol, cfg.cone, make_generator(cfg.family, named.f.dimension, generator_seed(row.seed), cfg.sources),
        row.seed);
    out.push_back(std::move(row));
  }
  return out;
}

inline void write_baselines_csv(std::ostream& out, const std::vector<BaselineRow>& rows, const std::string& integrand,
                                HeuristicStrategy strategy, std::size_t replications, std::uint64_t n,
                                double inflation, const ExperimentConfig& cfg) {
  out << "integrand,strategy,R,n_per_replicate,inflation," << kResultCsvHeader
      << ",err,heuristic_mean,heuristic_claimed_bound,exact,heuristic_true_error,guaranteed_true_error,"
      << config_csv_header() << '\n';
  for (const auto& r : rows) {
    out << integrand << ',' << to_string(strategy) << ',' << replications << ',' << n << ',' << format_double(inflation)
        << ',' << result_csv_fields(r.guaranteed, 1, cfg.timing) << ','
        << format_double(r.guaranteed.estimates[0].err) << ',' << format_double(r.heuristic.mean) << ','
        << format_double(r.heuristic.claimed_bound) << ',';
    if (r.exact)
      out << format_double(*r.exact) << ',' << format_double(std::abs(r.heuristic.mean - *r.exact)) << ','
          << format_double(std::abs(r.guaranteed.v_hat - *r.exact));
    else
      out << ",,";
    out << ',' << config_csv_fields(cfg) << '\n';
  }
}

}  // namespace cubqmc
