#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cubqmc/cone.hpp"
#include "cubqmc/integrand.hpp"
#include "cubqmc/ledger.hpp"
#include "cubqmc/sequences.hpp"
#include "cubqmc/tolerance.hpp"

namespace cubqmc {

struct ValueBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// The quantity v(mu) to approximate from a p-vector of integrals mu, and the extreme
/// values of v over a box of possible mu (intersected with the domain of v).
struct SolutionFunctional {
  std::size_t outputs = 1;
  std::function<double(std::span<const double> mu)> value;
  std::function<ValueBounds(std::span<const IntervalEstimate> box)> bounds;
};

/// v(mu) = mu for a single integral: v_pm = mean +- err.
inline SolutionFunctional identity_functional() {
  return {1, [](std::span<const double> mu) { return mu[0]; },
          [](std::span<const IntervalEstimate> box) {
            return ValueBounds{box[0].mean - box[0].err, box[0].mean + box[0].err};
          }};
}

enum class Status { tolerance_met, budget_exhausted, cone_violation_flagged };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::tolerance_met: return "tolerance-met";
    case Status::budget_exhausted: return "budget-exhausted";
    case Status::cone_violation_flagged: return "cone-violation-flagged";
  }
  return "?";
}

struct CubatureResult {
  double v_hat = 0.0;
  double v_lower = 0.0;
  double v_upper = 0.0;
  std::uint64_t n = 0;
  int level = 0;
  std::vector<IntervalEstimate> estimates;
  double sup_tol = 0.0;
  /// budget-exhausted if the criterion was never met; otherwise cone-violation-flagged
  /// when any necessary-condition check failed along the way, else tolerance-met.
  Status status = Status::budget_exhausted;
  bool tolerance_met = false;
  std::vector<ConeViolation> violations;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  Family family = Family::digital;
  std::size_t dimension = 0;
};

/// Maps the ledger of the raw integrand data at one level to the ledger whose error
/// bound drives stopping (used by control variates). Identity when empty.
using LedgerTransform = std::function<CoefficientLedger(const CoefficientLedger& raw)>;

/// Adaptive cubature: m = l_star + r, l_star + r + 1, ... until the worst-case tolerance
/// over the box of possible integrals is <= 1 or the budget m_max (capped by the generator)
/// is exhausted. Every level is checked against all earlier levels for cone violations.
inline CubatureResult integrate(const Integrand& f, const SolutionFunctional& functional,
                                const Tolerance& tol, const ConeParams& cone,
                                const SequenceGenerator& gen, std::uint64_t seed = 0,
                                const LedgerTransform& transform = {}) {
  tol.validate();
  cone.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int m_budget = std::min(cone.m_max, gen.max_level());
  if (m_budget < cone.min_level())
    throw InputError("generator capacity 2^" + std::to_string(gen.max_level()) +
                     " is below the minimum sample size 2^" + std::to_string(cone.min_level()));

  CubatureResult res;
  res.seed = seed;
  res.family = gen.family();
  res.dimension = f.dimension;

  std::optional<CoefficientLedger> raw;
  std::vector<std::vector<TierSums>> history;  // per level, per output
  for (int m = cone.min_level(); m <= m_budget; ++m) {
    raw = raw ? build_ledger(f, gen, m, &*raw) : build_ledger(f, gen, m);
    const CoefficientLedger work = transform ? transform(*raw) : *raw;
    if (work.outputs() != functional.outputs)
      throw InputError("functional expects " + std::to_string(functional.outputs) +
                       " outputs, integrand provides " + std::to_string(work.outputs()));

    std::vector<TierSums> tiers;
    for (std::size_t k = 0; k < work.outputs(); ++k) tiers.push_back(work[k].tiers);
    for (const auto& previous : history) {
      for (std::size_t k = 0; k < tiers.size(); ++k) {
        const int top = std::min(previous[k].level(), m);
        for (int l = cone.l_star; l <= top; ++l) {
          if (auto v = necessary_condition(previous[k], tiers[k], l, cone, k))
            res.violations.push_back(*v);
          if (auto v = necessary_condition(tiers[k], previous[k], l, cone, k))
            res.violations.push_back(*v);
        }
      }
    }
    history.push_back(std::move(tiers));

    res.estimates = error_bound(work, cone);
    const ValueBounds b = functional.bounds(res.estimates);
    res.v_lower = b.lower;
    res.v_upper = b.upper;
    res.sup_tol = sup_tolerance(b.lower, b.upper, tol);
    res.v_hat = optimal_estimate(b.lower, b.upper, tol);
    res.n = work.size();
    res.level = m;
    if (res.sup_tol <= 1.0) {
      res.tolerance_met = true;
      break;
    }
  }
  if (!res.tolerance_met) res.status = Status::budget_exhausted;
  else if (!res.violations.empty()) res.status = Status::cone_violation_flagged;
  else res.status = Status::tolerance_met;
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline CubatureResult integrate(const Integrand& f, const SolutionFunctional& functional,
                                const Tolerance& tol, const ConeParams& cone, Family family,
                                std::uint64_t seed, const GeneratorSources& sources = {}) {
  return integrate(f, functional, tol, cone, make_generator(family, f.dimension, seed, sources),
                   seed);
}

/// Single integral, v(mu) = mu. The estimate is the shrinkage form
/// [(mu-err) w(mu+err) + (mu+err) w(mu-err)] / [w(mu+err) + w(mu-err)].
inline CubatureResult integrate_scalar(const Integrand& f, const Tolerance& tol,
                                       const ConeParams& cone, const SequenceGenerator& gen,
                                       std::uint64_t seed = 0) {
  if (f.outputs != 1) throw InputError("integrate_scalar needs a single-output integrand");
  return integrate(f, identity_functional(), tol, cone, gen, seed);
}

inline CubatureResult integrate_scalar(const Integrand& f, const Tolerance& tol,
                                       const ConeParams& cone, Family family, std::uint64_t seed,
                                       const GeneratorSources& sources = {}) {
  return integrate_scalar(f, tol, cone, make_generator(family, f.dimension, seed, sources), seed);
}

/// Plain sample mean over the first 2^m points (no stopping rule), e.g. for reference values.
inline std::vector<double> fixed_sample_mean(const Integrand& f, const SequenceGenerator& gen, int m) {
  const std::uint64_t n = std::uint64_t{1} << m;
  std::vector<double> sums(f.outputs, 0.0);
  std::vector<double> y(f.outputs);
  constexpr std::uint64_t chunk = 1u << 14;
  for (std::uint64_t start = 0; start < n; start += chunk) {
    const auto batch = gen.points(start, static_cast<std::size_t>(std::min(chunk, n - start)), f.dimension);
    for (std::size_t i = 0; i < batch.count; ++i) {
      f.evaluate(batch.row(i), y);
      for (std::size_t k = 0; k < f.outputs; ++k) {
        if (!std::isfinite(y[k])) throw EvaluationError(batch.start + i, k);
        sums[k] += y[k];
      }
    }
  }
  for (auto& s : sums) s /= static_cast<double>(n);
  return sums;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form; identical doubles print identically.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline constexpr const char* kResultCsvHeader = "seed,family,d,p,n,v_hat,sup_tol,status,wall_ms";

/// The experiment-log fields of one run. With `timing` false the wall time is written as 0
/// so that reruns are byte-identical.
inline std::string result_csv_fields(const CubatureResult& r, std::size_t outputs, bool timing = true) {
  return std::to_string(r.seed) + ',' + to_string(r.family) + ',' + std::to_string(r.dimension) + ',' +
         std::to_string(outputs) + ',' + std::to_string(r.n) + ',' + format_double(r.v_hat) + ',' +
         format_double(r.sup_tol) + ',' + to_string(r.status) + ',' + format_double(timing ? r.wall_ms : 0.0);
}

inline void write_result_csv_header(std::ostream& out) { out << kResultCsvHeader << '\n'; }

inline void write_result_csv_row(std::ostream& out, const CubatureResult& r, std::size_t outputs,
                                 bool timing = true) {
  out << result_csv_fields(r, outputs, timing) << '\n';
}

}  // namespace cubqmc
