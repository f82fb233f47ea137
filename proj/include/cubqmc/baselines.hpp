#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cubqmc/detail/bits.hpp"
#include "cubqmc/errors.hpp"
#include "cubqmc/integrand.hpp"
#include "cubqmc/sequences.hpp"

namespace cubqmc {

// Replication-based stopping heuristics. None of them is guaranteed: the claimed bound
// is a spread estimate of R replicate means and can be far too small.

enum class HeuristicStrategy { iid_replications, internal_replications, quasi_standard_error };

inline const char* to_string(HeuristicStrategy s) {
  switch (s) {
    case HeuristicStrategy::iid_replications: return "iid-replications";
    case HeuristicStrategy::internal_replications: return "internal-replications";
    case HeuristicStrategy::quasi_standard_error: return "quasi-standard-error";
  }
  return "?";
}

inline HeuristicStrategy parse_strategy(const std::string& s) {
  if (s == "iid-replications") return HeuristicStrategy::iid_replications;
  if (s == "internal-replications") return HeuristicStrategy::internal_replications;
  if (s == "quasi-standard-error") return HeuristicStrategy::quasi_standard_error;
  throw InputError("unknown heuristic strategy '" + s + "'");
}

struct HeuristicEstimate {
  double mean = 0.0;
  double claimed_bound = 0.0;
  std::vector<double> replicate_means;
  std::uint64_t evaluations = 0;
};

namespace detail {

inline double scalar_mean(const Integrand& f, const PointBatch& batch, std::size_t offset) {
  double y = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < batch.count; ++i) {
    f.evaluate(batch.row(i).subspan(offset, f.dimension), {&y, 1});
    if (!std::isfinite(y)) throw EvaluationError(batch.start + i, 0);
    sum += y;
  }
  return sum / static_cast<double>(batch.count);
}

}  // namespace detail

/// R replicate means of n points each, then mean and inflation * sd / sqrt(R):
///   iid-replications:      R independently randomized copies of the sequence;
///   internal-replications: R consecutive blocks of n points of one randomized sequence;
///   quasi-standard-error:  one R*d-dimensional sequence, replicate k uses coordinates
///                          [k d, (k+1) d).
inline HeuristicEstimate heuristic_baseline(const Integrand& f, Family family, HeuristicStrategy strategy,
                                            std::size_t replications, std::uint64_t n, std::uint64_t seed,
                                            double inflation = 1.2, const GeneratorSources& sources = {}) {
  if (f.outputs != 1) throw InputError("heuristic baselines take a single-output integrand");
  if (replications < 2) throw InputError("heuristic baselines need R >= 2");
  if (n == 0) throw InputError("heuristic baselines need n >= 1");
  if (!(inflation > 0.0)) throw InputError("inflation must be positive");
  HeuristicEstimate est;
  const std::size_t d = f.dimension;
  switch (strategy) {
    case HeuristicStrategy::iid_replications: {
      std::mt19937_64 seeds(seed);
      for (std::size_t k = 0; k < replications; ++k) {
        const auto gen = make_generator(family, d, seeds(), sources);
        est.replicate_means.push_back(detail::scalar_mean(f, gen.points(0, n, d), 0));
      }
      break;
    }
    case HeuristicStrategy::internal_replications: {
      const auto gen = make_generator(family, d, seed, sources);
      const auto capacity = std::uint64_t{1} << gen.max_level();
      if (replications * n > capacity)
        throw CapacityError("internal replications exceed the generator's index range");
      for (std::size_t k = 0; k < replications; ++k)
        est.replicate_means.push_back(detail::scalar_mean(f, gen.points(k * n, n, d), 0));
      break;
    }
    case HeuristicStrategy::quasi_standard_error: {
      const auto gen = make_generator(family, replications * d, seed, sources);
      const auto batch = gen.points(0, n, replications * d);
      for (std::size_t k = 0; k < replications; ++k)
        est.replicate_means.push_back(detail::scalar_mean(f, batch, k * d));
      break;
    }
  }
  const double r = static_cast<double>(replications);
  for (double m : est.replicate_means) est.mean += m;
  est.mean /= r;
  double ss = 0.0;
  for (double m : est.replicate_means) ss += (m - est.mean) * (m - est.mean);
  est.claimed_bound = inflation * std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
  est.evaluations = replications * n;
  return est;
}

}  // namespace cubqmc
