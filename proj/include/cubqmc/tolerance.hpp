#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cubqmc/errors.hpp"

namespace cubqmc {

/// Hybrid error criterion: met when |v - v_hat| <= max(abs, rel * |v|).
struct Tolerance {
  enum class Criterion {
    either,  // max(abs, rel|v|): the supported hybrid criterion
    both,    // min(abs, rel|v|): rejected
  };

  double abs = 0.0;
  double rel = 0.0;
  Criterion criterion = Criterion::either;

  void validate() const {
    if (criterion == Criterion::both)
      throw InputError(
          "unsupported tolerance mode: requiring both absolute and relative tolerances "
          "(min criterion) is not implemented");
    if (!(abs >= 0.0) || !std::isfinite(abs)) throw InputError("absolute tolerance must be >= 0");
    if (!(rel >= 0.0 && rel < 1.0)) throw InputError("relative tolerance must be in [0, 1)");
    if (abs == 0.0 && rel == 0.0)
      throw InputError("absolute and relative tolerances cannot both be zero");
  }

  /// Allowed error at true value v.
  double width(double v) const { return std::max(abs, rel * std::abs(v)); }
};

/// tol(v, v_hat) = (v - v_hat)^2 / max(abs^2, rel^2 v^2). A value <= 1 meets the criterion.
inline double tolerance_value(double v, double v_hat, const Tolerance& tol) {
  const double w = tol.width(v);
  const double diff = v - v_hat;
  if (w == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (diff * diff) / (w * w);
}

/// The estimate minimizing the worst-case tolerance over [v_lower, v_upper]: the
/// width-weighted combination of the endpoints. Always lies in the interval and shrinks
/// the midpoint toward zero.
inline double optimal_estimate(double v_lower, double v_upper, const Tolerance& tol) {
  const double w_upper = tol.width(v_upper);
  const double w_lower = tol.width(v_lower);
  const double denom = w_upper + w_lower;
  if (denom == 0.0) return 0.0;  // abs = 0 and v_lower = v_upper = 0
  // Exact cases the weighted sum only reaches up to roundoff.
  if (w_upper == w_lower) return 0.5 * (v_lower + v_upper);
  if (v_lower < 0.0 && v_upper > 0.0 && w_lower == tol.rel * -v_lower && w_upper == tol.rel * v_upper)
    return 0.0;
  const double v = (v_lower * w_upper + v_upper * w_lower) / denom;
  return std::clamp(v, v_lower, v_upper);
}

/// sup over v in [v_lower, v_upper] of tol(v, optimal_estimate) in closed form:
/// (v_upper - v_lower)^2 / (width(v_upper) + width(v_lower))^2.
inline double sup_tolerance(double v_lower, double v_upper, const Tolerance& tol) {
  const double denom = tol.width(v_upper) + tol.width(v_lower);
  const double span = v_upper - v_lower;
  if (denom == 0.0) return 0.0;
  return (span * span) / (denom * denom);
}

}  // namespace cubqmc
