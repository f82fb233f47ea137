#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "cubqmc/engine.hpp"
#include "cubqmc/errors.hpp"
#include "cubqmc/integrand.hpp"

namespace cubqmc {

/// Bratley et al. test function: sum_{i=1}^d (-1)^i prod_{j<=i} x_j (d = 6 in the usual setup).
inline double bratley_g(std::span<const double> x) {
  double sum = 0.0, prod = 1.0, sign = -1.0;
  for (double xi : x) {
    prod *= xi;
    sum += sign * prod;
    sign = -sign;
  }
  return sum;
}

/// Exact first-order indices of bratley_g for d = 6 (variance 164143/2985984).
inline constexpr std::array<double, 6> kBratleyFirstOrderIndices = {
    15309.0 / 23449.0, 29403.0 / 164143.0, 6075.0 / 164143.0,
    2187.0 / 164143.0, 243.0 / 164143.0,   243.0 / 164143.0};

using Model = std::function<double(std::span<const double>)>;

/// Three integrands over [0,1)^(2d), x = (x, x'):
///   [g(x_j : x'_{-j}) - g(x')] g(x),   g(x)^2,   g(x).
/// `coordinate` is 1-based.
inline Integrand sobol_index_integrand(Model g, std::size_t d, std::size_t coordinate) {
  if (coordinate < 1 || coordinate > d) throw InputError("Sobol' index coordinate out of range");
  const std::size_t j = coordinate - 1;
  return {2 * d, 3, [g = std::move(g), d, j](std::span<const double> x, std::span<double> y) {
            const auto xs = x.first(d), xp = x.subspan(d, d);
            std::vector<double> mixed(xp.begin(), xp.end());
            mixed[j] = xs[j];
            const double gx = g(xs);
            y[0] = (g(mixed) - g(xp)) * gx;
            y[1] = gx * gx;
            y[2] = gx;
          }};
}

/// v(mu) = mu1 / (mu2 - mu3^2) on {0 <= mu1 <= mu2 - mu3^2}, with the extremes of v over
/// the box intersected with that domain. Within the box the numerator is largest at
/// mu1 + err1 and the denominator smallest at mu2 - err2 minus the largest square of mu3;
/// the reverse for the minimum (the smallest square is 0 when the mu3 interval straddles 0).
/// Values are clamped to [0, 1].
inline SolutionFunctional sobol_index_functional() {
  auto ratio = [](double num, double den) {
    if (num <= 0.0) return 0.0;
    if (num > std::max(0.0, den)) return 1.0;
    return num / den;
  };
  return {3,
          [](std::span<const double> mu) { return mu[0] / (mu[1] - mu[2] * mu[2]); },
          [ratio](std::span<const IntervalEstimate> box) {
            const double m1 = box[0].mean, e1 = box[0].err;
            const double m2 = box[1].mean, e2 = box[1].err;
            const double lo3 = box[2].mean - box[2].err, hi3 = box[2].mean + box[2].err;
            const double sq_max = std::max(lo3 * lo3, hi3 * hi3);
            const double sq_min = (lo3 <= 0.0 && hi3 >= 0.0) ? 0.0 : std::min(lo3 * lo3, hi3 * hi3);
            const double upper = ratio(m1 + e1, m2 - e2 - sq_max);
            const double lower = ratio(m1 - e1, m2 + e2 - sq_min);
            return ValueBounds{std::min(lower, upper), upper};
          }};
}

}  // namespace cubqmc
