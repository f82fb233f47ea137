#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cubqmc/detail/bits.hpp"
#include "cubqmc/integrand.hpp"
#include "cubqmc/sequences.hpp"

namespace cubqmc {

/// Walsh function wal_k(x) = (-1)^(sum_b k_b x_{b+1}), x_{b+1} the (b+1)-th binary digit of x.
inline double walsh(std::uint64_t k, double x) {
  const auto digits = static_cast<std::uint64_t>(std::ldexp(x, kDigitalPrecision));
  const auto reversed = detail::reverse_bits(digits, kDigitalPrecision);
  return std::popcount(k & reversed) & 1 ? -1.0 : 1.0;
}

/// prod_j (1 + c (x_j - 1/2)); integral 1.
inline Integrand product_integrand(std::size_t d, double c = 0.1) {
  return scalar_integrand(d, [c](std::span<const double> x) {
    double p = 1.0;
    for (double xj : x) p *= 1.0 + c * (xj - 0.5);
    return p;
  });
}

/// A smooth product integrand plus `terms` Walsh functions of x_1 with indices drawn from
/// [low, high). The added terms integrate to 0, so the integral stays 1, but their mass
/// sits far above the tiers that the error bound samples at small n.
struct SpikyIntegrand {
  Integrand integrand;
  std::vector<std::uint64_t> indices;
  double amplitude = 0.0;
};

inline SpikyIntegrand spiky_integrand(std::size_t d, double c = 0.1, int terms = 16,
                                      double amplitude = 0.05, std::uint64_t low = 1u << 11,
                                      std::uint64_t high = 1u << 13, std::uint64_t seed = 7) {
  std::mt19937_64 eng(seed);
  std::uniform_int_distribution<std::uint64_t> pick(low, high - 1);
  std::vector<std::uint64_t> idx(static_cast<std::size_t>(terms));
  for (auto& k : idx) k = pick(eng);
  auto f = scalar_integrand(d, [c, idx, amplitude](std::span<const double> x) {
    double p = 1.0;
    for (double xj : x) p *= 1.0 + c * (xj - 0.5);
    for (auto k : idx) p += amplitude * walsh(k, x[0]);
    return p;
  });
  return {std::move(f), std::move(idx), amplitude};
}

/// 1 plus a narrow box of width 2^-width_bits and total mass `mass` in x_1 at `left`.
/// Integral 1 + mass; easily missed by small samples.
inline Integrand bump_integrand(std::size_t d, double mass = 0.1, int width_bits = 16,
                                double left = 0.3125) {
  const double w = std::ldexp(1.0, -width_bits);
  return scalar_integrand(d, [=](std::span<const double> x) {
    return 1.0 + (x[0] >= left && x[0] < left + w ? mass / w : 0.0);
  });
}

}  // namespace cubqmc
