#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace cubqmc::detail {

/// Reverse the lowest `bits` bits of `value`.
constexpr std::uint64_t reverse_bits(std::uint64_t value, int bits) noexcept {
  std::uint64_t out = 0;
  for (int b = 0; b < bits; ++b) {
    out = (out << 1) | (value & 1u);
    value >>= 1;
  }
  return out;
}

constexpr bool is_power_of_two(std::size_t n) noexcept { return std::has_single_bit(n); }

/// log2 of a power of two.
constexpr int log2_exact(std::size_t n) noexcept { return std::countr_zero(n); }

constexpr int parity(std::uint64_t v) noexcept { return std::popcount(v) & 1; }

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine draw.
/// Portable, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace cubqmc::detail
