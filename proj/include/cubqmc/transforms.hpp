#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cubqmc/detail/bits.hpp"
#include "cubqmc/errors.hpp"

namespace cubqmc {

namespace detail {

inline void require_power_of_two(std::size_t n, const char* who) {
  if (!is_power_of_two(n))
    throw DomainError(std::string(who) + ": length " + std::to_string(n) +
                      " is not a power of two");
}

/// In-place radix-2 DIT FFT, natural order in and out, e^{-2 pi i jk/n} kernel, unnormalized.
inline void fft_in_place(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  const int m = log2_exact(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = reverse_bits(i, m);
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddles computed directly per index to keep rounding error O(eps) rather than O(log n eps).
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k)
    twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                                     static_cast<double>(n));
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2, stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto t = twiddle[k * stride] * a[i + k + half];
        a[i + k + half] = a[i + k] - t;
        a[i + k] += t;
      }
    }
  }
}

}  // namespace detail

/// Normalized Walsh-Hadamard transform in natural (Hadamard) order:
/// out[k] = 2^-m sum_i values[i] (-1)^popcount(i & k).
inline std::vector<double> fwht(std::span<const double> values) {
  detail::require_power_of_two(values.size(), "fwht");
  std::vector<double> a(values.begin(), values.end());
  const std::size_t n = a.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = a[j], y = a[j + h];
        a[j] = x + y;
        a[j + h] = x - y;
      }
    }
  }
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : a) v *= scale;
  return a;
}

/// Discrete Fourier coefficients of lattice data given in van der Corput (sequence) order.
///
/// The data are permuted to natural lattice order (node j/2^m * g) and transformed with
/// 1/2^m normalization. Bin k holds the common coefficient of every wavenumber h with
/// h.g = k (mod 2^m), up to the unit phase of the shift. In this ordering bins k and
/// k + 2^(m-1) at level m both alias to bin k at level m-1, which is the nesting the
/// error bound relies on.
inline std::vector<std::complex<double>> lattice_dft(std::span<const double> values) {
  detail::require_power_of_two(values.size(), "lattice_dft");
  const std::size_t n = values.size();
  const int m = detail::log2_exact(n);
  std::vector<std::complex<double>> a(n);
  for (std::size_t j = 0; j < n; ++j) a[j] = values[detail::reverse_bits(j, m)];
  detail::fft_in_place(a);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : a) v *= scale;
  return a;
}

}  // namespace cubqmc
