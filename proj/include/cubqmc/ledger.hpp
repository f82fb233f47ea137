#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cubqmc/integrand.hpp"
#include "cubqmc/sequences.hpp"
#include "cubqmc/transforms.hpp"

namespace cubqmc {

/// Number of coefficients in tier l: {0} for l = 0, [2^(l-1), 2^l) otherwise.
constexpr std::size_t tier_size(int l) noexcept {
  return l == 0 ? 1 : std::size_t{1} << (l - 1);
}

/// Tier sums S~_{l,m} = sum of |f~_{m,k}| over k in [floor(2^(l-1)), 2^l), l = 0..m.
struct TierSums {
  std::vector<double> sums;
  /// Rounding-error estimate for one coefficient magnitude.
  double roundoff = 0.0;

  int level() const noexcept { return static_cast<int>(sums.size()) - 1; }
  double operator[](int l) const { return sums.at(static_cast<std::size_t>(l)); }
  double total() const {
    double t = 0.0;
    for (double s : sums) t += s;
    return t;
  }
  /// Magnitude of tier l that cannot be distinguished from rounding error.
  double noise_floor(int l) const { return roundoff * static_cast<double>(tier_size(l)); }
};

inline TierSums make_tier_sums(std::span<const double> magnitudes, double roundoff = 0.0) {
  detail::require_power_of_two(magnitudes.size(), "tier sums");
  const int m = detail::log2_exact(magnitudes.size());
  TierSums t;
  t.roundoff = roundoff;
  t.sums.assign(static_cast<std::size_t>(m) + 1, 0.0);
  t.sums[0] = magnitudes[0];
  for (int l = 1; l <= m; ++l) {
    double s = 0.0;
    for (std::size_t k = std::size_t{1} << (l - 1); k < (std::size_t{1} << l); ++k)
      s += magnitudes[k];
    t.sums[static_cast<std::size_t>(l)] = s;
  }
  return t;
}

/// How the wavenumber ordering is built from the data. Bins that alias together at level l
/// (natural bins equal mod 2^l) are ordered so that the larger magnitude gets the smaller
/// kappa. The ordering is first sorted on every level at `start_level`, and at each later
/// level only the top `lag` levels are re-sorted, so low-kappa positions stay put as m grows.
/// With `data_driven` false kappa is the natural transform bin.
struct OrderingParams {
  int start_level = 10;
  int lag = 4;
  bool data_driven = true;

  static OrderingParams natural() { return {10, 4, false}; }
};

namespace detail {

/// Re-sort level l of `map` (kappa -> natural bin) by the magnitudes `mag` of natural bins.
inline void sort_level(std::vector<std::uint64_t>& map, std::span<const double> mag, int l) {
  const std::size_t half = std::size_t{1} << l, n = map.size();
  for (std::size_t k = 1; k < half; ++k) {
    if (!(mag[map[k + half]] > mag[map[k]])) continue;
    for (std::size_t base = k; base < n; base += 2 * half) std::swap(map[base], map[base + half]);
  }
}

/// Natural-order coefficient magnitudes of `values`; `mean` receives the bin-0 value.
inline std::vector<double> natural_magnitudes(Family family, std::span<const double> values, double& mean) {
  std::vector<double> mag(values.size());
  if (family == Family::digital) {
    const auto c = fwht(values);
    for (std::size_t k = 0; k < c.size(); ++k) mag[k] = std::abs(c[k]);
    mean = c[0];
  } else {
    const auto c = lattice_dft(values);
    for (std::size_t k = 0; k < c.size(); ++k) mag[k] = std::abs(c[k]);
    mean = c[0].real();
  }
  return mag;
}

}  // namespace detail

/// Data and discrete-coefficient magnitudes of one integrand output at level m.
struct LedgerCoordinate {
  std::vector<double> values;          // y_i = f(x_i), i < 2^m, sequence order
  std::vector<double> bins;            // |coefficient| per natural transform bin
  std::vector<std::uint64_t> kappa_map;  // kappa -> natural bin
  std::vector<double> magnitudes;      // |f~_{m,kappa}| = bins[kappa_map[kappa]]
  double mean = 0.0;                   // f~_{m,0}, the sample mean
  TierSums tiers;
};

/// Discrete Fourier/Walsh coefficient magnitudes of sampled data at n = 2^m, one
/// coordinate per integrand output. Immutable once built.
class CoefficientLedger {
 public:
  CoefficientLedger(Family family, std::vector<std::vector<double>> values, OrderingParams ordering = {})
      : family_(family), ordering_(ordering) {
    if (values.empty()) throw InputError("ledger needs at least one output");
    if (ordering.start_level < 0 || ordering.lag < 1) throw InputError("ledger ordering parameters invalid");
    const std::size_t n = values.front().size();
    detail::require_power_of_two(n, "ledger");
    level_ = detail::log2_exact(n);
    coords_.reserve(values.size());
    for (auto& v : values) {
      if (v.size() != n) throw InputError("ledger outputs have different lengths");
      coords_.push_back(transform(std::move(v)));
    }
  }

  int level() const noexcept { return level_; }
  std::uint64_t size() const noexcept { return std::uint64_t{1} << level_; }
  Family family() const noexcept { return family_; }
  const OrderingParams& ordering() const noexcept { return ordering_; }
  std::size_t outputs() const noexcept { return coords_.size(); }
  const LedgerCoordinate& coordinate(std::size_t k) const { return coords_.at(k); }
  const LedgerCoordinate& operator[](std::size_t k) const { return coords_[k]; }

 private:
  LedgerCoordinate transform(std::vector<double> values) const {
    LedgerCoordinate c;
    double scale = 0.0;
    for (double y : values) scale = std::max(scale, std::abs(y));
    // The ordering at level m is the one reached by growing the sample from start_level,
    // so a fresh build and an incremental one agree.
    const int m0 = ordering_.data_driven ? std::min(level_, ordering_.start_level) : level_;
    std::vector<std::uint64_t> map(std::size_t{1} << m0);
    for (std::size_t k = 0; k < map.size(); ++k) map[k] = k;
    for (int lev = m0; lev <= level_; ++lev) {
      const std::size_t n = std::size_t{1} << lev;
      if (lev > m0) {
        map.resize(n);
        for (std::size_t k = 0; k < n / 2; ++k) map[k + n / 2] = map[k] + n / 2;
      }
      auto mag = detail::natural_magnitudes(family_, std::span<const double>(values).first(n), c.mean);
      const int lowest = lev == m0 ? 1 : std::max(1, lev - ordering_.lag);
      if (ordering_.data_driven)
        for (int l = lev - 1; l >= lowest; --l) detail::sort_level(map, mag, l);
      if (lev == level_) c.bins = std::move(mag);
    }
    c.kappa_map = std::move(map);
    c.magnitudes.resize(c.bins.size());
    for (std::size_t k = 0; k < c.bins.size(); ++k) c.magnitudes[k] = c.bins[c.kappa_map[k]];
    const double roundoff =
        8.0 * (level_ + 1) * std::numeric_limits<double>::epsilon() * scale;
    c.tiers = make_tier_sums(c.magnitudes, roundoff);
    c.values = std::move(values);
    return c;
  }

  Family family_;
  OrderingParams ordering_;
  int level_ = 0;
  std::vector<LedgerCoordinate> coords_;
};

/// Evaluate f at the first 2^m points of `gen` and transform. With a level m-1 `previous`
/// ledger, its cached values are reused and only the 2^(m-1) new points are evaluated.
inline CoefficientLedger build_ledger(const Integrand& f, const SequenceGenerator& gen, int m,
                                      const CoefficientLedger* previous = nullptr,
                                      OrderingParams ordering = {}) {
  if (m < 0 || m > gen.max_level())
    throw CapacityError("level " + std::to_string(m) + " exceeds generator capacity 2^" +
                        std::to_string(gen.max_level()));
  if (f.dimension > gen.dimension())
    throw CapacityError("integrand dimension exceeds generator dimension");
  std::vector<std::vector<double>> columns(f.outputs);
  std::uint64_t start = 0;
  if (previous != nullptr) {
    if (previous->level() != m - 1 || previous->outputs() != f.outputs ||
        previous->family() != gen.family())
      throw InputError("previous ledger does not match level m-1 of this integrand/generator");
    for (std::size_t k = 0; k < f.outputs; ++k) columns[k] = previous->coordinate(k).values;
    start = previous->size();
  }
  const std::uint64_t n = std::uint64_t{1} << m;
  evaluate_into(f, gen.points(start, n - start, f.dimension), columns);
  return CoefficientLedger(gen.family(), std::move(columns), ordering);
}

/// One term of a known sparse spectrum: `index` is the wavenumber's position in the
/// coefficient ordering (for lattices h.g mod 2^max_level, for digital nets the Walsh
/// index seen through the generator matrices). `amplitude` includes the shift phase.
struct SpectralTerm {
  std::uint64_t index = 0;
  std::complex<double> amplitude;
};

/// Largest deviation between the ledger and the coefficients predicted by aliasing:
/// natural bin k at level m collects every term whose index is congruent to k mod 2^m.
/// Magnitudes are compared for k > 0 and the signed mean for k = 0.
inline double aliasing_check(const CoefficientLedger& ledger, std::span<const SpectralTerm> spectrum,
                             std::size_t output = 0) {
  const std::uint64_t n = ledger.size();
  std::vector<std::complex<double>> predicted(n);
  for (const auto& t : spectrum) predicted[t.index & (n - 1)] += t.amplitude;
  const auto& c = ledger.coordinate(output);
  double worst = std::abs(c.mean - predicted[0].real());
  worst = std::max(worst, std::abs(predicted[0].imag()));
  for (std::uint64_t k = 1; k < n; ++k)
    worst = std::max(worst, std::abs(c.bins[k] - std::abs(predicted[k])));
  return worst;
}

/// CSV dump (output, kappa, magnitude). Above `max_rows` coefficients per output a uniform
/// stride is used.
inline void write_ledger_csv(std::ostream& out, const CoefficientLedger& ledger,
                             std::size_t max_rows = std::size_t{1} << 14, bool header = true) {
  if (header) out << "output,kappa,magnitude\n";
  const std::uint64_t n = ledger.size();
  const std::uint64_t stride = n > max_rows ? n / max_rows : 1;
  const auto old_precision = out.precision(17);
  for (std::size_t k = 0; k < ledger.outputs(); ++k)
    for (std::uint64_t kappa = 0; kappa < n; kappa += stride)
      out << k << ',' << kappa << ',' << ledger.coordinate(k).magnitudes[kappa] << '\n';
  out.precision(old_precision);
}

}  // namespace cubqmc
