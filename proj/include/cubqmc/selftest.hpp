#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cubqmc/detail/bits.hpp"
#include "cubqmc/ledger.hpp"
#include "cubqmc/models/test_functions.hpp"
#include "cubqmc/sequences.hpp"
#include "cubqmc/tolerance.hpp"
#include "cubqmc/transforms.hpp"

namespace cubqmc {

struct SuiteResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
  bool passed() const { return max_deviation <= tolerance; }
};

inline std::ostream& operator<<(std::ostream& out, const SuiteResult& r) {
  return out << (r.passed() ? "PASS " : "FAIL ") << r.name << ": max deviation "
             << r.max_deviation << " (tolerance " << r.tolerance << ", " << r.cases << " cases)";
}

namespace detail {

inline std::vector<double> random_vector(std::mt19937_64& eng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * uniform01(eng) - 1.0;
  return v;
}

/// Walsh index of wavenumber k in coordinate j as seen by the sequence index: C_j^T k over GF(2).
inline std::uint64_t digital_index(const DigitalGenerator& gen, std::size_t j, std::uint64_t k) {
  const std::uint64_t kk = reverse_bits(k, kDigitalPrecision);
  std::uint64_t out = 0;
  for (int b = 0; b < kDigitalPrecision; ++b)
    if (parity(gen.columns(j)[static_cast<std::size_t>(b)] & kk)) out |= std::uint64_t{1} << b;
  return out;
}

}  // namespace detail

/// FWHT and lattice DFT against their O(n^2) definitions, n = 2..256.
inline SuiteResult selftest_transforms(std::uint64_t seed = 1, int vectors_per_size = 100) {
  SuiteResult r{"transforms", 0.0, 1e-12, 0};
  std::mt19937_64 eng(seed);
  for (std::size_t n = 2; n <= 256; n *= 2) {
    const int m = detail::log2_exact(n);
    for (int t = 0; t < vectors_per_size; ++t) {
      const auto y = detail::random_vector(eng, n);
      const auto w = fwht(y);
      const auto c = lattice_dft(y);
      for (std::size_t k = 0; k < n; ++k) {
        double direct_w = 0.0;
        std::complex<double> direct_c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          direct_w += (std::popcount(i & k) & 1 ? -y[i] : y[i]);
          const double phase = -2.0 * std::numbers::pi *
                               static_cast<double>((k * detail::reverse_bits(i, m)) % n) /
                               static_cast<double>(n);
          direct_c += y[i] * std::polar(1.0, phase);
        }
        direct_w /= static_cast<double>(n);
        direct_c /= static_cast<double>(n);
        r.max_deviation = std::max({r.max_deviation, std::abs(w[k] - direct_w), std::abs(c[k] - direct_c)});
      }
      ++r.cases;
    }
  }
  return r;
}

/// Ledgers of random sparse Walsh (digital) and cosine (lattice) series against the
/// aliasing prediction, m = 4..8, wavenumbers below 2^(m+3).
inline SuiteResult selftest_aliasing(std::uint64_t seed = 2, int spectra = 50) {
  SuiteResult r{"aliasing", 0.0, 1e-10, 0};
  std::mt19937_64 eng(seed);
  constexpr std::size_t d = 3;
  for (int m = 4; m <= 8; ++m) {
    const std::uint64_t kmax = std::uint64_t{1} << (m + 3);
    for (int s = 0; s < spectra; ++s) {
      const std::size_t terms = 1 + eng() % 8;
      std::vector<std::array<std::uint64_t, d>> ks(terms);
      std::vector<double> amps(terms);
      for (std::size_t t = 0; t < terms; ++t) {
        for (auto& k : ks[t]) k = eng() % 3 == 0 ? eng() % kmax : 0;
        amps[t] = 2.0 * detail::uniform01(eng) - 1.0;
      }
      for (Family fam : {Family::digital, Family::lattice}) {
        const auto gen = make_generator(fam, d, eng());
        std::vector<SpectralTerm> spectrum;
        Integrand f;
        if (fam == Family::digital) {
          const auto& dg = *gen.digital();
          for (std::size_t t = 0; t < terms; ++t) {
            std::uint64_t index = 0;
            int sign_bits = 0;
            for (std::size_t j = 0; j < d; ++j) {
              index ^= detail::digital_index(dg, j, ks[t][j]);
              sign_bits += std::popcount(ks[t][j] & detail::reverse_bits(dg.shift_bits(j), kDigitalPrecision));
            }
            spectrum.push_back({index, {sign_bits & 1 ? -amps[t] : amps[t], 0.0}});
          }
          f = scalar_integrand(d, [ks, amps](std::span<const double> x) {
            double v = 0.0;
            for (std::size_t t = 0; t < ks.size(); ++t) {
              double term = amps[t];
              for (std::size_t j = 0; j < d; ++j) term *= walsh(ks[t][j], x[j]);
              v += term;
            }
            return v;
          });
        } else {
          // a cos(2 pi h.x) = a/2 (e^{2 pi i h.x} + e^{-2 pi i h.x})
          const auto& lg = *gen.lattice();
          const std::uint64_t mask = (std::uint64_t{1} << lg.max_level()) - 1;
          for (std::size_t t = 0; t < terms; ++t) {
            std::uint64_t hg = 0;
            double phase = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              hg += ks[t][j] * lg.generating_vector()[j];
              phase += static_cast<double>(ks[t][j]) * lg.shift()[j];
            }
            const auto e = std::polar(0.5 * amps[t], 2.0 * std::numbers::pi * phase);
            spectrum.push_back({hg & mask, e});
            spectrum.push_back({(~hg + 1) & mask, std::conj(e)});
          }
          f = scalar_integrand(d, [ks, amps](std::span<const double> x) {
            double v = 0.0;
            for (std::size_t t = 0; t < ks.size(); ++t) {
              double arg = 0.0;
              for (std::size_t j = 0; j < d; ++j) arg += static_cast<double>(ks[t][j]) * x[j];
              v += amps[t] * std::cos(2.0 * std::numbers::pi * arg);
            }
            return v;
          });
        }
        const auto ledger = build_ledger(f, gen, m);
        r.max_deviation = std::max(r.max_deviation, aliasing_check(ledger, spectrum));
        ++r.cases;
      }
    }
  }
  return r;
}

/// Optimal estimate and worst-case tolerance on random intervals and tolerances:
/// endpoint equality, optimality against a candidate grid, membership and shrinkage.
/// Deviations are relative to max(1, sup_tol).
inline SuiteResult selftest_estimator(std::uint64_t seed = 3, int cases = 1000) {
  SuiteResult r{"estimator", 0.0, 1e-9, 0};
  std::mt19937_64 eng(seed);
  constexpr int grid = 1000;
  for (int c = 0; c < cases; ++c) {
    double a = 4.0 * detail::uniform01(eng) - 2.0, b = 4.0 * detail::uniform01(eng) - 2.0;
    if (a > b) std::swap(a, b);
    Tolerance tol{std::ldexp(detail::uniform01(eng), -static_cast<int>(eng() % 8)) + 1e-6,
                  0.99 * detail::uniform01(eng)};
    const double vhat = optimal_estimate(a, b, tol);
    const double sup = sup_tolerance(a, b, tol);
    const double scale = std::max(1.0, sup);
    double dev = std::abs(tolerance_value(a, vhat, tol) - tolerance_value(b, vhat, tol)) / scale;
    dev = std::max(dev, std::abs(tolerance_value(a, vhat, tol) - sup) / scale);
    // Grid sup of tol(., v) for the estimate itself never exceeds the closed form...
    auto grid_sup = [&](double cand) {
      double s = std::max(tolerance_value(a, cand, tol), tolerance_value(b, cand, tol));
      for (int i = 1; i < grid; ++i) s = std::max(s, tolerance_value(a + (b - a) * i / grid, cand, tol));
      return s;
    };
    dev = std::max(dev, std::max(0.0, grid_sup(vhat) - sup) / scale);
    // ...and no other candidate does better.
    for (int i = 0; i <= grid; i += 10) dev = std::max(dev, std::max(0.0, sup - grid_sup(a + (b - a) * i / grid)) / scale);
    if (vhat < a || vhat > b) dev = std::max(dev, 1.0);
    const double mid = 0.5 * (a + b);
    if (std::abs(vhat) > std::abs(mid) * (1 + 1e-15) + 1e-300) dev = std::max(dev, 1.0);
    if (vhat != 0.0 && (vhat > 0) != (mid > 0)) dev = std::max(dev, 1.0);
    r.max_deviation = std::max(r.max_deviation, dev);
    ++r.cases;
  }
  return r;
}

/// Digital Parseval identity: sum_k coef_k^2 = mean of y^2, relative.
inline SuiteResult selftest_parseval(std::uint64_t seed = 4) {
  SuiteResult r{"parseval", 0.0, 1e-10, 0};
  std::mt19937_64 eng(seed);
  const auto f = product_integrand(4, 0.7);
  for (int m = 1; m <= 14; ++m) {
    const auto ledger = build_ledger(f, make_generator(Family::digital, 4, eng()), m);
    const auto& c = ledger[0];
    double lhs = 0.0, rhs = 0.0;
    for (double x : c.magnitudes) lhs += x * x;
    for (double y : c.values) rhs += y * y;
    rhs /= static_cast<double>(ledger.size());
    r.max_deviation = std::max(r.max_deviation, std::abs(lhs - rhs) / rhs);
    ++r.cases;
  }
  return r;
}

inline const std::vector<std::string>& selftest_suite_names() {
  static const std::vector<std::string> names{"transforms", "aliasing", "estimator", "parseval"};
  return names;
}

/// Run one named suite, or all of them for an empty name.
inline std::vector<SuiteResult> run_selftest(const std::string& suite = "") {
  std::vector<SuiteResult> out;
  if (suite.empty() || suite == "transforms") out.push_back(selftest_transforms());
  if (suite.empty() || suite == "aliasing") out.push_back(selftest_aliasing());
  if (suite.empty() || suite == "estimator") out.push_back(selftest_estimator());
  if (suite.empty() || suite == "parseval") out.push_back(selftest_parseval());
  if (out.empty()) throw InputError("unknown selftest suite '" + suite + "'");
  return out;
}

}  // namespace cubqmc
