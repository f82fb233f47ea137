#pragma once

// Slow, independent reference computations for the unit and acceptance tests. Nothing
// here calls into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace oracle {

/// (1/n) sum_i y_i (-1)^popcount(i & k), double loop.
inline std::vector<double> walsh_transform(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t bits = i & k;
      int parity = 0;
      while (bits) {
        parity ^= static_cast<int>(bits & 1u);
        bits >>= 1;
      }
      s += parity ? -y[i] : y[i];
    }
    out[k] = static_cast<double>(s / static_cast<long double>(n));
  }
  return out;
}

/// Bit reversal of the low `bits` bits, by repeated division.
inline std::uint64_t reverse(std::uint64_t i, int bits) {
  std::uint64_t out = 0;
  for (int b = 0; b < bits; ++b) {
    out = out * 2 + i % 2;
    i /= 2;
  }
  return out;
}

/// Van der Corput radical inverse in base 2.
inline double radical_inverse(std::uint64_t i) {
  double x = 0.0, f = 0.5;
  while (i > 0) {
    if (i % 2) x += f;
    i /= 2;
    f /= 2;
  }
  return x;
}

/// DFT of data given in van der Corput order: (1/n) sum_i y_i exp(-2 pi i k phi(i)).
inline std::vector<std::complex<double>> lattice_transform(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<long double> s = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const long double phase = -2.0L * std::numbers::pi_v<long double> *
                                std::fmod(static_cast<long double>(k) * radical_inverse(i), 1.0L);
      s += static_cast<long double>(y[i]) * std::complex<long double>(std::cos(phase), std::sin(phase));
    }
    out[k] = {static_cast<double>(s.real() / n), static_cast<double>(s.imag() / n)};
  }
  return out;
}

inline double normal_cdf(double x) {
  return static_cast<double>(0.5L * boost::math::erfc(-static_cast<long double>(x) / std::sqrt(2.0L)));
}

/// Max over a grid of anchors t of |#{x_i < t}/n - t_1 t_2|: a lower estimate of the
/// two-dimensional star discrepancy.
inline double star_discrepancy_2d(const std::vector<std::array<double, 2>>& pts, int grid = 128) {
  double worst = 0.0;
  const double n = static_cast<double>(pts.size());
  for (int a = 1; a <= grid; ++a) {
    for (int b = 1; b <= grid; ++b) {
      const double t1 = static_cast<double>(a) / grid, t2 = static_cast<double>(b) / grid;
      std::size_t open = 0, closed = 0;
      for (const auto& p : pts) {
        open += p[0] < t1 && p[1] < t2;
        closed += p[0] <= t1 && p[1] <= t2;
      }
      worst = std::max({worst, std::abs(open / n - t1 * t2), std::abs(closed / n - t1 * t2)});
    }
  }
  return worst;
}

/// Hybrid tolerance tol(v, vh) written out directly.
inline double tol(double v, double vh, double abs_tol, double rel_tol) {
  const double w = std::max(abs_tol, rel_tol * std::abs(v));
  return (v - vh) * (v - vh) / (w * w);
}

/// sup over a uniform grid of v in [lo, hi] of tol(v, vh).
inline double grid_sup_tol(double lo, double hi, double vh, double abs_tol, double rel_tol, int points) {
  double s = 0.0;
  for (int i = 0; i <= points; ++i) s = std::max(s, tol(lo + (hi - lo) * i / points, vh, abs_tol, rel_tol));
  return s;
}

/// The candidate on a grid over [lo, hi] with the smallest grid sup tolerance.
inline double grid_best_estimate(double lo, double hi, double abs_tol, double rel_tol, int candidates, int points,
                                 double* best_sup = nullptr) {
  double best = lo, best_val = INFINITY;
  for (int c = 0; c <= candidates; ++c) {
    const double vh = lo + (hi - lo) * c / candidates;
    const double s = grid_sup_tol(lo, hi, vh, abs_tol, rel_tol, points);
    if (s < best_val) {
      best_val = s;
      best = vh;
    }
  }
  if (best_sup) *best_sup = best_val;
  return best;
}

/// Extremes of mu1 / (mu2 - mu3^2) over a grid of the box intersected with
/// {0 <= mu1 <= mu2 - mu3^2}. Returns false when no grid point lies in the domain.
inline bool sobol_ratio_extremes(const double mean[3], const double err[3], int grid, double& lo, double& hi) {
  lo = INFINITY;
  hi = -INFINITY;
  bool any = false;
  for (int a = 0; a <= grid; ++a)
    for (int b = 0; b <= grid; ++b)
      for (int c = 0; c <= grid; ++c) {
        const double m1 = mean[0] - err[0] + 2 * err[0] * a / grid;
        const double m2 = mean[1] - err[1] + 2 * err[1] * b / grid;
        const double m3 = mean[2] - err[2] + 2 * err[2] * c / grid;
        const double den = m2 - m3 * m3;
        if (!(m1 >= 0.0 && den > 0.0 && m1 <= den)) continue;
        any = true;
        lo = std::min(lo, m1 / den);
        hi = std::max(hi, m1 / den);
      }
  return any;
}

/// Exact first-order Sobol' indices of sum_{i=1}^d (-1)^i prod_{j<=i} x_j.
/// E[g | x_j] is affine in x_j with slope c_j = sum_{i>=j} (-1)^i 2^{-(i-1)}, so
/// V_j = c_j^2 / 12; E[g^2] = sum_{i,k} (-1)^{i+k} 3^{-min(i,k)} 2^{-|i-k|}.
inline std::vector<double> bratley_indices(int d) {
  double mean = 0.0, second = 0.0;
  for (int i = 1; i <= d; ++i) mean += (i % 2 ? -1.0 : 1.0) * std::pow(0.5, i);
  for (int i = 1; i <= d; ++i)
    for (int k = 1; k <= d; ++k)
      second += ((i + k) % 2 ? -1.0 : 1.0) * std::pow(1.0 / 3.0, std::min(i, k)) * std::pow(0.5, std::abs(i - k));
  const double var = second - mean * mean;
  std::vector<double> s(d);
  for (int j = 1; j <= d; ++j) {
    double c = 0.0;
    for (int i = j; i <= d; ++i) c += (i % 2 ? -1.0 : 1.0) * std::pow(0.5, i - 1);
    s[j - 1] = c * c / 12.0 / var;
  }
  return s;
}

/// Monte Carlo P(X <= b) for unit-variance equicorrelated X: X_j = sqrt(s) Z_0 + sqrt(1-s) Z_j.
inline void mvn_monte_carlo(double sigma, const std::vector<double>& b, std::size_t n, std::uint64_t seed,
                            double& mean, double& std_error) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> z;
  const double a = std::sqrt(sigma), s = std::sqrt(1.0 - sigma);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z0 = z(eng);
    bool in = true;
    for (double bj : b) in = (a * z0 + s * z(eng) <= bj) && in;
    hits += in;
  }
  mean = static_cast<double>(hits) / n;
  std_error = std::sqrt(mean * (1 - mean) / n);
}

/// Geometric-average Asian call with monitoring t_j = j T / d, j = 1..d, using
/// sum_{i,j} min(i, j) = d(d+1)(2d+1)/6.
inline double geometric_asian(double s0, double k, double r, double vol, double t, int d) {
  const double dd = d;
  const double mean_t = t * (dd + 1) / (2 * dd);
  const double var = vol * vol * (t / dd) * (dd * (dd + 1) * (2 * dd + 1) / 6) / (dd * dd);
  const double mu = std::log(s0) + (r - 0.5 * vol * vol) * mean_t;
  const double sd = std::sqrt(var);
  boost::math::normal_distribution<double> n01;
  const double d1 = (mu - std::log(k) + var) / sd;
  return std::exp(-r * t) * (std::exp(mu + 0.5 * var) * boost::math::cdf(n01, d1) - k * boost::math::cdf(n01, d1 - sd));
}

}  // namespace oracle
