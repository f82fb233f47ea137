#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "cubqmc/errors.hpp"

namespace cubqmc::detail {

/// Dense row-major square matrix, just enough for the small problems here.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(std::size_t size) : n(size), a(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// Lower Cholesky factor of a symmetric positive definite matrix.
inline Matrix cholesky(const Matrix& s) {
  Matrix l(s.n);
  for (std::size_t j = 0; j < s.n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw DomainError("covariance matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < s.n; ++i) {
      double v = s(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return l;
}

struct Eigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k belongs to values[k]
};

/// Cyclic Jacobi rotations until the off-diagonal norm is below tol * ||S||_F.
inline Eigen jacobi_eigen(Matrix s, double tol = 1e-12, int max_sweeps = 100) {
  const std::size_t n = s.n;
  Matrix v(n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  double frob = 0.0;
  for (double x : s.a) frob += x * x;
  frob = std::sqrt(frob);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * s(i, j) * s(i, j);
    if (std::sqrt(off) <= tol * frob) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (s(p, q) == 0.0) continue;
        const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
        const double t = std::abs(theta) > 1e150
                             ? 0.5 / theta
                             : std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return s(x, x) > s(y, y); });
  Eigen e{std::vector<double>(n), Matrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    e.values[k] = s(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) e.vectors(i, k) = v(i, order[k]);
  }
  return e;
}

/// Solve the symmetric positive semidefinite system A x = b via LDL^T.
/// Returns nullopt if A is numerically rank deficient.
inline std::optional<std::vector<double>> solve_spd(Matrix a, std::vector<double> b,
                                                    double rel_tol = 1e-12) {
  const std::size_t n = a.n;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  if (scale == 0.0) return std::nullopt;
  Matrix l(n);
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    double dj = a(j, j);
    for (std::size_t k = 0; k < j; ++k) dj -= l(j, k) * l(j, k) * d[k];
    if (!(dj > rel_tol * scale)) return std::nullopt;
    d[j] = dj;
    l(j, j) = 1.0;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k) * d[k];
      l(i, j) = v / dj;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
  for (std::size_t i = 0; i < n; ++i) b[i] /= d[i];
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= l(k, i) * b[k];
  return b;
}

}  // namespace cubqmc::detail
