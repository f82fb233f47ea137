#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <vector>

#include "cubqmc/detail/linalg.hpp"
#include "cubqmc/errors.hpp"
#include "cubqmc/integrand.hpp"
#include "cubqmc/special_functions.hpp"

namespace cubqmc {

/// Asian call under geometric Brownian motion, monitored at t_j = j T / d.
struct AsianOption {
  double s0 = 100.0;
  double strike = 100.0;
  double rate = 0.02;
  double volatility = 0.5;
  double maturity = 1.0;
  std::size_t steps = 52;

  void validate() const {
    if (!(s0 > 0.0) || !(strike >= 0.0) || !(volatility >= 0.0) || !(maturity > 0.0) || steps == 0 ||
        !std::isfinite(rate))
      throw InputError("asian option: invalid parameters");
  }
  double time(std::size_t j) const { return static_cast<double>(j + 1) * maturity / static_cast<double>(steps); }
};

enum class AsianPayoff { arithmetic_call, geometric_call };

/// Brownian covariance C_ij = min(t_i, t_j).
inline detail::Matrix brownian_covariance(const AsianOption& o) {
  detail::Matrix c(o.steps);
  for (std::size_t i = 0; i < o.steps; ++i)
    for (std::size_t j = 0; j < o.steps; ++j) c(i, j) = std::min(o.time(i), o.time(j));
  return c;
}

/// Principal-component path map: A = V sqrt(Lambda), columns by descending eigenvalue,
/// so that A A^T = C.
inline detail::Matrix pca_path_matrix(const AsianOption& o) {
  const auto e = detail::jacobi_eigen(brownian_covariance(o));
  detail::Matrix a(o.steps);
  for (std::size_t k = 0; k < o.steps; ++k) {
    const double s = std::sqrt(std::max(e.values[k], 0.0));
    for (std::size_t i = 0; i < o.steps; ++i) a(i, k) = e.vectors(i, k) * s;
  }
  return a;
}

/// Discounted arithmetic and geometric payoffs of one path, as functions of x in [0,1)^d.
class AsianPathPayoffs {
 public:
  explicit AsianPathPayoffs(AsianOption o)
      : o_(o), nudged_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    o_.validate();
    a_ = pca_path_matrix(o_);
  }

  const AsianOption& option() const noexcept { return o_; }
  const detail::Matrix& path_matrix() const noexcept { return a_; }
  /// Number of coordinates moved from 0 to 2^-53 so far.
  std::uint64_t nudged() const noexcept { return nudged_->load(); }

  void operator()(std::span<const double> x, double& arithmetic, double& geometric) const {
    const std::size_t d = o_.steps;
    std::vector<double> z(d);
    for (std::size_t k = 0; k < d; ++k) {
      double u = x[k];
      if (u <= 0.0) {
        u = 0x1.0p-53;
        nudged_->fetch_add(1, std::memory_order_relaxed);
      }
      z[k] = norm_inv_cdf(u);
    }
    const double drift = o_.rate - 0.5 * o_.volatility * o_.volatility;
    double sum = 0.0, log_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double w = 0.0;
      for (std::size_t k = 0; k < d; ++k) w += a_(i, k) * z[k];
      const double log_s = std::log(o_.s0) + drift * o_.time(i) + o_.volatility * w;
      sum += std::exp(log_s);
      log_sum += log_s;
    }
    const double disc = std::exp(-o_.rate * o_.maturity);
    arithmetic = disc * std::max(sum / static_cast<double>(d) - o_.strike, 0.0);
    geometric = disc * std::max(std::exp(log_sum / static_cast<double>(d)) - o_.strike, 0.0);
  }

 private:
  AsianOption o_;
  detail::Matrix a_;
  std::shared_ptr<std::atomic<std::uint64_t>> nudged_;
};

inline Integrand asian_integrand(const AsianPathPayoffs& payoffs, AsianPayoff kind) {
  return {payoffs.option().steps, 1, [payoffs, kind](std::span<const double> x, std::span<double> y) {
            double a, g;
            payoffs(x, a, g);
            y[0] = kind == AsianPayoff::arithmetic_call ? a : g;
          }};
}

/// Two outputs (arithmetic, geometric) from the same path.
inline Integrand asian_pair_integrand(const AsianPathPayoffs& payoffs) {
  return {payoffs.option().steps, 2, [payoffs](std::span<const double> x, std::span<double> y) {
            payoffs(x, y[0], y[1]);
          }};
}

/// Exact price of the discretely monitored geometric-average call: the log of the
/// geometric mean is normal with mean ln S0 + (r - sigma^2/2) mean(t) and variance
/// sigma^2 sum_ij min(t_i, t_j) / d^2.
inline double geometric_asian_price(const AsianOption& o) {
  o.validate();
  const double d = static_cast<double>(o.steps);
  double t_mean = 0.0, c_sum = 0.0;
  for (std::size_t i = 0; i < o.steps; ++i) {
    t_mean += o.time(i) / d;
    for (std::size_t j = 0; j < o.steps; ++j) c_sum += std::min(o.time(i), o.time(j));
  }
  const double mean = std::log(o.s0) + (o.rate - 0.5 * o.volatility * o.volatility) * t_mean;
  const double var = o.volatility * o.volatility * c_sum / (d * d);
  const double disc = std::exp(-o.rate * o.maturity);
  if (var == 0.0) return disc * std::max(std::exp(mean) - o.strike, 0.0);
  if (o.strike == 0.0) return disc * std::exp(mean + 0.5 * var);
  const double sd = std::sqrt(var);
  const double d2 = (mean - std::log(o.strike)) / sd;
  return disc * (std::exp(mean + 0.5 * var) * norm_cdf(d2 + sd) - o.strike * norm_cdf(d2));
}

}  // namespace cubqmc
