#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "cubqmc/detail/linalg.hpp"
#include "cubqmc/engine.hpp"
#include "cubqmc/transforms.hpp"

namespace cubqmc {

enum class BetaPolicy { freeze_after_first_level, refresh_each_level };

/// Controls g_1..g_q with exact means. The integrand handed to cv_integrate has outputs
/// (f, g_1, ..., g_q).
struct ControlVariateSpec {
  std::vector<double> control_means;
  BetaPolicy policy = BetaPolicy::freeze_after_first_level;

  std::size_t controls() const noexcept { return control_means.size(); }
  void validate() const {
    if (control_means.empty()) throw InputError("control variates: need at least one control");
    for (double m : control_means)
      if (!std::isfinite(m)) throw InputError("control variates: control means must be finite");
  }
};

struct BetaFit {
  std::vector<double> beta;
  bool rank_deficient = false;
};

/// Signed (Walsh) or complex (lattice) discrete coefficients of sequence-ordered data.
inline std::vector<std::complex<double>> signed_coefficients(Family family, std::span<const double> values) {
  if (family == Family::lattice) return lattice_dft(values);
  const auto w = fwht(values);
  return {w.begin(), w.end()};
}

/// Least squares over an explicit set of coefficient bins:
/// beta = argmin_b sum_{k in bins} |f_k - b^T g_k|^2. Complex values enter as stacked real
/// and imaginary parts.
inline BetaFit beta_qmc(std::span<const std::complex<double>> f,
                        const std::vector<std::vector<std::complex<double>>>& g,
                        std::span<const std::uint64_t> bins) {
  const std::size_t q = g.size();
  detail::Matrix a(q);
  std::vector<double> b(q, 0.0);
  for (const auto k : bins) {
    if (k >= f.size()) throw InputError("beta_qmc: bin index out of range");
    for (std::size_t i = 0; i < q; ++i) {
      b[i] += (std::conj(g[i][k]) * f[k]).real();
      for (std::size_t j = 0; j < q; ++j) a(i, j) += (std::conj(g[i][k]) * g[j][k]).real();
    }
  }
  if (auto x = detail::solve_spd(a, b)) return {*x, false};
  return {std::vector<double>(q, 0.0), true};
}

/// Wavenumbers kappa in [floor(2^(m-r-1)), 2^m), mapped to bins through `kappa_map`
/// (identity when empty).
inline std::vector<std::uint64_t> beta_bins(int m, int r, std::span<const std::uint64_t> kappa_map = {}) {
  const std::size_t lo = m - r - 1 >= 0 ? std::size_t{1} << (m - r - 1) : 0;
  const std::size_t hi = std::size_t{1} << m;
  if (!kappa_map.empty() && kappa_map.size() < hi) throw InputError("beta_qmc: kappa map shorter than 2^m");
  std::vector<std::uint64_t> bins;
  for (std::size_t k = lo; k < hi; ++k) bins.push_back(kappa_map.empty() ? k : kappa_map[k]);
  return bins;
}

/// Coefficient-range least squares over kappa in [floor(2^(m-r-1)), 2^m), natural order.
inline BetaFit beta_qmc(std::span<const std::complex<double>> f,
                        const std::vector<std::vector<std::complex<double>>>& g, int m, int r) {
  if (f.size() < (std::size_t{1} << m)) throw InputError("beta_qmc: coefficient vector shorter than 2^m");
  return beta_qmc(f, g, beta_bins(m, r));
}

/// Real-valued convenience overload (digital coefficients).
inline BetaFit beta_qmc(std::span<const double> f, const std::vector<std::vector<double>>& g, int m, int r) {
  std::vector<std::complex<double>> fc(f.begin(), f.end());
  std::vector<std::vector<std::complex<double>>> gc;
  for (const auto& gi : g) gc.emplace_back(gi.begin(), gi.end());
  return beta_qmc(fc, gc, m, r);
}

/// Least absolute deviations over the same coefficient range, by iteratively reweighted
/// least squares. Slower; for comparison only.
inline BetaFit beta_qmc_lad(std::span<const std::complex<double>> f,
                            const std::vector<std::vector<std::complex<double>>>& g, int m, int r,
                            int iterations = 50) {
  BetaFit fit = beta_qmc(f, g, m, r);
  if (fit.rank_deficient) return fit;
  const std::size_t q = g.size();
  const std::size_t lo = m - r - 1 >= 0 ? std::size_t{1} << (m - r - 1) : 0;
  const std::size_t hi = std::size_t{1} << m;
  for (int it = 0; it < iterations; ++it) {
    double scale = 0.0;
    std::vector<double> resid(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) {
      std::complex<double> e = f[k];
      for (std::size_t i = 0; i < q; ++i) e -= fit.beta[i] * g[i][k];
      resid[k - lo] = std::abs(e);
      scale = std::max(scale, resid[k - lo]);
    }
    const double floor = std::max(scale * 1e-10, 1e-300);
    detail::Matrix a(q);
    std::vector<double> b(q, 0.0);
    for (std::size_t k = lo; k < hi; ++k) {
      const double w = 1.0 / std::max(resid[k - lo], floor);
      for (std::size_t i = 0; i < q; ++i) {
        b[i] += w * (std::conj(g[i][k]) * f[k]).real();
        for (std::size_t j = 0; j < q; ++j) a(i, j) += w * (std::conj(g[i][k]) * g[j][k]).real();
      }
    }
    auto x = detail::solve_spd(a, b);
    if (!x) break;
    fit.beta = *x;
  }
  return fit;
}

/// Sample estimate of cov(f, g) var(g)^-1.
inline BetaFit beta_mc(std::span<const double> f, const std::vector<std::vector<double>>& g) {
  const std::size_t n = f.size(), q = g.size();
  if (n < 2) throw InputError("beta_mc: need at least two samples");
  auto mean = [n](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(n);
  };
  const double fm = mean(f);
  std::vector<double> gm(q);
  for (std::size_t i = 0; i < q; ++i) gm[i] = mean(g[i]);
  detail::Matrix a(q);
  std::vector<double> b(q, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < q; ++i) {
      const double gi = g[i][s] - gm[i];
      b[i] += gi * (f[s] - fm);
      for (std::size_t j = 0; j < q; ++j) a(i, j) += gi * (g[j][s] - gm[j]);
    }
  }
  if (auto x = detail::solve_spd(a, b)) return {*x, false};
  return {std::vector<double>(q, 0.0), true};
}

/// h_beta = f + beta^T (mu_g - g), pointwise on cached data.
inline std::vector<double> control_variate_values(std::span<const double> f,
                                                  const std::vector<std::vector<double>>& g,
                                                  std::span<const double> beta,
                                                  std::span<const double> control_means) {
  std::vector<double> h(f.begin(), f.end());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t s = 0; s < h.size(); ++s) h[s] += beta[i] * (control_means[i] - g[i][s]);
  return h;
}

struct CvResult {
  CubatureResult result;
  BetaFit fit;             // beta used at the final level
  BetaFit first_level_fit; // beta from the first level
};

/// Adaptive cubature of h_beta. `joint` evaluates (f, g_1..g_q) at the same point. Under
/// the freeze policy beta is fitted once at m = l_star + r.
inline CvResult cv_integrate(const Integrand& joint, const ControlVariateSpec& spec,
                             const Tolerance& tol, const ConeParams& cone,
                             const SequenceGenerator& gen, std::uint64_t seed = 0) {
  spec.validate();
  if (joint.outputs != spec.controls() + 1)
    throw InputError("control variates: integrand must provide f followed by each control");
  struct State {
    std::optional<BetaFit> fit;
    BetaFit first;
  };
  auto state = std::make_shared<State>();
  const std::size_t q = spec.controls();
  LedgerTransform transform = [state, spec, q, r = cone.r](const CoefficientLedger& raw) {
    std::vector<std::vector<double>> g;
    for (std::size_t i = 0; i < q; ++i) g.push_back(raw[i + 1].values);
    const auto& f = raw[0].values;
    if (!state->fit || spec.policy == BetaPolicy::refresh_each_level) {
      const auto fc = signed_coefficients(raw.family(), f);
      std::vector<std::vector<std::complex<double>>> gc;
      for (const auto& gi : g) gc.push_back(signed_coefficients(raw.family(), gi));
      const bool first = !state->fit.has_value();
      // Range taken in f's own kappa order, so the fit targets the coefficients the
      // error bound reads.
      state->fit = beta_qmc(fc, gc, beta_bins(raw.level(), r, raw[0].kappa_map));
      if (first) state->first = *state->fit;
    }
    std::vector<std::vector<double>> h{control_variate_values(f, g, state->fit->beta, spec.control_means)};
    return CoefficientLedger(raw.family(), std::move(h));
  };
  CvResult out;
  out.result = integrate(joint, identity_functional(), tol, cone, gen, seed, transform);
  out.fit = *state->fit;
  out.first_level_fit = state->first;
  return out;
}

inline CvResult cv_integrate(const Integrand& joint, const ControlVariateSpec& spec,
                             const Tolerance& tol, const ConeParams& cone, Family family,
                             std::uint64_t seed, const GeneratorSources& sources = {}) {
  return cv_integrate(joint, spec, tol, cone, make_generator(family, joint.dimension, seed, sources), seed);
}

struct CvComparisonRow {
  std::uint64_t seed = 0;
  std::uint64_t n_plain = 0;
  std::uint64_t n_cv = 0;
  double beta = 0.0;
  double err_plain = 0.0;
  double err_cv = 0.0;
};

inline void write_cv_report(std::ostream& out, std::span<const CvComparisonRow> rows) {
  out << "seed,n_plain,n_cv,beta,err_plain,err_cv\n";
  for (const auto& r : rows)
    out << r.seed << ',' << r.n_plain << ',' << r.n_cv << ',' << format_double(r.beta) << ','
        << format_double(r.err_plain) << ',' << format_double(r.err_cv) << '\n';
}

}  // namespace cubqmc
