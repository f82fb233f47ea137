#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cubqmc/detail/linalg.hpp"
#include "cubqmc/errors.hpp"
#include "cubqmc/integrand.hpp"
#include "cubqmc/special_functions.hpp"

namespace cubqmc {

/// P(a <= X <= b) for X ~ N(0, Sigma). Lower limits may be -infinity.
struct MvnProblem {
  std::vector<double> lower;
  std::vector<double> upper;
  detail::Matrix covariance;
  detail::Matrix cholesky;  // lower, L L^T = covariance

  std::size_t dimension() const noexcept { return upper.size(); }
};

inline MvnProblem make_mvn_problem(std::vector<double> lower, std::vector<double> upper,
                                   const detail::Matrix& covariance) {
  const std::size_t d = upper.size();
  if (d == 0) throw InputError("mvn: dimension must be positive");
  if (lower.size() != d || covariance.n != d)
    throw InputError("mvn: limits and covariance have inconsistent sizes");
  for (std::size_t i = 0; i < d; ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i])
      throw InputError("mvn: need lower <= upper in every coordinate");
    for (std::size_t j = 0; j < i; ++j)
      if (covariance(i, j) != covariance(j, i)) throw InputError("mvn: covariance is not symmetric");
  }
  MvnProblem p{std::move(lower), std::move(upper), covariance, detail::cholesky(covariance)};
  return p;
}

/// Unit variances, common correlation sigma, lower limits -infinity.
inline MvnProblem equicorrelated_problem(double sigma, std::vector<double> upper) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw DomainError("equicorrelation must lie in [0, 1)");
  const std::size_t d = upper.size();
  detail::Matrix c(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) c(i, j) = i == j ? 1.0 : sigma;
  return make_mvn_problem(std::vector<double>(d, -std::numeric_limits<double>::infinity()),
                          std::move(upper), c);
}

/// Genz's sequential conditioning: an integrand over [0,1)^(d-1) (dimension 1 and constant
/// when d = 1) whose integral is the probability. Values lie in [0, 1].
inline Integrand genz_integrand(const MvnProblem& p) {
  const std::size_t d = p.dimension();
  auto bound = [](double limit, double shift, double diag) {
    if (std::isinf(limit)) return limit > 0 ? 1.0 : 0.0;
    return norm_cdf((limit - shift) / diag);
  };
  const double d1 = bound(p.lower[0], 0.0, p.cholesky(0, 0));
  const double e1 = bound(p.upper[0], 0.0, p.cholesky(0, 0));
  if (d == 1) {
    const double v = e1 - d1;
    return scalar_integrand(1, [v](std::span<const double>) { return v; });
  }
  return scalar_integrand(d - 1, [p, d1, e1, bound, d](std::span<const double> x) {
    constexpr double lo = 0x1.0p-53, hi = 1.0 - 0x1.0p-53;
    std::vector<double> y(d);
    double di = d1, ei = e1, prod = e1 - d1;
    for (std::size_t i = 1; i < d; ++i) {
      if (!(prod > 0.0)) return 0.0;
      y[i - 1] = norm_inv_cdf(std::clamp(di + x[i - 1] * (ei - di), lo, hi));
      double shift = 0.0;
      for (std::size_t j = 0; j < i; ++j) shift += p.cholesky(i, j) * y[j];
      di = bound(p.lower[i], shift, p.cholesky(i, i));
      ei = bound(p.upper[i], shift, p.cholesky(i, i));
      prod *= ei - di;
    }
    return std::max(prod, 0.0);
  });
}

/// Equicorrelated case reduced to one dimension:
/// integral of phi(t) prod_j Phi((b_j + sqrt(sigma) t) / sqrt(1 - sigma)) over t in [-8, 8].
inline double mvn_equicorrelated_oracle(double sigma, std::span<const double> upper) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw DomainError("equicorrelation must lie in [0, 1)");
  const double a = std::sqrt(sigma), s = std::sqrt(1.0 - sigma);
  auto f = [&](double t) {
    double v = norm_pdf(t);
    for (double b : upper) v *= norm_cdf((b + a * t) / s);
    return v;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -8.0, 8.0, 30, 1e-10);
}

/// Numeric CSV table: comma or whitespace separated, an optional non-numeric header line,
/// blank lines skipped. Rows may differ in length; callers check shapes.
inline std::vector<std::vector<double>> load_numeric_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    bool numeric = true;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) numeric = false;
        row.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ParseError("non-numeric field", line_no);
    }
    if (row.empty()) continue;
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline detail::Matrix load_covariance_csv(std::istream& in) {
  const auto rows = load_numeric_csv(in);
  detail::Matrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ParseError("covariance must be square", i + 1);
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

/// A limit vector, one value per line or all on one line ("-inf"/"inf" accepted).
inline std::vector<double> load_vector_csv(std::istream& in) {
  std::vector<double> out;
  for (const auto& row : load_numeric_csv(in)) out.insert(out.end(), row.begin(), row.end());
  return out;
}

}  // namespace cubqmc
