#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cubqmc/errors.hpp"
#include "cubqmc/ledger.hpp"

namespace cubqmc {

/// Parameters of the cone of integrands whose Fourier coefficients decay steadily.
///
/// The error-bound factor is C(m) = c_scale * 2^-m and the product of the two inflation
/// functions used by the cone-membership check is rho(a) = min(rho_scale * 2^-a, 0.99).
struct ConeParams {
  int l_star = 6;
  int r = 4;
  double c_scale = 5.0;
  double rho_scale = 5.0;
  int m_max = 24;

  static constexpr double kRhoCap = 0.99;

  int min_level() const noexcept { return l_star + r; }
  double bound_factor(int m) const { return c_scale * std::ldexp(1.0, -m); }
  double rho(int a) const { return std::min(rho_scale * std::ldexp(1.0, -a), kRhoCap); }

  void validate() const {
    if (l_star < 1) throw InputError("cone: l_star must be >= 1");
    if (r < 1) throw InputError("cone: r must be >= 1");
    if (m_max < l_star + r) throw InputError("cone: m_max must be >= l_star + r");
    if (!(c_scale > 0.0) || !std::isfinite(c_scale)) throw InputError("cone: C_scale must be > 0");
    if (!(rho_scale >= 0.0) || !std::isfinite(rho_scale))
      throw InputError("cone: rho_scale must be >= 0");
    if (!(rho(r) < 1.0)) throw InputError("cone: rho(r) must be < 1");
  }

  /// Flat key=value block: l_star, r, C_scale, rho_scale, m_max.
  std::string to_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "l_star=" << l_star << "\nr=" << r << "\nC_scale=" << c_scale
        << "\nrho_scale=" << rho_scale << "\nm_max=" << m_max << '\n';
    return out.str();
  }

  static ConeParams from_text(std::istream& in) {
    ConeParams p;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
      const std::string key = line.substr(0, eq);
      std::istringstream value(line.substr(eq + 1));
      bool ok = false;
      if (key == "l_star") ok = static_cast<bool>(value >> p.l_star);
      else if (key == "r") ok = static_cast<bool>(value >> p.r);
      else if (key == "C_scale") ok = static_cast<bool>(value >> p.c_scale);
      else if (key == "rho_scale") ok = static_cast<bool>(value >> p.rho_scale);
      else if (key == "m_max") ok = static_cast<bool>(value >> p.m_max);
      else throw ParseError("unknown cone key '" + key + "'", line_no);
      if (!ok) throw ParseError("bad value for '" + key + "'", line_no);
    }
    p.validate();
    return p;
  }
};

/// Sample mean and data-based error bound for one integrand output at n samples.
struct IntervalEstimate {
  double mean = 0.0;
  double err = 0.0;
  std::uint64_t n = 0;
};

/// err = C(m) * S~_{m-r,m} for every output of the ledger.
inline std::vector<IntervalEstimate> error_bound(const CoefficientLedger& ledger,
                                                 const ConeParams& params) {
  const int m = ledger.level();
  if (m < params.min_level())
    throw LevelTooLowError("error bound needs m >= l_star + r = " +
                           std::to_string(params.min_level()) + ", got m = " + std::to_string(m));
  std::vector<IntervalEstimate> out;
  out.reserve(ledger.outputs());
  for (std::size_t k = 0; k < ledger.outputs(); ++k) {
    const auto& c = ledger.coordinate(k);
    out.push_back({c.mean, params.bound_factor(m) * c.tiers[m - params.r], ledger.size()});
  }
  return out;
}

/// A failed cone-membership check: the tier-l sum at level m is too large compared
/// with the tier-l sum at level m_prime.
struct ConeViolation {
  std::size_t output = 0;
  int l = 0;
  int m = 0;
  int m_prime = 0;
  double lhs = 0.0;  // S~_{l,m} / (1 + rho(m - l))
  double rhs = 0.0;  // S~_{l,m'} / (1 - rho(m' - l))
};

/// Check S~_{l,m}/(1 + rho(m-l)) <= S~_{l,m'}/(1 - rho(m'-l)); skipped when rho(m'-l) >= 1.
/// Differences within the rounding-error floor of the two tier sums do not count.
inline std::optional<ConeViolation> necessary_condition(const TierSums& small, const TierSums& large,
                                                        int l, const ConeParams& params,
                                                        std::size_t output = 0) {
  const int m = small.level(), mp = large.level();
  if (l < params.l_star || l > std::min(m, mp)) return std::nullopt;
  const double rho_p = params.rho(mp - l);
  if (!(rho_p < 1.0)) return std::nullopt;
  const double lhs = small[l] / (1.0 + params.rho(m - l));
  const double rhs = large[l] / (1.0 - rho_p);
  const double slack = small.noise_floor(l) + large.noise_floor(l) / (1.0 - rho_p);
  if (lhs <= rhs + slack) return std::nullopt;
  return ConeViolation{output, l, m, mp, lhs, rhs};
}

/// All violations between two ledgers of the same integrand, l over [l_star, min(m, m')].
inline std::vector<ConeViolation> necessary_condition(const CoefficientLedger& small,
                                                      const CoefficientLedger& large,
                                                      const ConeParams& params) {
  std::vector<ConeViolation> out;
  const int top = std::min(small.level(), large.level());
  for (std::size_t k = 0; k < std::min(small.outputs(), large.outputs()); ++k)
    for (int l = params.l_star; l <= top; ++l)
      if (auto v = necessary_condition(small[k].tiers, large[k].tiers, l, params, k))
        out.push_back(*v);
  return out;
}

inline std::ostream& operator<<(std::ostream& out, const ConeViolation& v) {
  return out << "cone violation: output " << v.output << ", l=" << v.l << ", m=" << v.m
             << ", m'=" << v.m_prime << ": " << v.lhs << " > " << v.rhs;
}

}  // namespace cubqmc
