#pragma once

// Copula density of the scaled-χ² pair shown on standard-normal margins,
// i.e. the density of (Φ⁻¹(F(X₁)), Φ⁻¹(F(X₂))) with F the Gamma(m/2, m/2) cdf.

#include <chi2field/density.hpp>
#include <chi2field/specialfn.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace chi2field {

struct CopulaGridPoint {
  double z1 = 0.0;
  double z2 = 0.0;
  double density = 0.0;
  /// false when the Gamma quantile could not be inverted at this point.
  bool ok = true;
};

/// Gamma(m/2, m/2) quantile of Φ(z), inverted on the tail that keeps precision.
inline double chi2_quantile_of_normal_score(double z, int m) {
  const double shape = 0.5 * m;
  const double x = z <= 0.0 ? boost::math::gamma_p_inv(shape, normal_cdf(z))
                            : boost::math::gamma_q_inv(shape, normal_cdf(-z));
  return x / shape;
}

inline std::vector<CopulaGridPoint> copula_density_normal_scale(
    std::span<const std::pair<double, double>> grid, double rho, int m) {
  if (!(std::fabs(rho) < 1.0)) throw domain_error("copula_density_normal_scale: |rho| must be < 1");
  if (m < 1) throw domain_error("copula_density_normal_scale: m must be a positive integer");
  std::vector<CopulaGridPoint> out;
  out.reserve(grid.size());
  for (const auto& [z1, z2] : grid) {
    CopulaGridPoint p{z1, z2, std::numeric_limits<double>::quiet_NaN(), false};
    try {
      const double x1 = chi2_quantile_of_normal_score(z1, m);
      const double x2 = chi2_quantile_of_normal_score(z2, m);
      if (x1 > 0.0 && x2 > 0.0 && std::isfinite(x1) && std::isfinite(x2)) {
        const double log_c = kibble_log_density(x1, x2, rho, m) - chi2_marginal_log_density(x1, m) -
                             chi2_marginal_log_density(x2, m);
        p.density = std::exp(log_c) * normal_pdf(z1) * normal_pdf(z2);
        p.ok = std::isfinite(p.density);
      }
    } catch (const std::exception&) {
      p.ok = false;
    }
    out.push_back(p);
  }
  return out;
}

/// Regular (n × n) grid over [lo, hi]², row-major in z1.
inline std::vector<std::pair<double, double>> square_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw domain_error("square_grid: need n >= 2 and hi > lo");
  std::vector<std::pair<double, double>> g;
  g.reserve(n * n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      g.emplace_back(lo + step * static_cast<double>(i), lo + step * static_cast<double>(j));
  return g;
}

}  // namespace chi2field
