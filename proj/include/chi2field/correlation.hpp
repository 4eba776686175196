#pragma once

// Correlation families of the parent Gaussian process and the correlations
// they induce on the scaled-χ² and Weibull fields.

#include <chi2field/errors.hpp>
#include <chi2field/site.hpp>
#include <chi2field/specialfn.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <type_traits>
#include <variant>

namespace chi2field {

/// ρ(h) = exp(-‖h‖/φ).
struct Exponential {
  double phi = 1.0;
};

/// Standard Matérn with a single smoothness ν: 2^{1-ν}/Γ(ν) (‖h‖/φ)^ν K_ν(‖h‖/φ).
struct Matern {
  double phi = 1.0;
  double nu = 0.5;
};

/// Non-separable space-time family: a generalized Cauchy in space combined
/// with a Wendland taper in time, linked through the interaction φ_ST.
///
///   ρ(h,u) = (1 + ‖h‖/φ_S)^{-2.5} · (1 - (|u|/φ_T) (1 + ‖h‖/φ_S)^{φ_ST})_+^{3.5}
struct SpaceTimeGW {
  double phi_s = 1.0;
  double phi_t = 1.0;
  double phi_st = 0.0;
};

using CorrelationModel = std::variant<Exponential, Matern, SpaceTimeGW>;

inline constexpr double kCauchyExponent = 2.5;
inline constexpr double kWendlandExponent = 3.5;

inline void validate(const CorrelationModel& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Exponential>) {
          if (!(m.phi > 0.0)) throw domain_error("Exponential: phi must be positive");
        } else if constexpr (std::is_same_v<T, Matern>) {
          if (!(m.phi > 0.0)) throw domain_error("Matern: phi must be positive");
          if (!(m.nu > 0.0)) throw domain_error("Matern: nu must be positive");
        } else {
          if (!(m.phi_s > 0.0)) throw domain_error("SpaceTimeGW: phi_s must be positive");
          if (!(m.phi_t > 0.0)) throw domain_error("SpaceTimeGW: phi_t must be positive");
          if (!(m.phi_st >= 0.0 && m.phi_st <= 1.0))
            throw domain_error("SpaceTimeGW: phi_st must lie in [0, 1]");
        }
      },
      model);
}

inline double cauchy_spatial(double h, double phi_s) {
  return std::pow(1.0 + h / phi_s, -kCauchyExponent);
}

inline double wendland_temporal(double u, double phi_t) {
  const double base = 1.0 - u / phi_t;
  return base > 0.0 ? std::pow(base, kWendlandExponent) : 0.0;
}

inline double matern_corr(double h, double phi, double nu) {
  if (h == 0.0) return 1.0;
  const double r = h / phi;
  const double log_prefactor = (1.0 - nu) * std::log(2.0) - log_gamma(nu) + nu * std::log(r);
  const double k = bessel_k(nu, r);
  if (k == 0.0) return 0.0;
  return std::exp(log_prefactor + std::log(k));
}

/// Parent correlation ρ(h, u).
inline double corr(const CorrelationModel& model, Lag lag) {
  if (!(lag.spatial >= 0.0 && lag.temporal >= 0.0))
    throw domain_error("corr: lag components must be nonnegative");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Exponential>) {
          return std::exp(-lag.spatial / m.phi);
        } else if constexpr (std::is_same_v<T, Matern>) {
          return matern_corr(lag.spatial, m.phi, m.nu);
        } else {
          const double g = 1.0 + lag.spatial / m.phi_s;
          const double base = 1.0 - (lag.temporal / m.phi_t) * std::pow(g, m.phi_st);
          const double temporal = base > 0.0 ? std::pow(base, kWendlandExponent) : 0.0;
          return std::pow(g, -kCauchyExponent) * temporal;
        }
      },
      model);
}

/// Correlation of the scaled-χ² field: ρ².
inline double chi2_corr(const CorrelationModel& model, Lag lag) {
  const double r = corr(model, lag);
  return r * r;
}

/// Weibull variance factor Γ(1+2/κ)ν²(κ) - 1 with ν(κ) = 1/Γ(1+1/κ).
inline double weibull_variance_factor(double kappa) {
  if (!(kappa > 0.0)) throw domain_error("kappa must be positive");
  return std::expm1(log_gamma(1.0 + 2.0 / kappa) - 2.0 * log_gamma(1.0 + 1.0 / kappa));
}

/// Weibull-field correlation as a function of the parent ρ²:
///   ρ_W = [₂F₁(-1/κ,-1/κ;1;ρ²) - 1] / [Γ(1+2/κ)ν²(κ) - 1].
inline double weibull_corr_from_rho2(double rho2, double kappa, const SeriesControl& ctl = {}) {
  if (!(kappa > 0.0)) throw domain_error("weibull_corr: kappa must be positive");
  if (!(rho2 >= 0.0 && rho2 <= 1.0)) throw domain_error("weibull_corr: rho^2 must lie in [0, 1]");
  if (rho2 == 0.0) return 0.0;
  const double a = -1.0 / kappa;
  const double bracket = hypergeom_2f1(a, a, 1.0, rho2, ctl, /*minus_one=*/true);
  return bracket / weibull_variance_factor(kappa);
}

inline double weibull_corr(const CorrelationModel& model, Lag lag, double kappa,
                           const SeriesControl& ctl = {}) {
  return weibull_corr_from_rho2(chi2_corr(model, lag), kappa, ctl);
}

/// Lower Cholesky factor; throws not_positive_definite with the failing pivot.
inline Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& matrix) {
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Locate the pivot with an unblocked factorization (failure path only).
  const Eigen::Index n = matrix.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = matrix(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) throw not_positive_definite(static_cast<std::size_t>(j));
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (matrix(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  throw not_positive_definite(static_cast<std::size_t>(n - 1));
}

/// Parent correlation matrix R_ij = ρ(s_i - s_j). Exact duplicate sites are rejected.
inline Eigen::MatrixXd corr_matrix(const CorrelationModel& model, std::span<const Site> sites,
                                   DistanceMetric metric = DistanceMetric::euclidean) {
  validate(model);
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (same_location(sites[i], sites[j]))
        throw domain_error("corr_matrix: duplicate sites " + std::to_string(j) + " and " +
                           std::to_string(i));
      const double v = corr(model, lag_between(sites[i], sites[j], metric));
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

}  // namespace chi2field
