#pragma once

// Exact log-densities: Kibble bivariate Gamma, bivariate Weibull with
// regression means, the exponential-correlation chain on the line, the
// bivariate log-Gaussian, and the Weibull / log-Gaussian marginals.

#include <chi2field/correlation.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/model.hpp>
#include <chi2field/site.hpp>
#include <chi2field/specialfn.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

namespace chi2field {

/// One pair of positive observations with the parent correlation and mean of each.
struct PairObservation {
  double value_i = 1.0;
  double value_j = 1.0;
  double rho = 0.0;
  double mu_i = 1.0;
  double mu_j = 1.0;
};

namespace detail {

inline void check_rho(double rho) {
  if (!(std::fabs(rho) < 1.0)) throw domain_error("correlation must satisfy |rho| < 1");
}

inline void check_positive_values(double a, double b, const char* what) {
  if (!(a > 0.0 && b > 0.0)) throw domain_error(std::string(what) + ": values must be positive");
}

inline void check_m(int m) {
  if (m < 1) throw domain_error("m must be a positive integer");
}

}  // namespace detail

/// Gamma(m/2, rate m/2) log-density, the scaled-χ² marginal.
inline double chi2_marginal_log_density(double x, int m) {
  detail::check_m(m);
  if (!(x > 0.0)) throw domain_error("chi2_marginal_log_density: x must be positive");
  const double h = 0.5 * m;
  return h * std::log(h) - log_gamma(h) + (h - 1.0) * std::log(x) - h * x;
}

/// log of the Kibble bivariate Gamma density of (X_m(s₁), X_m(s₂)).
inline double kibble_log_density(double x1, double x2, double rho, int m) {
  detail::check_m(m);
  detail::check_rho(rho);
  detail::check_positive_values(x1, x2, "kibble_log_density");
  const double md = static_cast<double>(m);
  const double order = 0.5 * md - 1.0;
  const double rho2 = rho * rho;
  const double one_minus = 1.0 - rho2;
  const double z = md * std::fabs(rho) * std::sqrt(x1 * x2) / one_minus;
  return md * (std::log(md) - std::numbers::ln2) - log_gamma(0.5 * md) -
         0.5 * md * std::log(one_minus) + order * (std::log(x1) + std::log(x2)) -
         md * (x1 + x2) / (2.0 * one_minus) + log_bessel_i_normalized(order, z);
}

/// Joint log-density of X_m at ordered points of the line under exponential
/// parent correlation; `adjacent_rho[i]` is ρ between points i and i+1.
inline double chi2_chain_log_density(std::span<const double> x, std::span<const double> adjacent_rho,
                                     int m) {
  detail::check_m(m);
  const std::size_t n = x.size();
  if (n == 0) throw domain_error("chi2_chain_log_density: no observations");
  if (adjacent_rho.size() + 1 != n)
    throw domain_error("chi2_chain_log_density: need n - 1 adjacent correlations");
  for (double v : x)
    if (!(v > 0.0)) throw domain_error("chi2_chain_log_density: values must be positive");
  if (n == 1) return chi2_marginal_log_density(x[0], m);

  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double order = 0.5 * md - 1.0;
  std::vector<double> rho2(n - 1), one_minus(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    detail::check_rho(adjacent_rho[i]);
    rho2[i] = adjacent_rho[i] * adjacent_rho[i];
    one_minus[i] = 1.0 - rho2[i];
  }

  double log_f = (0.5 * md - 1.0 + nd) * std::log(md) + (1.0 - 0.5 * md - nd) * std::numbers::ln2 +
                 (0.25 * md - 0.5) * (std::log(x[0]) + std::log(x[n - 1])) - log_gamma(0.5 * md);
  log_f -= md * x[0] / (2.0 * one_minus[0]);
  log_f -= md * x[n - 1] / (2.0 * one_minus[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i)
    log_f -= md * (1.0 - rho2[i - 1] * rho2[i]) * x[i] / (2.0 * one_minus[i - 1] * one_minus[i]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    // -log(1-ρ²) - ν log|ρ| + log I_ν(z), with the |ρ| power folded into the
    // normalized Bessel term so that ρ = 0 stays finite.
    const double root = std::sqrt(x[i] * x[i + 1]);
    const double z = md * std::fabs(adjacent_rho[i]) * root / one_minus[i];
    log_f += -std::log(one_minus[i]) + order * std::log(md * root / (2.0 * one_minus[i])) +
             log_bessel_i_normalized(order, z);
  }
  return log_f;
}

/// x = (y / (ν(κ) μ))^κ, the scaled-χ²₂ value behind a Weibull observation.
inline double weibull_to_chi2(double y, double mu, double kappa) {
  return std::pow(y / (weibull_nu(kappa) * mu), kappa);
}

/// Bivariate log-density of (Y(s_i), Y(s_j)) for the Weibull regression field.
inline double weibull_pair_log_density(const PairObservation& obs, double kappa) {
  if (!(kappa > 0.0)) throw domain_error("weibull_pair_log_density: kappa must be positive");
  detail::check_rho(obs.rho);
  detail::check_positive_values(obs.value_i, obs.value_j, "weibull_pair_log_density");
  detail::check_positive_values(obs.mu_i, obs.mu_j, "weibull_pair_log_density (means)");
  const double log_scale = std::log(weibull_nu(kappa));
  const double log_xi = kappa * (std::log(obs.value_i / obs.mu_i) - log_scale);
  const double log_xj = kappa * (std::log(obs.value_j / obs.mu_j) - log_scale);
  const double xi = std::exp(log_xi);
  const double xj = std::exp(log_xj);
  // Jacobian dx/dy = κ x / y for each coordinate.
  const double jacobian = 2.0 * std::log(kappa) + log_xi + log_xj - std::log(obs.value_i) -
                          std::log(obs.value_j);
  return kibble_log_density(xi, xj, obs.rho, 2) + jacobian;
}

/// Chain log-density from precomputed means and adjacent parent correlations.
inline double weibull_chain_log_density(std::span<const double> values, std::span<const double> means,
                                        std::span<const double> adjacent_rho, double kappa) {
  if (!(kappa > 0.0)) throw domain_error("weibull_chain_log_density: kappa must be positive");
  if (values.size() != means.size())
    throw domain_error("weibull_chain_log_density: values and means differ in length");
  const double log_scale = std::log(weibull_nu(kappa));
  const double log_kappa = std::log(kappa);
  std::vector<double> x(values.size());
  double jacobian = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0 && means[i] > 0.0))
      throw domain_error("weibull_chain_log_density: values and means must be positive");
    const double log_x = kappa * (std::log(values[i] / means[i]) - log_scale);
    x[i] = std::exp(log_x);
    jacobian += log_kappa + log_x - std::log(values[i]);
  }
  return chi2_chain_log_density(x, adjacent_rho, 2) + jacobian;
}

/// Full joint log-density of a Weibull field observed along the line
/// (strictly increasing one-dimensional sites, exponential parent correlation).
inline double markov_chain_log_density(std::span<const double> values, std::span<const Site> sites,
                                       const WeibullFieldModel& model) {
  model.validate();
  const auto* exp_corr = std::get_if<Exponential>(&model.corr);
  if (!exp_corr) throw domain_error("markov_chain_log_density: requires exponential correlation");
  if (values.size() != sites.size())
    throw domain_error("markov_chain_log_density: values and sites differ in length");
  if (values.empty()) throw domain_error("markov_chain_log_density: no observations");
  std::vector<double> means(values.size());
  std::vector<double> rho(values.size() - 1);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].coords.size() != 1)
      throw domain_error("markov_chain_log_density: sites must be one-dimensional");
    means[i] = mean_function(model.beta, sites[i]);
    if (i > 0) {
      const double gap = sites[i].coords[0] - sites[i - 1].coords[0];
      if (!(gap > 0.0)) throw domain_error("markov_chain_log_density: sites must be strictly increasing");
      rho[i - 1] = std::exp(-gap / exp_corr->phi);
    }
  }
  return weibull_chain_log_density(values, means, rho, model.kappa);
}

/// Bivariate log-Gaussian log-density: log Y ~ N(log μ - σ²/2, σ²) with log-scale correlation ρ.
inline double loggaussian_pair_log_density(const PairObservation& obs, double sigma2) {
  if (!(sigma2 > 0.0)) throw domain_error("loggaussian_pair_log_density: sigma2 must be positive");
  detail::check_rho(obs.rho);
  detail::check_positive_values(obs.value_i, obs.value_j, "loggaussian_pair_log_density");
  detail::check_positive_values(obs.mu_i, obs.mu_j, "loggaussian_pair_log_density (means)");
  const double sigma = std::sqrt(sigma2);
  const double li = (std::log(obs.value_i / obs.mu_i) + 0.5 * sigma2) / sigma;
  const double lj = (std::log(obs.value_j / obs.mu_j) + 0.5 * sigma2) / sigma;
  const double one_minus = 1.0 - obs.rho * obs.rho;
  return -std::log(2.0 * std::numbers::pi) - std::log(sigma2) - 0.5 * std::log(one_minus) -
         (li * li - 2.0 * obs.rho * li * lj + lj * lj) / (2.0 * one_minus) -
         std::log(obs.value_i) - std::log(obs.value_j);
}

/// Weibull(κ, scale): F(y) = 1 - exp(-(y/scale)^κ).
struct WeibullMarginal {
  double kappa = 1.0;
  double scale = 1.0;

  WeibullMarginal(double kappa_, double scale_) : kappa(kappa_), scale(scale_) {
    if (!(kappa > 0.0 && scale > 0.0))
      throw domain_error("WeibullMarginal: kappa and scale must be positive");
  }

  double log_pdf(double y) const {
    if (!(y > 0.0)) return -std::numeric_limits<double>::infinity();
    const double log_r = std::log(y / scale);
    return std::log(kappa / scale) + (kappa - 1.0) * log_r - std::exp(kappa * log_r);
  }
  double pdf(double y) const { return y > 0.0 ? std::exp(log_pdf(y)) : 0.0; }
  double cdf(double y) const { return y > 0.0 ? -std::expm1(-std::pow(y / scale, kappa)) : 0.0; }
  double survival(double y) const { return y > 0.0 ? std::exp(-std::pow(y / scale, kappa)) : 1.0; }
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw domain_error("WeibullMarginal::quantile: p must lie in (0, 1)");
    return scale * std::pow(-std::log1p(-p), 1.0 / kappa);
  }
  double mean() const { return scale * std::exp(log_gamma(1.0 + 1.0 / kappa)); }
};

/// Marginal of Y(s) = μ W(s): Weibull(κ, ν(κ)μ).
inline WeibullMarginal weibull_field_marginal(double kappa, double mu) {
  return WeibullMarginal(kappa, weibull_nu(kappa) * mu);
}

/// Log-Gaussian with mean e^{mu}: log Y ~ N(mu - σ²/2, σ²).
struct LogGaussianMarginal {
  double mu = 0.0;
  double sigma2 = 1.0;

  LogGaussianMarginal(double mu_, double sigma2_) : mu(mu_), sigma2(sigma2_) {
    if (!(sigma2 > 0.0)) throw domain_error("LogGaussianMarginal: sigma2 must be positive");
  }

  double standardized(double y) const { return (std::log(y) - (mu - 0.5 * sigma2)) / std::sqrt(sigma2); }
  double log_pdf(double y) const {
    if (!(y > 0.0)) return -std::numeric_limits<double>::infinity();
    const double l = standardized(y);
    return -0.5 * l * l - 0.5 * std::log(2.0 * std::numbers::pi * sigma2) - std::log(y);
  }
  double pdf(double y) const { return y > 0.0 ? std::exp(log_pdf(y)) : 0.0; }
  double cdf(double y) const { return y > 0.0 ? normal_cdf(standardized(y)) : 0.0; }
  double quantile(double p) const {
    return std::exp(mu - 0.5 * sigma2 + std::sqrt(sigma2) * normal_quantile(p));
  }
  double mean() const { return std::exp(mu); }
};

using PlugInMarginal = std::variant<WeibullMarginal, LogGaussianMarginal>;

}  // namespace chi2field
