#pragma once

#include <chi2field/correlation.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/site.hpp>
#include <chi2field/specialfn.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace chi2field {

/// ν(κ) = 1/Γ(1 + 1/κ), the scale that gives the Weibull field unit mean.
inline double weibull_nu(double kappa) {
  if (!(kappa > 0.0)) throw domain_error("kappa must be positive");
  return std::exp(-log_gamma(1.0 + 1.0 / kappa));
}

/// Y(s) = μ(s) W(s) with W = ν(κ) X₂^{1/κ} and log μ(s) = β·[1, v(s)].
struct WeibullFieldModel {
  double kappa = 1.0;
  std::vector<double> beta{0.0};
  CorrelationModel corr = Exponential{};

  void validate() const {
    if (!(kappa > 0.0)) throw domain_error("WeibullFieldModel: kappa must be positive");
    for (double b : beta)
      if (!std::isfinite(b)) throw domain_error("WeibullFieldModel: beta must be finite");
    chi2field::validate(corr);
  }
};

/// Y(s) = μ(s) exp(σ Z(s) - σ²/2).
struct LogGaussianFieldModel {
  double sigma2 = 1.0;
  std::vector<double> beta{0.0};
  CorrelationModel corr = Exponential{};

  void validate() const {
    if (!(sigma2 > 0.0)) throw domain_error("LogGaussianFieldModel: sigma2 must be positive");
    for (double b : beta)
      if (!std::isfinite(b)) throw domain_error("LogGaussianFieldModel: beta must be finite");
    chi2field::validate(corr);
  }
};

/// Linear predictor β₀ + Σ β_i v_i(s).
inline double linear_predictor(std::span<const double> beta, const Site& site) {
  if (beta.empty() || beta.size() != site.covariates.size() + 1)
    throw domain_error("mean_function: expected " + std::to_string(site.covariates.size() + 1) +
                       " coefficients, got " + std::to_string(beta.size()));
  double eta = beta[0];
  for (std::size_t i = 0; i < site.covariates.size(); ++i) eta += beta[i + 1] * site.covariates[i];
  return eta;
}

/// μ(s) = exp(β·[1, v(s)]).
inline double mean_function(std::span<const double> beta, const Site& site) {
  return std::exp(linear_predictor(beta, site));
}

inline constexpr double kYearPeriodDays = 365.25;

/// Harmonic regressors [cos(2πkt/P), sin(2πkt/P)] for k = 1..q, interleaved per k.
inline std::vector<double> harmonic_covariates(double t, int q, double period = kYearPeriodDays) {
  if (q < 0) throw domain_error("harmonic_covariates: q must be nonnegative");
  if (!(period > 0.0)) throw domain_error("harmonic_covariates: period must be positive");
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(2 * q));
  for (int k = 1; k <= q; ++k) {
    const double angle = 2.0 * std::numbers::pi * k * t / period;
    v.push_back(std::cos(angle));
    v.push_back(std::sin(angle));
  }
  return v;
}

}  // namespace chi2field
