#pragma once

// Simple kriging of the Weibull field, closed-form conditional moments of the
// exponential chain, product moments, CRPS, and prediction scores.

#include <chi2field/correlation.hpp>
#include <chi2field/density.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/model.hpp>
#include <chi2field/site.hpp>
#include <chi2field/specialfn.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace chi2field {

struct PredictionResult {
  double point = 0.0;
  double mspe = 0.0;
};

/// Factorized Weibull-correlation system C_W for a fixed set of observed
/// sites; reusable across targets and across value vectors on the same sites.
class KrigingSystem {
 public:
  KrigingSystem(const WeibullFieldModel& model, std::vector<Site> observed,
                DistanceMetric metric = DistanceMetric::euclidean, SeriesControl ctl = {})
      : model_(model), sites_(std::move(observed)), metric_(metric), ctl_(ctl) {
    model_.validate();
    if (sites_.empty()) throw domain_error("KrigingSystem: no observed sites");
    sigma2_w_ = weibull_variance_factor(model_.kappa);
    const auto n = static_cast<Eigen::Index>(sites_.size());
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i, i) = 1.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        if (same_location(sites_[i], sites_[j]))
          throw domain_error("KrigingSystem: duplicate observed sites");
        c(i, j) = c(j, i) = weibull_corr(model_.corr, lag_between(sites_[i], sites_[j], metric_),
                                         model_.kappa, ctl_);
      }
    }
    llt_.compute(c);
    if (llt_.info() != Eigen::Success) throw singular_matrix_error("KrigingSystem: C_W is not positive definite");
    means_.resize(sites_.size());
    for (std::size_t i = 0; i < sites_.size(); ++i) means_[i] = mean_function(model_.beta, sites_[i]);
  }

  std::size_t size() const { return sites_.size(); }
  double sigma2_w() const { return sigma2_w_; }
  const std::vector<Site>& sites() const { return sites_; }

  Eigen::VectorXd target_correlations(const Site& target) const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(sites_.size()));
    for (std::size_t i = 0; i < sites_.size(); ++i)
      c[static_cast<Eigen::Index>(i)] =
          weibull_corr(model_.corr, lag_between(sites_[i], target, metric_), model_.kappa, ctl_);
    return c;
  }

  /// λ = C_W⁻¹ c_W(s₀).
  Eigen::VectorXd weights(const Site& target) const { return llt_.solve(target_correlations(target)); }

  PredictionResult predict(std::span<const double> values, const Site& target) const {
    return predict_with_weights(values, target, weights(target));
  }

  /// Same as predict() with weights computed once by the caller.
  PredictionResult predict_with_weights(std::span<const double> values, const Site& target,
                                        const Eigen::VectorXd& lambda) const {
    if (values.size() != sites_.size()) throw domain_error("simple_krige: values/sites length mismatch");
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (!(values[i] > 0.0)) throw domain_error("simple_krige: observations must be positive");
      if (same_location(sites_[i], target)) return {values[i], 0.0};
    }
    const double mu0 = mean_function(model_.beta, target);
    double s = 1.0;
    for (std::size_t i = 0; i < sites_.size(); ++i)
      s += lambda[static_cast<Eigen::Index>(i)] * (values[i] / means_[i] - 1.0);
    const double cap = mu0 * mu0 * sigma2_w_;
    const double explained = lambda.dot(target_correlations(target));
    const double mspe = std::clamp(cap * (1.0 - explained), 0.0, cap);
    return {mu0 * s, mspe};
  }

 private:
  WeibullFieldModel model_;
  std::vector<Site> sites_;
  DistanceMetric metric_;
  SeriesControl ctl_;
  double sigma2_w_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<double> means_;
};

/// Ŷ(s₀) = μ(s₀){1 + Σ λ_i (Y(s_i)/μ(s_i) - 1)} with its mean square prediction error.
inline PredictionResult simple_krige(const WeibullFieldModel& model, std::span<const Site> observed,
                                     std::span<const double> values, const Site& target,
                                     DistanceMetric metric = DistanceMetric::euclidean) {
  for (std::size_t i = 0; i < observed.size() && i < values.size(); ++i)
    if (same_location(observed[i], target)) {
      if (!(values[i] > 0.0)) throw domain_error("simple_krige: observations must be positive");
      return {values[i], 0.0};
    }
  const KrigingSystem system(model, std::vector<Site>(observed.begin(), observed.end()), metric);
  return system.predict(values, target);
}

/// E[W₁ᵃ W₂ᵇ] for a Weibull pair with parent correlation ρ.
inline double product_moment(double a, double b, double rho, double kappa, const SeriesControl& ctl = {}) {
  if (!(kappa > 0.0)) throw domain_error("product_moment: kappa must be positive");
  if (!(a >= 0.0 && b >= 0.0)) throw domain_error("product_moment: a and b must be nonnegative");
  if (!(std::fabs(rho) <= 1.0)) throw domain_error("product_moment: |rho| must be <= 1");
  const double g1 = log_gamma(1.0 + 1.0 / kappa);
  const double prefactor =
      std::exp(log_gamma(1.0 + a / kappa) + log_gamma(1.0 + b / kappa) - (a + b) * g1);
  if (a == 0.0 || b == 0.0) return prefactor;
  // Summing ₂F₁ - 1 keeps the small excess over 1 accurate when a, b ≪ κ.
  return prefactor + prefactor * hypergeom_2f1(-a / kappa, -b / kappa, 1.0, rho * rho, ctl, /*minus_one=*/true);
}

/// log f(y_next | y_last) for neighbouring points of the Weibull chain.
inline double chain_conditional_log_density(double y_next, double y_last, double mu_next, double mu_last,
                                            double rho, double kappa) {
  const PairObservation obs{y_last, y_next, rho, mu_last, mu_next};
  return weibull_pair_log_density(obs, kappa) - weibull_field_marginal(kappa, mu_last).log_pdf(y_last);
}

/// E[Yᵃ(s_{n+1}) | y_n] for the exponential chain, where ρ is the parent
/// correlation between s_n and s_{n+1}.
///
/// With x_n = (y_n/(νμ_n))^κ and r = ρ², b = a/κ:
///   (νμ_{n+1})ᵃ Γ(1+b) (1-r)^b e^{-λ} ₁F₁(1+b; 1; λ),   λ = r x_n/(1-r).
inline double optimal_predictor_from_last(double y_last, double mu_last, double mu_next, double rho,
                                          double kappa, double a = 1.0, const SeriesControl& ctl = {}) {
  if (!(kappa > 0.0)) throw domain_error("optimal_predictor_chain: kappa must be positive");
  if (!(a > 0.0)) throw domain_error("optimal_predictor_chain: exponent a must be positive");
  if (!(y_last > 0.0 && mu_last > 0.0 && mu_next > 0.0))
    throw domain_error("optimal_predictor_chain: values and means must be positive");
  if (!(std::fabs(rho) < 1.0)) throw domain_error("optimal_predictor_chain: |rho| must be < 1");
  const double b = a / kappa;
  // (ν μ)^a Γ(1+b) = μ^a exp(lgamma(1+b) - a lgamma(1+1/κ)); exact for a = 1.
  const double constant = std::exp(log_gamma(1.0 + b) - a * log_gamma(1.0 + 1.0 / kappa));
  const double r = rho * rho;
  if (r == 0.0) return constant * std::pow(mu_next, a);
  const double x = weibull_to_chi2(y_last, mu_last, kappa);
  const double lambda = r * x / (1.0 - r);
  const double log_tail = b * std::log1p(-r) + log_scaled_hypergeom_1f1(1.0 + b, 1.0, lambda, ctl);
  return constant * std::pow(mu_next, a) * std::exp(log_tail);
}

/// Optimal predictor E[Yᵃ(s₀) | Y(s₁..s_n)] on the line with exponential
/// correlation and the target to the right of every observation.
inline double optimal_predictor_chain(const WeibullFieldModel& model, std::span<const Site> sites,
                                      std::span<const double> values, const Site& target, double a = 1.0) {
  model.validate();
  const auto* exp_corr = std::get_if<Exponential>(&model.corr);
  if (!exp_corr) throw domain_error("optimal_predictor_chain: requires exponential correlation");
  if (sites.empty() || sites.size() != values.size())
    throw domain_error("optimal_predictor_chain: need matching nonempty sites and values");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i].coords.size() != 1) throw domain_error("optimal_predictor_chain: sites must be 1-D");
    if (i > 0 && !(sites[i].coords[0] > sites[i - 1].coords[0]))
      throw domain_error("optimal_predictor_chain: sites must be strictly increasing");
  }
  if (target.coords.size() != 1 || !(target.coords[0] > sites.back().coords[0]))
    throw domain_error("optimal_predictor_chain: target must lie beyond the last site");
  const double rho = std::exp(-(target.coords[0] - sites.back().coords[0]) / exp_corr->phi);
  return optimal_predictor_from_last(values.back(), mean_function(model.beta, sites.back()),
                                     mean_function(model.beta, target), rho, model.kappa, a);
}

/// CRPS of Weibull(α = kappa, β = scale) at y.
inline double crps_weibull(double kappa, double scale, double y) {
  if (!(kappa > 0.0 && scale > 0.0)) throw domain_error("crps_weibull: kappa and scale must be positive");
  if (!(y >= 0.0)) throw domain_error("crps_weibull: y must be nonnegative");
  const WeibullMarginal f(kappa, scale);
  const double s = 1.0 + 1.0 / kappa;
  const double z = std::pow(y / scale, kappa);
  return y * (2.0 * f.cdf(y) - 1.0) - 2.0 * scale * lower_incomplete_gamma(s, z) +
         std::exp2(-1.0 / kappa) * scale * std::exp(log_gamma(s));
}

/// CRPS of the log-Gaussian with mean e^{mu} and log-variance σ² at y > 0.
inline double crps_loggaussian(double mu, double sigma2, double y) {
  if (!(sigma2 > 0.0)) throw domain_error("crps_loggaussian: sigma2 must be positive");
  if (!(y > 0.0)) throw domain_error("crps_loggaussian: y must be positive");
  const double sigma = std::sqrt(sigma2);
  const double l = (std::log(y) - (mu - 0.5 * sigma2)) / sigma;
  return y * (2.0 * normal_cdf(l) - 1.0) +
         2.0 * std::exp(mu) * (normal_cdf(-sigma / std::numbers::sqrt2) - normal_cdf(l - sigma));
}

inline double crps(const PlugInMarginal& marginal, double y) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, WeibullMarginal>) return crps_weibull(m.kappa, m.scale, y);
        else return crps_loggaussian(m.mu, m.sigma2, y);
      },
      marginal);
}

/// Gaussian-scale conditional mean of the log-Gaussian field:
///   exp(m₀ + cᵀC⁻¹(log y - m) + σ²(1 - cᵀC⁻¹c)/2),  m = log μ - σ²/2.
class LogGaussianPredictor {
 public:
  LogGaussianPredictor(const LogGaussianFieldModel& model, std::vector<Site> observed,
                       DistanceMetric metric = DistanceMetric::euclidean)
      : model_(model), sites_(std::move(observed)), metric_(metric) {
    model_.validate();
    if (sites_.empty()) throw domain_error("LogGaussianPredictor: no observed sites");
    llt_.compute(corr_matrix(model_.corr, sites_, metric_));
    if (llt_.info() != Eigen::Success)
      throw singular_matrix_error("LogGaussianPredictor: correlation matrix is not positive definite");
    log_means_.resize(sites_.size());
    for (std::size_t i = 0; i < sites_.size(); ++i)
      log_means_[i] = linear_predictor(model_.beta, sites_[i]) - 0.5 * model_.sigma2;
  }

  Eigen::VectorXd weights(const Site& target) const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(sites_.size()));
    for (std::size_t i = 0; i < sites_.size(); ++i)
      c[static_cast<Eigen::Index>(i)] = corr(model_.corr, lag_between(sites_[i], target, metric_));
    return llt_.solve(c);
  }

  double predict_with_weights(std::span<const double> values, const Site& target,
                              const Eigen::VectorXd& lambda) const {
    if (values.size() != sites_.size()) throw domain_error("LogGaussianPredictor: length mismatch");
    for (std::size_t i = 0; i < sites_.size(); ++i)
      if (same_location(sites_[i], target)) return values[i];
    Eigen::VectorXd c(static_cast<Eigen::Index>(sites_.size()));
    double shift = 0.0;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (!(values[i] > 0.0)) throw domain_error("LogGaussianPredictor: observations must be positive");
      const auto k = static_cast<Eigen::Index>(i);
      c[k] = corr(model_.corr, lag_between(sites_[i], target, metric_));
      shift += lambda[k] * (std::log(values[i]) - log_means_[i]);
    }
    const double explained = std::clamp(lambda.dot(c), 0.0, 1.0);
    const double m0 = linear_predictor(model_.beta, target) - 0.5 * model_.sigma2;
    return std::exp(m0 + shift + 0.5 * model_.sigma2 * (1.0 - explained));
  }

  double predict(std::span<const double> values, const Site& target) const {
    return predict_with_weights(values, target, weights(target));
  }

  /// Conditional mean with its mean square prediction error, the
  /// conditional variance p²(exp(σ²(1 - cᵀC⁻¹c)) - 1).
  PredictionResult predict_with_mspe(std::span<const double> values, const Site& target) const {
    const Eigen::VectorXd lambda = weights(target);
    const double point = predict_with_weights(values, target, lambda);
    for (const auto& s : sites_)
      if (same_location(s, target)) return {point, 0.0};
    Eigen::VectorXd c(static_cast<Eigen::Index>(sites_.size()));
    for (std::size_t i = 0; i < sites_.size(); ++i)
      c[static_cast<Eigen::Index>(i)] = corr(model_.corr, lag_between(sites_[i], target, metric_));
    const double residual = model_.sigma2 * (1.0 - std::clamp(lambda.dot(c), 0.0, 1.0));
    return {point, point * point * std::expm1(residual)};
  }

 private:
  LogGaussianFieldModel model_;
  std::vector<Site> sites_;
  DistanceMetric metric_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<double> log_means_;
};

/// Ŷ(s, t) = y(s, t-1). Observation k is matched to the same station
/// (coords) one time unit earlier; entries without a predecessor are empty.
inline std::vector<std::optional<double>> naive_predict(std::span<const Site> sites,
                                                        std::span<const double> values) {
  if (sites.size() != values.size()) throw domain_error("naive_predict: sites/values length mismatch");
  std::vector<std::size_t> order(sites.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!sites[i].time) throw domain_error("naive_predict: every site needs a time index");
    order[i] = i;
  }
  auto key_less = [&](std::size_t a, std::size_t b) {
    if (sites[a].coords != sites[b].coords) return sites[a].coords < sites[b].coords;
    return *sites[a].time < *sites[b].time;
  };
  std::sort(order.begin(), order.end(), key_less);
  std::vector<std::optional<double>> out(sites.size());
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& prev = sites[order[k - 1]];
    const auto& cur = sites[order[k]];
    if (prev.coords == cur.coords && *prev.time + 1 == *cur.time) out[order[k]] = values[order[k - 1]];
  }
  return out;
}

/// Throwing variant: every observation must have its predecessor.
inline std::vector<double> naive_predict_strict(std::span<const Site> sites, std::span<const double> values) {
  const auto maybe = naive_predict(sites, values);
  std::vector<double> out(maybe.size());
  for (std::size_t i = 0; i < maybe.size(); ++i) {
    if (!maybe[i]) throw domain_error("naive_predict: observation " + std::to_string(i) + " has no predecessor");
    out[i] = *maybe[i];
  }
  return out;
}

struct Scores {
  double rmse = 0.0;
  double mae = 0.0;
  double mean_crps = 0.0;
  std::size_t n = 0;
};

/// RMSE and MAE of the point predictions; mean CRPS of the plug-in
/// marginals when supplied (NaN otherwise).
inline Scores score(std::span<const double> predictions, std::span<const double> observations,
                    std::span<const PlugInMarginal> marginals = {}) {
  if (predictions.size() != observations.size())
    throw domain_error("score: predictions/observations length mismatch");
  if (!marginals.empty() && marginals.size() != observations.size())
    throw domain_error("score: marginals/observations length mismatch");
  if (observations.empty()) throw domain_error("score: no observations");
  Scores s;
  s.n = observations.size();
  double sq = 0.0, ab = 0.0, cr = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    const double e = predictions[i] - observations[i];
    sq += e * e;
    ab += std::fabs(e);
    if (!marginals.empty()) cr += crps(marginals[i], observations[i]);
  }
  const double n = static_cast<double>(s.n);
  s.rmse = std::sqrt(sq / n);
  s.mae = ab / n;
  s.mean_crps = marginals.empty() ? std::numeric_limits<double>::quiet_NaN() : cr / n;
  return s;
}

}  // namespace chi2field
