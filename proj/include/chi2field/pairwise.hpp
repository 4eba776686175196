#pragma once

// Weighted pairwise log-likelihood with cut-off weights.

#include <chi2field/correlation.hpp>
#include <chi2field/dataset.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/model.hpp>
#include <chi2field/site.hpp>
#include <chi2field/specialfn.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace chi2field {

/// c_ij = 1 iff spatial distance ≤ delta_space and time difference ≤ delta_time.
struct WeightSpec {
  double delta_space = std::numeric_limits<double>::infinity();
  double delta_time = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(delta_space >= 0.0) || !(delta_time >= 0.0))
      throw domain_error("WeightSpec: cut-offs must be nonnegative");
  }
  bool includes(const Lag& lag) const { return lag.spatial <= delta_space && lag.temporal <= delta_time; }
};

/// A cut-off that keeps only nearest neighbours: the smallest positive
/// spatial distance, padded by a relative 1e-9 against rounding.
inline double nearest_neighbour_cutoff(std::span<const Site> sites,
                                       DistanceMetric metric = DistanceMetric::euclidean) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double d = spatial_distance(sites[i], sites[j], metric);
      if (d > 0.0) best = std::min(best, d);
    }
  if (!std::isfinite(best)) throw domain_error("nearest_neighbour_cutoff: need two distinct locations");
  return best * (1.0 + 1e-9);
}

/// Selected pairs (i < j) in a fixed order, each pointing at one of the
/// distinct lags so correlations are computed once per lag.
struct PairSet {
  std::vector<std::uint32_t> first;
  std::vector<std::uint32_t> second;
  std::vector<std::uint32_t> lag_id;
  std::vector<Lag> lags;

  std::size_t size() const { return first.size(); }
};

inline PairSet enumerate_pairs(std::span<const Site> sites, const WeightSpec& weights,
                               DistanceMetric metric = DistanceMetric::euclidean) {
  weights.validate();
  if (sites.size() > std::numeric_limits<std::uint32_t>::max())
    throw domain_error("enumerate_pairs: too many observations");
  PairSet out;
  std::map<std::pair<double, double>, std::uint32_t> lag_index;
  auto add = [&](std::size_t i, std::size_t j) {
    const Lag lag = lag_between(sites[i], sites[j], metric);
    if (!weights.includes(lag)) return;
    auto [it, fresh] = lag_index.emplace(std::pair{lag.spatial, lag.temporal},
                                         static_cast<std::uint32_t>(out.lags.size()));
    if (fresh) out.lags.push_back(lag);
    out.first.push_back(static_cast<std::uint32_t>(std::min(i, j)));
    out.second.push_back(static_cast<std::uint32_t>(std::max(i, j)));
    out.lag_id.push_back(it->second);
  };
  const bool timed = !sites.empty() && std::all_of(sites.begin(), sites.end(), [](const Site& s) { return s.time; });
  if (timed && std::isfinite(weights.delta_time)) {
    // Sweep in time order; only neighbours within delta_time are examined.
    std::vector<std::size_t> order(sites.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return *sites[a].time < *sites[b].time; });
    for (std::size_t a = 0; a < order.size(); ++a)
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        if (static_cast<double>(*sites[order[b]].time - *sites[order[a]].time) > weights.delta_time) break;
        add(order[a], order[b]);
      }
  } else {
    for (std::size_t i = 0; i < sites.size(); ++i)
      for (std::size_t j = i + 1; j < sites.size(); ++j) add(i, j);
  }
  return out;
}

enum class MarginalFamily { weibull, loggaussian };

/// Marginal family, its shape (κ for Weibull, σ² for log-Gaussian), trend
/// coefficients and parent correlation.
struct ModelParams {
  MarginalFamily marginal = MarginalFamily::weibull;
  double shape = 1.0;
  std::vector<double> beta{0.0};
  CorrelationModel corr = Exponential{};

  void validate() const {
    if (!(shape > 0.0) || !std::isfinite(shape))
      throw domain_error(marginal == MarginalFamily::weibull ? "kappa must be positive" : "sigma2 must be positive");
    if (beta.empty()) throw domain_error("ModelParams: beta needs an intercept");
    for (double b : beta)
      if (!std::isfinite(b)) throw domain_error("ModelParams: beta must be finite");
    chi2field::validate(corr);
  }
  WeibullFieldModel weibull() const { return {shape, beta, corr}; }
  LogGaussianFieldModel loggaussian() const { return {shape, beta, corr}; }
};

/// pl(θ) = Σ_{i<j} c_ij log f(y_i, y_j; θ) on a fixed dataset.
class PairwiseLikelihood {
 public:
  PairwiseLikelihood(const Dataset& data, const WeightSpec& weights,
                     DistanceMetric metric = DistanceMetric::euclidean)
      : weights_(weights), metric_(metric) {
    data.validate();
    pairs_ = enumerate_pairs(data.sites, weights, metric);
    if (pairs_.size() == 0) throw domain_error("pairwise likelihood: the weights select no pairs");
    const std::size_t n = data.size();
    n_cov_ = data.n_covariates();
    log_y_.resize(n);
    design_.resize(n * n_cov_);
    for (std::size_t k = 0; k < n; ++k) {
      log_y_[k] = std::log(data.values[k]);
      for (std::size_t c = 0; c < n_cov_; ++c) design_[k * n_cov_ + c] = data.sites[k].covariates[c];
    }
  }

  std::size_t n_pairs() const { return pairs_.size(); }
  std::size_t n_observations() const { return log_y_.size(); }
  std::size_t n_covariates() const { return n_cov_; }
  const PairSet& pairs() const { return pairs_; }
  const WeightSpec& weights() const { return weights_; }
  DistanceMetric metric() const { return metric_; }

  double operator()(const ModelParams& p) const { return evaluate(p, {}); }

  /// Sum over the listed pair indices only (all pairs when empty).
  double evaluate(const ModelParams& p, std::span<const std::uint32_t> subset) const {
    Workspace w;
    prepare(p, w);
    double sum = 0.0, comp = 0.0;
    auto accumulate = [&](double t) {
      // Neumaier compensation keeps the result reproducible to the last bits
      // for the fixed pair order.
      const double s = sum + t;
      comp += std::fabs(sum) >= std::fabs(t) ? (sum - s) + t : (t - s) + sum;
      sum = s;
    };
    if (subset.empty()) {
      for (std::size_t k = 0; k < pairs_.size(); ++k) accumulate(term(w, k));
    } else {
      for (auto k : subset) accumulate(term(w, k));
    }
    return sum + comp;
  }

  /// The individual pair contributions, in pair order.
  std::vector<double> pair_terms(const ModelParams& p) const {
    Workspace w;
    prepare(p, w);
    std::vector<double> out(pairs_.size());
    for (std::size_t k = 0; k < pairs_.size(); ++k) out[k] = term(w, k);
    return out;
  }

 private:
  struct Workspace {
    MarginalFamily family{};
    std::vector<double> a;    // Weibull: x_i; log-Gaussian: standardized log value
    std::vector<double> b;    // Weibull: √x_i
    std::vector<double> jac;  // per-observation log-Jacobian
    std::vector<double> lag_rho, lag_c0, lag_c1;
    double constant = 0.0;
  };

  void prepare(const ModelParams& p, Workspace& w) const {
    p.validate();
    if (p.beta.size() != n_cov_ + 1)
      throw domain_error("pairwise likelihood: expected " + std::to_string(n_cov_ + 1) + " trend coefficients");
    const std::size_t n = log_y_.size();
    w.family = p.marginal;
    w.a.resize(n);
    w.b.resize(n);
    w.jac.resize(n);
    const std::size_t nl = pairs_.lags.size();
    w.lag_rho.resize(nl);
    w.lag_c0.resize(nl);
    w.lag_c1.resize(nl);
    for (std::size_t l = 0; l < nl; ++l) {
      const double rho = corr(p.corr, pairs_.lags[l]);
      const double om = 1.0 - rho * rho;
      w.lag_rho[l] = rho;
      // Correlation 1 at a positive lag makes the pair density degenerate.
      w.lag_c0[l] = om > 0.0 ? std::log(om) : std::numeric_limits<double>::infinity();
      w.lag_c1[l] = om > 0.0 ? 1.0 / om : std::numeric_limits<double>::infinity();
    }
    if (p.marginal == MarginalFamily::weibull) {
      const double kappa = p.shape;
      const double log_nu = -log_gamma(1.0 + 1.0 / kappa);
      const double log_kappa = std::log(kappa);
      for (std::size_t k = 0; k < n; ++k) {
        const double log_x = kappa * (log_y_[k] - eta(p.beta, k) - log_nu);
        w.a[k] = std::exp(log_x);
        w.b[k] = std::exp(0.5 * log_x);
        w.jac[k] = log_kappa + log_x - log_y_[k];
      }
    } else {
      const double s2 = p.shape, s = std::sqrt(s2);
      for (std::size_t k = 0; k < n; ++k) {
        w.a[k] = (log_y_[k] - eta(p.beta, k) + 0.5 * s2) / s;
        w.jac[k] = -log_y_[k];
      }
      w.constant = -std::log(2.0 * std::numbers::pi) - std::log(s2);
    }
  }

  double eta(const std::vector<double>& beta, std::size_t k) const {
    double e = beta[0];
    const double* row = design_.data() + k * n_cov_;
    for (std::size_t c = 0; c < n_cov_; ++c) e += beta[c + 1] * row[c];
    return e;
  }

  double term(const Workspace& w, std::size_t k) const {
    const auto i = pairs_.first[k], j = pairs_.second[k], l = pairs_.lag_id[k];
    const double c1 = w.lag_c1[l];
    if (!std::isfinite(c1)) return -std::numeric_limits<double>::infinity();
    if (w.family == MarginalFamily::weibull) {
      // Kibble density with m = 2 (order-0 Bessel) times the Jacobians.
      const double z = 2.0 * std::fabs(w.lag_rho[l]) * w.b[i] * w.b[j] * c1;
      return w.jac[i] + w.jac[j] - w.lag_c0[l] - (w.a[i] + w.a[j]) * c1 + log_bessel_i_normalized(0.0, z);
    }
    const double li = w.a[i], lj = w.a[j], rho = w.lag_rho[l];
    return w.constant - 0.5 * w.lag_c0[l] - 0.5 * (li * li - 2.0 * rho * li * lj + lj * lj) * c1 + w.jac[i] +
           w.jac[j];
  }

  WeightSpec weights_;
  DistanceMetric metric_;
  PairSet pairs_;
  std::size_t n_cov_ = 0;
  std::vector<double> log_y_;
  std::vector<double> design_;
};

}  // namespace chi2field
