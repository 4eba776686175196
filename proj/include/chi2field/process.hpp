#pragma once

// Exact simulation of the parent Gaussian field, the scaled-χ² field X_m,
// the Weibull regression field and the log-Gaussian comparator.

#include <chi2field/correlation.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/model.hpp>
#include <chi2field/site.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace chi2field {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent per-replicate generators derived from one master seed.
///
/// Stream i depends only on (master, i), so replicates can be produced in any
/// order or on any worker and still give the same values.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t master_seed) : master_(master_seed) {}

  std::mt19937_64 stream(std::uint64_t index) const {
    const std::uint64_t a = splitmix64(master_ ^ splitmix64(index));
    const std::uint64_t b = splitmix64(a + index);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
  }

  /// A child factory, for nesting (e.g. one per study cell).
  StreamFactory child(std::uint64_t index) const { return StreamFactory(splitmix64(master_ + 0x632BE59BD9B4E019ULL * (index + 1))); }

  std::uint64_t master() const { return master_; }

 private:
  std::uint64_t master_;
};

/// Draws N(0, R) vectors from a lower-triangular factor of R.
class GaussianSampler {
 public:
  /// Factorizes R (throws not_positive_definite on failure).
  static GaussianSampler dense(const Eigen::MatrixXd& correlation) {
    GaussianSampler s;
    s.factor_ = cholesky_lower(correlation);
    return s;
  }

  static GaussianSampler from_factor(Eigen::MatrixXd lower) {
    GaussianSampler s;
    s.factor_ = std::move(lower);
    return s;
  }

  /// Covariance R_outer ⊗ R_inner; component index = outer * n_inner + inner.
  static GaussianSampler kronecker(const Eigen::MatrixXd& outer, const Eigen::MatrixXd& inner) {
    GaussianSampler s;
    s.factor_ = cholesky_lower(outer);
    s.inner_factor_ = cholesky_lower(inner);
    s.separable_ = true;
    return s;
  }

  std::size_t size() const {
    return static_cast<std::size_t>(separable_ ? factor_.rows() * inner_factor_.rows() : factor_.rows());
  }

  Eigen::VectorXd draw(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (!separable_) {
      Eigen::VectorXd xi(factor_.rows());
      for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
      return factor_.triangularView<Eigen::Lower>() * xi;
    }
    Eigen::MatrixXd xi(inner_factor_.rows(), factor_.rows());
    for (Eigen::Index c = 0; c < xi.cols(); ++c)
      for (Eigen::Index r = 0; r < xi.rows(); ++r) xi(r, c) = normal(rng);
    Eigen::MatrixXd z = inner_factor_.triangularView<Eigen::Lower>() * xi;
    z = z * factor_.transpose();
    return Eigen::Map<Eigen::VectorXd>(z.data(), z.size());
  }

 private:
  GaussianSampler() = default;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd inner_factor_;
  bool separable_ = false;
};

/// Columns are independent N(0, R) draws; column c uses stream c of `seed`.
inline Eigen::MatrixXd simulate_gaussian(const Eigen::MatrixXd& correlation, std::size_t n_copies,
                                         std::uint64_t seed) {
  if (n_copies < 1) throw domain_error("simulate_gaussian: n_copies must be positive");
  const auto sampler = GaussianSampler::dense(correlation);
  const StreamFactory streams(seed);
  Eigen::MatrixXd out(correlation.rows(), static_cast<Eigen::Index>(n_copies));
  for (std::size_t c = 0; c < n_copies; ++c) {
    auto rng = streams.stream(c);
    out.col(static_cast<Eigen::Index>(c)) = sampler.draw(rng);
  }
  return out;
}

/// X_m = Σ_{k≤m} Z_k² / m from m copies drawn in sequence from one stream.
inline Eigen::VectorXd draw_chi2(const GaussianSampler& sampler, int m, std::mt19937_64& rng) {
  if (m < 1) throw domain_error("simulate_chi2: m must be a positive integer");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sampler.size()));
  for (int k = 0; k < m; ++k) x += sampler.draw(rng).array().square().matrix();
  return x / static_cast<double>(m);
}

/// Replicate r (column r) of the scaled-χ² field uses stream r.
inline Eigen::MatrixXd simulate_chi2(const Eigen::MatrixXd& correlation, int m, std::size_t n_reps,
                                     std::uint64_t seed) {
  if (m < 1) throw domain_error("simulate_chi2: m must be a positive integer");
  const auto sampler = GaussianSampler::dense(correlation);
  const StreamFactory streams(seed);
  Eigen::MatrixXd out(correlation.rows(), static_cast<Eigen::Index>(n_reps));
  for (std::size_t r = 0; r < n_reps; ++r) {
    auto rng = streams.stream(r);
    out.col(static_cast<Eigen::Index>(r)) = draw_chi2(sampler, m, rng);
  }
  return out;
}

/// W = ν(κ) X₂^{1/κ}, applied elementwise.
inline Eigen::VectorXd chi2_to_weibull(const Eigen::VectorXd& x2, double kappa) {
  const double nu = weibull_nu(kappa);
  return (nu * x2.array().pow(1.0 / kappa)).matrix();
}

inline std::vector<double> site_means(std::span<const double> beta, std::span<const Site> sites) {
  std::vector<double> mu(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) mu[i] = mean_function(beta, sites[i]);
  return mu;
}

/// One Weibull-field replicate Y = μ W at the sampler's sites.
inline Eigen::VectorXd draw_weibull(const GaussianSampler& sampler, double kappa,
                                    std::span<const double> means, std::mt19937_64& rng) {
  Eigen::VectorXd w = chi2_to_weibull(draw_chi2(sampler, 2, rng), kappa);
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] *= means[static_cast<std::size_t>(i)];
  return w;
}

inline Eigen::MatrixXd simulate_weibull(const WeibullFieldModel& model, std::span<const Site> sites,
                                        const GaussianSampler& sampler, std::size_t n_reps,
                                        std::uint64_t seed) {
  model.validate();
  if (sampler.size() != sites.size()) throw domain_error("simulate_weibull: sampler/site size mismatch");
  const auto mu = site_means(model.beta, sites);
  const StreamFactory streams(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(sites.size()), static_cast<Eigen::Index>(n_reps));
  for (std::size_t r = 0; r < n_reps; ++r) {
    auto rng = streams.stream(r);
    out.col(static_cast<Eigen::Index>(r)) = draw_weibull(sampler, model.kappa, mu, rng);
  }
  return out;
}

inline Eigen::MatrixXd simulate_weibull(const WeibullFieldModel& model, std::span<const Site> sites,
                                        std::size_t n_reps, std::uint64_t seed,
                                        DistanceMetric metric = DistanceMetric::euclidean) {
  model.validate();
  const auto sampler = GaussianSampler::dense(corr_matrix(model.corr, sites, metric));
  return simulate_weibull(model, sites, sampler, n_reps, seed);
}

inline Eigen::VectorXd draw_loggaussian(const GaussianSampler& sampler, double sigma2,
                                        std::span<const double> means, std::mt19937_64& rng) {
  const double sigma = std::sqrt(sigma2);
  Eigen::VectorXd z = sampler.draw(rng);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z[i] = means[static_cast<std::size_t>(i)] * std::exp(sigma * z[i] - 0.5 * sigma2);
  return z;
}

inline Eigen::MatrixXd simulate_loggaussian(const LogGaussianFieldModel& model,
                                            std::span<const Site> sites, std::size_t n_reps,
                                            std::uint64_t seed,
                                            DistanceMetric metric = DistanceMetric::euclidean) {
  model.validate();
  const auto sampler = GaussianSampler::dense(corr_matrix(model.corr, sites, metric));
  const auto mu = site_means(model.beta, sites);
  const StreamFactory streams(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(sites.size()), static_cast<Eigen::Index>(n_reps));
  for (std::size_t r = 0; r < n_reps; ++r) {
    auto rng = streams.stream(r);
    out.col(static_cast<Eigen::Index>(r)) = draw_loggaussian(sampler, model.sigma2, mu, rng);
  }
  return out;
}

}  // namespace chi2field
