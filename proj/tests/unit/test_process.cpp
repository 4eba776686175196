#include <chi2field/density.hpp>
#include <chi2field/process.hpp>

#include <oracles.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace chi2field;

namespace {

Site at(double x) { return Site{{x}, std::nullopt, {}}; }

std::vector<double> take_row(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return v;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
  return r;
}

}  // namespace

TEST(Streams, OrderIndependentAndDistinct) {
  const StreamFactory f(42);
  auto a = f.stream(7);
  auto b = f.stream(7);
  auto c = f.stream(8);
  const auto va = a(), vb = b(), vc = c();
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(StreamFactory(43).stream(7)(), va);
}

TEST(SimulateGaussian, IdentityCovariance) {
  const std::size_t n = 50000;
  const auto z = simulate_gaussian(Eigen::MatrixXd::Identity(3, 3), n, 11);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double cov = z.row(i).dot(z.row(j)) / static_cast<double>(n);
      const double target = i == j ? 1.0 : 0.0;
      const double se = std::sqrt((i == j ? 2.0 : 1.0) / static_cast<double>(n));
      EXPECT_LT(std::fabs(cov - target), 3.0 * se) << i << j;
    }
  }
}

TEST(SimulateGaussian, SingleSiteIsStandardNormal) {
  const auto z = simulate_gaussian(Eigen::MatrixXd::Identity(1, 1), 20000, 5);
  EXPECT_GT(oracle::ks_pvalue(take_row(z, 0), normal_cdf), 0.01);
}

TEST(SimulateGaussian, SeedRepeatIsBitIdentical) {
  Eigen::MatrixXd r(2, 2);
  r << 1.0, 0.4, 0.4, 1.0;
  EXPECT_EQ(simulate_gaussian(r, 10, 99), simulate_gaussian(r, 10, 99));
  EXPECT_NE(simulate_gaussian(r, 10, 99), simulate_gaussian(r, 10, 100));
}

TEST(SimulateGaussian, PropagatesFactorizationFailure) {
  Eigen::MatrixXd r(2, 2);
  r << 1.0, 1.2, 1.2, 1.0;
  EXPECT_THROW(simulate_gaussian(r, 3, 1), not_positive_definite);
}

TEST(KroneckerSampler, SameDrawsAsDenseKroneckerFactor) {
  Eigen::MatrixXd outer(3, 3), inner(2, 2);
  outer << 1.0, 0.5, 0.2, 0.5, 1.0, 0.5, 0.2, 0.5, 1.0;
  inner << 1.0, 0.7, 0.7, 1.0;
  const auto lo = cholesky_lower(outer), li = cholesky_lower(inner);
  Eigen::MatrixXd kron(6, 6);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) kron.block(2 * a, 2 * b, 2, 2) = lo(a, b) * li;
  const auto separable = GaussianSampler::kronecker(outer, inner);
  const auto dense = GaussianSampler::from_factor(kron);
  ASSERT_EQ(separable.size(), 6u);
  auto r1 = StreamFactory(3).stream(0);
  auto r2 = StreamFactory(3).stream(0);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd a = separable.draw(r1), b = dense.draw(r2);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(SimulateChi2, MomentsAndCorrelation) {
  const double rho = 0.7;
  const std::vector<Site> s{at(0.0), at(-std::log(rho))};
  const auto r = corr_matrix(Exponential{1.0}, s);
  for (int m : {1, 2, 5}) {
    const auto x = simulate_chi2(r, m, 20000, 17 + m);
    const auto x0 = take_row(x, 0), x1 = take_row(x, 1);
    const auto mean = oracle::mean_se(x0);
    EXPECT_LT(std::fabs(mean.mean - 1.0), 3.0 * mean.se) << m;
    std::vector<double> sq(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) sq[i] = (x0[i] - 1.0) * (x0[i] - 1.0);
    const auto var = oracle::mean_se(sq);
    EXPECT_LT(std::fabs(var.mean - 2.0 / m), 3.0 * var.se) << m;
    const auto c = oracle::correlation_se(x0, x1);
    EXPECT_LT(std::fabs(c.mean - rho * rho), 3.0 * c.se) << m;
  }
}

TEST(SimulateWeibull, ExponentialShapeIsUnitExponential) {
  WeibullFieldModel model{1.0, {0.0}, Exponential{1.0}};
  const std::vector<Site> s{at(0.0)};
  const auto y = simulate_weibull(model, s, 10000, 23);
  EXPECT_GT(oracle::ks_pvalue(take_row(y, 0), [](double t) { return t > 0 ? -std::expm1(-t) : 0.0; }), 0.01);
}

TEST(SimulateWeibull, MarginalFitsWeibull) {
  for (double kappa : {0.7, 3.0, 10.0}) {
    WeibullFieldModel model{kappa, {0.0}, Exponential{1.0}};
    const std::vector<Site> s{at(0.0)};
    const auto y = take_row(simulate_weibull(model, s, 10000, 29), 0);
    const auto marginal = weibull_field_marginal(kappa, 1.0);
    EXPECT_GT(oracle::ks_pvalue(y, [&](double t) { return marginal.cdf(t); }), 0.01) << kappa;
    const auto mean = oracle::mean_se(y);
    EXPECT_LT(std::fabs(mean.mean - 1.0), 3.0 * mean.se);
  }
}

TEST(SimulateWeibull, RegressionMeanAndVariance) {
  WeibullFieldModel model{3.0, {0.25, -0.15}, Exponential{0.05}};
  const std::vector<Site> s{Site{{0.0}, std::nullopt, {1.0}}};
  const auto y = take_row(simulate_weibull(model, s, 20000, 31), 0);
  const double mu = std::exp(0.10);
  const auto m = oracle::mean_se(y);
  EXPECT_LT(std::fabs(m.mean - mu), 3.0 * m.se);
  std::vector<double> sq(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sq[i] = (y[i] - mu) * (y[i] - mu);
  const auto v = oracle::mean_se(sq);
  EXPECT_LT(std::fabs(v.mean - mu * mu * weibull_variance_factor(3.0)), 3.0 * v.se);
}

TEST(SimulateWeibull, EmpiricalCorrelationMatchesInducedCorrelation) {
  for (double kappa : {1.0, 3.0, 10.0})
    for (double rho : {0.3, 0.7, 0.95}) {
      WeibullFieldModel model{kappa, {0.0}, Exponential{1.0}};
      const std::vector<Site> s{at(0.0), at(-std::log(rho))};
      const auto y = simulate_weibull(model, s, 20000, 1000 + static_cast<std::uint64_t>(kappa * 10 + rho * 100));
      const auto c = oracle::correlation_se(take_row(y, 0), take_row(y, 1));
      const double expected = weibull_corr_from_rho2(rho * rho, kappa);
      EXPECT_LT(std::fabs(c.mean - expected), 3.0 * c.se) << kappa << " " << rho;
    }
}

TEST(SimulateWeibull, MonotoneCouplingPreservesRanks) {
  const std::vector<Site> s{at(0.0), at(0.1), at(0.5)};
  const auto r = corr_matrix(Exponential{0.3}, s);
  const auto sampler = GaussianSampler::dense(r);
  auto rng = StreamFactory(4).stream(0);
  std::vector<double> x2, w;
  for (int rep = 0; rep < 500; ++rep) {
    const Eigen::VectorXd x = draw_chi2(sampler, 2, rng);
    const Eigen::VectorXd ww = chi2_to_weibull(x, 3.0);
    x2.push_back(x[1]);
    w.push_back(ww[1]);
  }
  EXPECT_EQ(ranks(x2), ranks(w));
}

TEST(SimulateLogGaussian, Moments) {
  for (double sigma2 : {0.1, 0.5}) {
    LogGaussianFieldModel model{sigma2, {0.0}, Exponential{1.0}};
    const std::vector<Site> s{at(0.0)};
    const auto y = take_row(simulate_loggaussian(model, s, 20000, 37), 0);
    const auto m = oracle::mean_se(y);
    EXPECT_LT(std::fabs(m.mean - 1.0), 3.0 * m.se);
    std::vector<double> l(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) l[i] = std::log(y[i]);
    const auto lm = oracle::mean_se(l);
    std::vector<double> sq(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) sq[i] = (l[i] - lm.mean) * (l[i] - lm.mean);
    const auto v = oracle::mean_se(sq);
    EXPECT_LT(std::fabs(v.mean - sigma2), 3.0 * v.se);
  }
  LogGaussianFieldModel tiny{1e-14, {0.0}, Exponential{1.0}};
  const std::vector<Site> s{at(0.0), at(1.0)};
  const auto y = simulate_loggaussian(tiny, s, 5, 2);
  EXPECT_LT((y.array() - 1.0).abs().maxCoeff(), 1e-6);
}
