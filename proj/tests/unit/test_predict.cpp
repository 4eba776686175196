#include <chi2field/density.hpp>
#include <chi2field/predict.hpp>
#include <chi2field/process.hpp>

#include <oracles.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace chi2field;

namespace {

Site at(double x, std::vector<double> cov = {}) { return Site{{x}, std::nullopt, std::move(cov)}; }

}  // namespace

TEST(ProductMoment, Trivial) {
  for (double kappa : {0.7, 2.0, 10.0}) {
    EXPECT_DOUBLE_EQ(product_moment(0.0, 0.0, 0.5, kappa), 1.0);
    EXPECT_NEAR(product_moment(1.0, 0.0, 0.5, kappa), 1.0, 1e-15);
    EXPECT_NEAR(product_moment(0.0, 1.0, 0.99, kappa), 1.0, 1e-15);
  }
}

TEST(ProductMoment, TiesToInducedCorrelation) {
  for (double kappa : {0.5, 1.0, 3.0, 10.0, 30.0})
    for (double rho : {0.1, 0.4, 0.7, 0.95, 1.0}) {
      const double s2 = weibull_variance_factor(kappa);
      const double via_moment = (product_moment(1.0, 1.0, rho, kappa) - 1.0) / s2;
      EXPECT_NEAR(weibull_corr_from_rho2(rho * rho, kappa), via_moment, 1e-12) << kappa << " " << rho;
    }
}

TEST(ProductMoment, SecondMomentAtFullCorrelation) {
  // ρ = 1 gives W₁ = W₂, so E[W²] = Γ(1+2/κ)/Γ(1+1/κ)².
  for (double kappa : {1.0, 3.0, 10.0}) {
    const double expected = std::tgamma(1.0 + 2.0 / kappa) / std::pow(std::tgamma(1.0 + 1.0 / kappa), 2);
    EXPECT_NEAR(product_moment(1.0, 1.0, 1.0, kappa), expected, 1e-13 * expected);
  }
}

TEST(ProductMoment, MonteCarlo) {
  const double kappa = 3.0, rho = 0.7;
  const std::vector<Site> s{at(0.0), at(-std::log(rho))};
  const WeibullFieldModel model{kappa, {0.0}, Exponential{1.0}};
  const auto w = simulate_weibull(model, s, 200000, 77);
  std::vector<double> prod(static_cast<std::size_t>(w.cols()));
  for (Eigen::Index c = 0; c < w.cols(); ++c) prod[static_cast<std::size_t>(c)] = w(0, c) * w(1, c);
  const auto m = oracle::mean_se(prod);
  EXPECT_LT(std::fabs(m.mean - product_moment(1.0, 1.0, rho, kappa)), 3.0 * m.se);
}

TEST(Kriging, ExactAtObservedSites) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(u(rng) * 10);
    std::vector<Site> sites;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      sites.push_back(Site{{u(rng), u(rng)}, std::nullopt, {u(rng)}});
      values.push_back(0.1 + 3.0 * u(rng));
    }
    const WeibullFieldModel model{0.5 + 5.0 * u(rng), {0.2, -0.3}, Exponential{0.05 + u(rng)}};
    const KrigingSystem system(model, sites);
    const std::size_t k = static_cast<std::size_t>(u(rng) * n) % n;
    const auto r = system.predict(values, sites[k]);
    EXPECT_EQ(r.point, values[k]);
    EXPECT_EQ(r.mspe, 0.0);
  }
}

TEST(Kriging, UncorrelatedTargetReturnsMean) {
  const WeibullFieldModel model{2.0, {0.3, 0.5}, SpaceTimeGW{1.0, 2.0, 0.0}};
  const std::vector<Site> obs{Site{{0.0}, 0, {1.0}}};
  const Site target{{0.0}, 5, {2.0}};  // beyond the temporal support
  const auto r = simple_krige(model, obs, std::vector<double>{3.0}, target);
  const double mu0 = std::exp(0.3 + 0.5 * 2.0);
  EXPECT_NEAR(r.point, mu0, 1e-14 * mu0);
  EXPECT_NEAR(r.mspe, mu0 * mu0 * weibull_variance_factor(2.0), 1e-12);
}

TEST(Kriging, SingleObservationWeightIsInducedCorrelation) {
  const WeibullFieldModel model{3.0, {0.0}, Exponential{0.4}};
  const std::vector<Site> obs{at(0.0)};
  const KrigingSystem system(model, obs);
  const auto lambda = system.weights(at(0.3));
  EXPECT_NEAR(lambda[0], weibull_corr(model.corr, {0.3, 0.0}, 3.0), 1e-15);
}

TEST(Kriging, WeightsSolveSystemAndMspeBounded) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const WeibullFieldModel model{2.5, {0.1, 0.2}, Matern{0.3, 1.5}};
  std::vector<Site> sites;
  std::vector<double> values;
  for (int i = 0; i < 15; ++i) {
    sites.push_back(Site{{u(rng), u(rng)}, std::nullopt, {u(rng)}});
    values.push_back(0.5 + u(rng));
  }
  const KrigingSystem system(model, sites);
  for (int t = 0; t < 20; ++t) {
    const Site target{{u(rng), u(rng)}, std::nullopt, {u(rng)}};
    const auto lambda = system.weights(target);
    Eigen::MatrixXd c(15, 15);
    for (int i = 0; i < 15; ++i)
      for (int j = 0; j < 15; ++j)
        c(i, j) = i == j ? 1.0 : weibull_corr(model.corr, lag_between(sites[static_cast<std::size_t>(i)], sites[static_cast<std::size_t>(j)]), 2.5);
    EXPECT_LT((c * lambda - system.target_correlations(target)).cwiseAbs().maxCoeff(), 1e-12);
    const auto r = system.predict(values, target);
    const double mu0 = mean_function(model.beta, target);
    EXPECT_GE(r.mspe, 0.0);
    EXPECT_LE(r.mspe, mu0 * mu0 * system.sigma2_w());
  }
}

TEST(Kriging, SingularSystemThrows) {
  const WeibullFieldModel model{2.0, {0.0}, Exponential{1.0}};
  const std::vector<Site> dup{at(0.5), at(0.5)};
  EXPECT_THROW(KrigingSystem(model, dup), domain_error);
}

TEST(OptimalPredictor, MatchesQuadrature) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double kappa = 0.5 + 9.5 * u(rng);
    const double phi = 0.02 + 0.2 * u(rng);
    const WeibullFieldModel model{kappa, {0.0}, Exponential{phi}};
    const std::vector<Site> sites{at(0.0), at(0.05), at(0.1)};
    const double y_n = 0.1 + 2.5 * u(rng);
    const std::vector<double> values{1.0, 0.8, y_n};
    const Site target = at(0.15);
    const double closed = optimal_predictor_chain(model, sites, values, target, 1.0);
    const double rho = std::exp(-0.05 / phi);
    const double quad = oracle::conditional_moment_by_quadrature(y_n, 1.0, 1.0, rho, kappa, 1.0);
    EXPECT_NEAR(closed, quad, 1e-6) << kappa << " " << phi << " " << y_n;
  }
}

TEST(OptimalPredictor, GeneralExponentAndMeans) {
  for (double a : {0.5, 2.0, 3.0}) {
    const double kappa = 2.2, rho = 0.8, mu_n = 1.3, mu_next = 0.7, y_n = 1.9;
    const double closed = optimal_predictor_from_last(y_n, mu_n, mu_next, rho, kappa, a);
    const double quad = oracle::conditional_moment_by_quadrature(y_n, mu_n, mu_next, rho, kappa, a);
    EXPECT_NEAR(closed, quad, 1e-8 * quad) << a;
  }
}

TEST(OptimalPredictor, SingleConditioningPoint) {
  const WeibullFieldModel model{1.7, {0.0}, Exponential{0.1}};
  const std::vector<Site> one{at(0.0)};
  const double closed = optimal_predictor_chain(model, one, std::vector<double>{1.4}, at(0.05));
  EXPECT_NEAR(closed, oracle::conditional_moment_by_quadrature(1.4, 1.0, 1.0, std::exp(-0.5), 1.7, 1.0), 1e-8);
}

TEST(OptimalPredictor, IndependentLimitIsUnconditionalMean) {
  const WeibullFieldModel model{3.0, {0.4, 0.1}, Exponential{0.01}};
  const std::vector<Site> sites{at(0.0, {1.0}), at(0.5, {2.0})};
  const Site target = at(100.0, {3.0});
  const double mu = mean_function(model.beta, target);
  EXPECT_EQ(optimal_predictor_chain(model, sites, std::vector<double>{1.0, 2.0}, target), mu);
  EXPECT_EQ(optimal_predictor_from_last(2.0, 1.0, 1.0, 0.0, 3.0, 1.0), 1.0);
  // E[Y²] at independence is Γ(1+2/κ)ν².
  EXPECT_NEAR(optimal_predictor_from_last(2.0, 1.0, 1.0, 0.0, 3.0, 2.0), 1.0 + weibull_variance_factor(3.0), 1e-14);
}

TEST(OptimalPredictor, DependsOnLastObservationOnly) {
  const WeibullFieldModel model{2.0, {0.0}, Exponential{0.1}};
  const std::vector<Site> sites{at(0.0), at(0.05), at(0.1)};
  const double a = optimal_predictor_chain(model, sites, std::vector<double>{0.2, 3.0, 1.1}, at(0.15));
  const double b = optimal_predictor_chain(model, sites, std::vector<double>{2.5, 0.4, 1.1}, at(0.15));
  EXPECT_EQ(a, b);
}

TEST(OptimalPredictor, Preconditions) {
  const WeibullFieldModel model{2.0, {0.0}, Exponential{0.1}};
  const std::vector<Site> sites{at(0.0), at(0.05)};
  const std::vector<double> v{1.0, 1.0};
  EXPECT_THROW(optimal_predictor_chain(model, sites, v, at(0.02)), domain_error);
  const std::vector<Site> unordered{at(0.05), at(0.0)};
  EXPECT_THROW(optimal_predictor_chain(model, unordered, v, at(0.1)), domain_error);
  const WeibullFieldModel matern{2.0, {0.0}, Matern{0.1, 1.5}};
  EXPECT_THROW(optimal_predictor_chain(matern, sites, v, at(0.1)), domain_error);
}

TEST(Crps, ExponentialSpecialCase) {
  EXPECT_NEAR(crps_weibull(1.0, 1.0, 1.0), 1.0 + 2.0 * std::exp(-1.0) - 1.5, 1e-10);
  EXPECT_NEAR(crps_weibull(1.0, 1.0, 0.0), 0.5, 1e-14);
  for (double y : {0.3, 2.0, 5.0}) EXPECT_NEAR(crps_weibull(1.0, 1.0, y), y + 2.0 * std::exp(-y) - 1.5, 1e-13);
}

TEST(Crps, WeibullMatchesDefinition) {
  for (double kappa : {0.8, 2.0, 7.0})
    for (double scale : {0.5, 1.0, 3.0})
      for (double q : {0.01, 0.2, 0.5, 0.8, 0.99}) {
        const WeibullMarginal f(kappa, scale);
        const double y = f.quantile(q);
        const double upper = f.quantile(1.0 - 1e-16) * 1.5 + y;
        const double quad = oracle::crps_by_quadrature([&](double t) { return f.cdf(t); }, y, upper);
        EXPECT_NEAR(crps_weibull(kappa, scale, y), quad, 1e-6) << kappa << " " << scale << " " << y;
      }
}

TEST(Crps, LogGaussianMatchesDefinition) {
  for (double mu : {-0.5, 0.0, 1.0})
    for (double s2 : {0.05, 0.4, 1.2})
      for (double q : {0.01, 0.2, 0.5, 0.8, 0.99}) {
        const LogGaussianMarginal f(mu, s2);
        const double y = f.quantile(q);
        const double upper = f.quantile(1.0 - 1e-15) * 3.0 + y;
        const double quad = oracle::crps_by_quadrature([&](double t) { return f.cdf(t); }, y, upper);
        EXPECT_NEAR(crps_loggaussian(mu, s2, y), quad, 1e-6) << mu << " " << s2 << " " << y;
      }
}

TEST(Crps, LogGaussianLimits) {
  // Point-mass limit.
  for (double y : {0.5, 1.0, 4.0}) EXPECT_NEAR(crps_loggaussian(0.3, 1e-12, y), std::fabs(y - std::exp(0.3)), 1e-5);
  // At the median the first bracket vanishes.
  const double mu = 0.2, s2 = 0.5;
  const double med = std::exp(mu - 0.5 * s2);
  const double sigma = std::sqrt(s2);
  EXPECT_NEAR(crps_loggaussian(mu, s2, med),
              2.0 * std::exp(mu) * (normal_cdf(-sigma / std::numbers::sqrt2) - normal_cdf(-sigma)), 1e-15);
}

TEST(Crps, NonNegativeAndProperAtDeskScale) {
  const double kappa = 2.5;
  const WeibullMarginal truth(kappa, 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> diff;
  for (int i = 0; i < 20000; ++i) {
    const double y = truth.quantile(u(rng));
    const double a = crps_weibull(kappa, 1.0, y), b = crps_weibull(1.5, 1.0, y);
    EXPECT_GE(a, 0.0);
    diff.push_back(b - a);
  }
  const auto m = oracle::mean_se(diff);
  EXPECT_GT(m.mean + 3.0 * m.se, 0.0);
  EXPECT_GT(m.mean, 0.0);
}

TEST(Crps, DispatchOnMarginal) {
  const PlugInMarginal w = weibull_field_marginal(2.0, 1.5);
  const PlugInMarginal l = LogGaussianMarginal(0.1, 0.3);
  EXPECT_EQ(crps(w, 1.2), crps_weibull(2.0, 1.5 * weibull_nu(2.0), 1.2));
  EXPECT_EQ(crps(l, 1.2), crps_loggaussian(0.1, 0.3, 1.2));
}

TEST(LogGaussianPredictor, ConditionalMeanOfGaussianScale) {
  const LogGaussianFieldModel model{0.6, {0.2}, Exponential{0.5}};
  const std::vector<Site> obs{at(0.0), at(0.3), at(0.7)};
  const std::vector<double> y{1.1, 0.7, 1.8};
  const Site target = at(0.5);
  const LogGaussianPredictor p(model, obs);
  // Gaussian conditioning of log Y, then the log-normal mean.
  Eigen::Matrix3d c;
  Eigen::Vector3d c0, z;
  for (int i = 0; i < 3; ++i) {
    c0[i] = std::exp(-std::fabs(obs[static_cast<std::size_t>(i)].coords[0] - 0.5) / 0.5);
    z[i] = std::log(y[static_cast<std::size_t>(i)]) - (0.2 - 0.3);
    for (int j = 0; j < 3; ++j)
      c(i, j) = std::exp(-std::fabs(obs[static_cast<std::size_t>(i)].coords[0] - obs[static_cast<std::size_t>(j)].coords[0]) / 0.5);
  }
  const Eigen::Vector3d w = c.inverse() * c0;
  const double m = (0.2 - 0.3) + w.dot(z);
  const double v = 0.6 * (1.0 - w.dot(c0));
  EXPECT_NEAR(p.predict(y, target), std::exp(m + 0.5 * v), 1e-13);
  EXPECT_EQ(p.predict(y, obs[1]), 0.7);
  // Log-normal conditional variance: e^{2m+v}(e^{v} - 1).
  const auto full = p.predict_with_mspe(y, target);
  EXPECT_NEAR(full.point, std::exp(m + 0.5 * v), 1e-13);
  EXPECT_NEAR(full.mspe, std::exp(2.0 * m + v) * (std::exp(v) - 1.0), 1e-12);
  EXPECT_EQ(p.predict_with_mspe(y, obs[2]).mspe, 0.0);
}

TEST(Naive, PreviousDay) {
  const std::vector<Site> s{Site{{0.0}, 0, {}}, Site{{0.0}, 1, {}}, Site{{0.0}, 2, {}}};
  const auto p = naive_predict(s, std::vector<double>{1.0, 2.0, 3.0});
  EXPECT_FALSE(p[0].has_value());
  EXPECT_EQ(*p[1], 1.0);
  EXPECT_EQ(*p[2], 2.0);
  EXPECT_THROW(naive_predict_strict(s, std::vector<double>{1.0, 2.0, 3.0}), domain_error);
  const auto c = naive_predict(s, std::vector<double>{4.0, 4.0, 4.0});
  EXPECT_EQ(*c[1] - 4.0, 0.0);
  EXPECT_EQ(*c[2] - 4.0, 0.0);
}

TEST(Naive, StationsKeptApart) {
  const std::vector<Site> s{Site{{0.0}, 0, {}}, Site{{1.0}, 0, {}}, Site{{1.0}, 1, {}}, Site{{0.0}, 1, {}}};
  const auto p = naive_predict(s, std::vector<double>{1.0, 5.0, 6.0, 2.0});
  EXPECT_EQ(*p[2], 5.0);
  EXPECT_EQ(*p[3], 1.0);
}

TEST(Score, Definitions) {
  const std::vector<double> obs{1.0, 2.0};
  const auto perfect = score(obs, obs);
  EXPECT_EQ(perfect.rmse, 0.0);
  EXPECT_EQ(perfect.mae, 0.0);
  EXPECT_TRUE(std::isnan(perfect.mean_crps));
  const auto off = score(std::vector<double>{2.0, 1.0}, obs);
  EXPECT_DOUBLE_EQ(off.rmse, 1.0);
  EXPECT_DOUBLE_EQ(off.mae, 1.0);
  EXPECT_THROW(score(std::vector<double>{1.0}, obs), domain_error);
  const std::vector<PlugInMarginal> m{weibull_field_marginal(1.0, 1.0), weibull_field_marginal(1.0, 1.0)};
  const auto s = score(obs, obs, m);
  EXPECT_NEAR(s.mean_crps, 0.5 * (crps_weibull(1.0, 1.0, 1.0) + crps_weibull(1.0, 1.0, 2.0)), 1e-15);
}
