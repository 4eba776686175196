#include <chi2field/copula.hpp>
#include <chi2field/correlation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace chi2field;

namespace {

Site point(std::vector<double> c, std::optional<int> t = std::nullopt) { return Site{std::move(c), t, {}}; }

}  // namespace

TEST(Corr, ZeroLagIsOne) {
  EXPECT_EQ(corr(Exponential{0.3}, {0.0, 0.0}), 1.0);
  EXPECT_EQ(corr(Matern{0.3, 1.5}, {0.0, 0.0}), 1.0);
  EXPECT_EQ(corr(SpaceTimeGW{2.0, 3.0, 0.5}, {0.0, 0.0}), 1.0);
}

TEST(Corr, MaternHalfIsExponential) {
  for (double d : {0.01, 0.2, 1.0, 4.0}) EXPECT_NEAR(corr(Matern{0.7, 0.5}, {d, 0.0}), std::exp(-d / 0.7), 1e-15);
}

TEST(Corr, MaternThreeHalvesClosedForm) {
  for (double d : {0.05, 0.5, 2.0}) {
    const double r = d / 0.4;
    EXPECT_NEAR(corr(Matern{0.4, 1.5}, {d, 0.0}), (1.0 + r) * std::exp(-r), 1e-14);
  }
}

TEST(Corr, SeparableWhenNoInteraction) {
  const SpaceTimeGW m{3.0, 5.0, 0.0};
  for (double h : {0.0, 0.5, 2.0, 9.0})
    for (double u : {0.0, 1.0, 3.0, 4.9, 6.0}) {
      const double cauchy = std::pow(1.0 + h / 3.0, -2.5);
      const double wendland = u < 5.0 ? std::pow(1.0 - u / 5.0, 3.5) : 0.0;
      EXPECT_NEAR(corr(m, {h, u}), cauchy * wendland, 1e-14 * std::max(1.0, cauchy)) << h << " " << u;
      EXPECT_NEAR(corr(m, {h, u}), cauchy_spatial(h, 3.0) * wendland_temporal(u, 5.0), 1e-14);
    }
}

TEST(Corr, InteractionFormMatchesPrintedExpression) {
  const SpaceTimeGW m{2.0, 4.0, 0.6};
  for (double h : {0.0, 1.0, 5.0})
    for (double u : {0.0, 1.0, 2.0, 3.5}) {
      const double g = 1.0 + h / 2.0;
      const double base = 1.0 - (u / 4.0) / std::pow(g, -0.6);
      const double expected = std::pow(g, -2.5) * std::pow(std::max(0.0, base), 3.5);
      EXPECT_NEAR(corr(m, {h, u}), expected, 1e-14);
    }
}

TEST(Corr, SpaceTimeContinuity) {
  const SpaceTimeGW m{2.0, 4.0, 1.0};
  for (double h = 0.0; h < 6.0; h += 0.5)
    for (double u = 0.0; u < 4.0; u += 0.25) {
      const double c = corr(m, {h, u});
      EXPECT_NEAR(corr(m, {h + 1e-9, u + 1e-9}), c, 1e-7);
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
    }
}

TEST(Corr, Validation) {
  EXPECT_THROW(validate(Exponential{0.0}), domain_error);
  EXPECT_THROW(validate(Matern{1.0, -1.0}), domain_error);
  EXPECT_THROW(validate(SpaceTimeGW{1.0, 1.0, 1.5}), domain_error);
  EXPECT_THROW(corr(Exponential{1.0}, {-1.0, 0.0}), domain_error);
}

TEST(Chi2Corr, Squares) {
  EXPECT_EQ(chi2_corr(Exponential{1.0}, {0.0, 0.0}), 1.0);
  const double d = -std::log(0.6);
  EXPECT_NEAR(chi2_corr(Exponential{1.0}, {d, 0.0}), 0.36, 1e-15);
}

TEST(WeibullCorr, EndpointsAndBounds) {
  for (double kappa : {0.5, 1.0, 3.0, 10.0, 30.0}) {
    EXPECT_EQ(weibull_corr_from_rho2(0.0, kappa), 0.0);
    EXPECT_NEAR(weibull_corr_from_rho2(1.0, kappa), 1.0, 1e-14);
    double previous = 0.0;
    for (double r2 = 0.01; r2 < 1.0; r2 += 0.01) {
      const double w = weibull_corr_from_rho2(r2, kappa);
      EXPECT_GE(w, previous) << kappa << " " << r2;
      EXPECT_LE(w, 1.0);
      previous = w;
    }
  }
}

TEST(WeibullCorr, ExponentialShapeIsChi2Correlation) {
  // κ = 1: W = X₂, whose correlation is ρ².
  for (double r2 : {0.1, 0.5, 0.9}) EXPECT_NEAR(weibull_corr_from_rho2(r2, 1.0), r2, 1e-14);
}

TEST(WeibullCorr, ContinuousAcrossSeriesBranches) {
  for (double kappa : {1.0, 3.0, 10.0}) {
    const double x = 0.9;
    EXPECT_NEAR(weibull_corr_from_rho2(x * (1.0 - 1e-13), kappa), weibull_corr_from_rho2(x * (1.0 + 1e-13), kappa),
                1e-10);
    // Above 1 - 1e-8 the endpoint value is used; the step there is of order 1e-8.
    const double t = kGaussEndpointThreshold;
    EXPECT_NEAR(weibull_corr_from_rho2(t * (1.0 - 1e-13), kappa), weibull_corr_from_rho2(t * (1.0 + 1e-13), kappa),
                1e-6);
  }
}

TEST(CorrMatrix, SmallExamples) {
  const std::vector<Site> one{point({0.3})};
  EXPECT_EQ(corr_matrix(Exponential{1.0}, one), Eigen::MatrixXd::Identity(1, 1));
  const std::vector<Site> two{point({0.0}), point({0.25})};
  const auto r = corr_matrix(Exponential{0.5}, two);
  EXPECT_EQ(r(0, 1), std::exp(-0.5));
  EXPECT_EQ(r(1, 0), r(0, 1));
  EXPECT_EQ(r(0, 0), 1.0);
}

TEST(CorrMatrix, RegularGridFactorizes) {
  std::vector<Site> grid;
  for (int i = 0; i < 150; ++i) grid.push_back(point({i / 149.0}));
  for (double phi : {0.1 / 3, 0.2 / 3, 0.3 / 3}) {
    const auto r = corr_matrix(Exponential{phi}, grid);
    const auto l = cholesky_lower(r);
    EXPECT_LT((l * l.transpose() - r).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(CorrMatrix, RejectsDuplicatesAndReportsPivot) {
  const std::vector<Site> dup{point({1.0}, 2), point({1.0}, 2)};
  EXPECT_THROW(corr_matrix(Exponential{1.0}, dup), domain_error);
  const std::vector<Site> distinct_times{point({1.0}, 2), point({1.0}, 3)};
  EXPECT_NO_THROW(corr_matrix(SpaceTimeGW{1.0, 5.0, 0.0}, distinct_times));
  Eigen::MatrixXd bad(3, 3);
  bad << 1, 0.2, 0.9, 0.2, 1, 0.9, 0.9, 0.9, 1;
  try {
    cholesky_lower(bad);
    FAIL() << "expected not_positive_definite";
  } catch (const not_positive_definite& e) {
    EXPECT_EQ(e.pivot(), 2u);
  }
}

TEST(CorrMatrix, GreatCircleMetric) {
  // One degree of latitude ≈ 111.19 km.
  const std::vector<Site> s{point({5.0, 52.0}), point({5.0, 53.0})};
  const auto r = corr_matrix(Exponential{100.0}, s, DistanceMetric::great_circle_km);
  EXPECT_NEAR(-100.0 * std::log(r(0, 1)), kEarthRadiusKm * std::numbers::pi / 180.0, 1e-9);
}

TEST(Copula, IndependenceIsBivariateNormal) {
  const auto grid = square_grid(-3.0, 3.0, 13);
  for (int m : {1, 2, 5}) {
    const auto out = copula_density_normal_scale(grid, 0.0, m);
    for (const auto& p : out) {
      ASSERT_TRUE(p.ok);
      EXPECT_NEAR(p.density, normal_pdf(p.z1) * normal_pdf(p.z2), 1e-11);
    }
  }
}

TEST(Copula, ExchangeableButNotReflectionSymmetric) {
  const std::vector<std::pair<double, double>> g{{0.7, -1.2}, {-1.2, 0.7}, {2.0, 2.0}, {-2.0, -2.0}};
  const auto out = copula_density_normal_scale(g, 0.95, 1);
  EXPECT_NEAR(out[0].density, out[1].density, 1e-14);
  // The χ² copula puts more mass at the joint upper corner on the normal scale.
  EXPECT_GT(std::fabs(out[2].density - out[3].density), 1e-3 * out[2].density);
  EXPECT_GT(out[2].density, out[3].density);
}

TEST(Copula, IntegratesToOne) {
  for (auto [m, rho] : {std::pair{1, 0.6}, std::pair{2, 0.9}, std::pair{10, 0.3}}) {
    const std::size_t n = 400;
    const auto grid = square_grid(-6.0, 6.0, n);
    const auto out = copula_density_normal_scale(grid, rho, m);
    const double h = 12.0 / static_cast<double>(n - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto& p = out[i * n + j];
        ASSERT_TRUE(p.ok) << p.z1 << " " << p.z2;
        const double wi = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        const double wj = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
        total += wi * wj * p.density;
      }
    EXPECT_NEAR(total * h * h, 1.0, 1e-4) << m << " " << rho;
  }
}
