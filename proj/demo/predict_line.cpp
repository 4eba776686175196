// One step ahead on the line: simple kriging vs the conditional mean of a
// Weibull chain, averaged over simulated paths.

#include <chi2field/predict.hpp>
#include <chi2field/process.hpp>

#include <cmath>
#include <cstdio>

using namespace chi2field;

int main() {
  std::vector<Site> all;
  for (int i = 0; i <= 21; ++i) all.push_back(Site{{0.05 * i}, std::nullopt, {}});
  const std::vector<Site> observed(all.begin(), all.end() - 1);
  const Site target = all.back();
  for (double kappa : {1.0, 3.0, 10.0}) {
    const WeibullFieldModel model{kappa, {0.0}, Exponential{0.1}};
    const KrigingSystem krige(model, observed);
    const auto paths = simulate_weibull(model, all, 2000, 11);
    double se_opt = 0.0, se_lin = 0.0;
    for (Eigen::Index r = 0; r < paths.cols(); ++r) {
      const std::vector<double> v(paths.col(r).data(), paths.col(r).data() + 21);
      const double truth = paths(21, r);
      const double opt = optimal_predictor_chain(model, observed, v, target);
      const double lin = krige.predict(v, target).point;
      se_opt += (truth - opt) * (truth - opt);
      se_lin += (truth - lin) * (truth - lin);
    }
    std::printf("kappa %4.1f  MSPE optimal %.4f  linear %.4f  ratio %.3f\n", kappa, se_opt / 2000, se_lin / 2000, se_opt / se_lin);
  }
}
