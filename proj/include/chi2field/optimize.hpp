#pragma once

// Derivative-free minimization and finite-difference derivatives.

#include <chi2field/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace chi2field {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimizerOptions {
  std::size_t max_evaluations = 20000;
  /// Converged once every vertex lies within xtol of the best one (max norm).
  double xtol = 1e-8;
  double initial_step = 0.2;
  /// Fresh simplices started from the best point after convergence.
  int restarts = 1;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

/// Nelder–Mead simplex with the standard coefficients (1, 2, ½, ½).
/// Non-finite objective values are treated as +∞.
inline OptimizerResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const OptimizerOptions& opt = {}) {
  const auto n = x0.size();
  OptimizerResult res;
  res.x = x0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  if (n == 0) {
    res.value = eval(x0);
    res.converged = true;
    return res;
  }
  Eigen::VectorXd start = x0;
  double start_value = eval(start);
  for (int run = 0; run <= opt.restarts; ++run) {
    std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(n + 1), start);
    std::vector<double> fv(static_cast<std::size_t>(n + 1), start_value);
    for (Eigen::Index k = 0; k < n; ++k) {
      auto& p = v[static_cast<std::size_t>(k + 1)];
      p[k] += opt.initial_step;
      fv[static_cast<std::size_t>(k + 1)] = eval(p);
    }
    std::vector<std::size_t> order(v.size());
    bool converged = false;
    while (res.evaluations < opt.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
      const auto& best = v[order.front()];
      double diameter = 0.0;
      for (std::size_t k = 1; k < v.size(); ++k)
        diameter = std::max(diameter, (v[order[k]] - best).cwiseAbs().maxCoeff());
      if (diameter < opt.xtol && std::isfinite(fv[order.front()])) {
        converged = true;
        break;
      }
      ++res.iterations;
      const std::size_t worst = order.back(), second = order[order.size() - 2];
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += v[order[k]];
      centroid /= static_cast<double>(n);
      const Eigen::VectorXd xr = centroid + (centroid - v[worst]);
      const double fr = eval(xr);
      if (fr < fv[order.front()]) {
        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - v[worst]);
        const double fe = eval(xe);
        if (fe < fr) {
          v[worst] = xe;
          fv[worst] = fe;
        } else {
          v[worst] = xr;
          fv[worst] = fr;
        }
        continue;
      }
      if (fr < fv[second]) {
        v[worst] = xr;
        fv[worst] = fr;
        continue;
      }
      const bool outside = fr < fv[worst];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                         : Eigen::VectorXd(centroid + 0.5 * (v[worst] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[worst])) {
        v[worst] = xc;
        fv[worst] = fc;
        continue;
      }
      const Eigen::VectorXd keep = v[order.front()];
      for (std::size_t k = 1; k < order.size(); ++k) {
        auto& p = v[order[k]];
        p = keep + 0.5 * (p - keep);
        fv[order[k]] = eval(p);
      }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    start = v[best];
    start_value = fv[best];
    res.converged = converged;
    if (!converged) break;
  }
  res.x = start;
  res.value = start_value;
  return res;
}

/// Central-difference step h_i = 1e-4 (1 + |x_i|).
inline Eigen::VectorXd difference_steps(const Eigen::VectorXd& x) {
  return (1e-4 * (1.0 + x.array().abs())).matrix();
}

inline Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x) {
  const Eigen::VectorXd h = difference_steps(x);
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h[i];
    b[i] -= h[i];
    const double fa = f(a), fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fb))
      throw numerical_error("numeric_gradient: non-finite value within one step of the point (boundary?)");
    g[i] = (fa - fb) / (2.0 * h[i]);
  }
  return g;
}

/// -∇²f(x) by central second differences, symmetrized.
inline Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x) {
  const auto n = x.size();
  const Eigen::VectorXd h = difference_steps(x);
  auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    Eigen::VectorXd y = x;
    y[i] += si * h[i];
    y[j] += sj * h[j];
    const double v = f(y);
    if (!std::isfinite(v))
      throw numerical_error("numeric_hessian: non-finite value within one step of the point (boundary?)");
    return v;
  };
  const double f0 = f(x);
  if (!std::isfinite(f0)) throw numerical_error("numeric_hessian: non-finite value at the point");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd up = x, down = x;
    up[i] += h[i];
    down[i] -= h[i];
    const double fu = f(up), fd = f(down);
    if (!std::isfinite(fu) || !std::isfinite(fd))
      throw numerical_error("numeric_hessian: non-finite value within one step of the point (boundary?)");
    m(i, i) = -(fu - 2.0 * f0 + fd) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1);
      m(i, j) = m(j, i) = -d / (4.0 * h[i] * h[j]);
    }
  }
  return 0.5 * (m + m.transpose());
}

}  // namespace chi2field
