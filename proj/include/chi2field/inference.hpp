#pragma once

// Maximum weighted pairwise likelihood and full chain likelihood fits,
// sandwich standard errors, information criterion, efficiency and prefits.

#include <chi2field/correlation.hpp>
#include <chi2field/dataset.hpp>
#include <chi2field/density.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/model.hpp>
#include <chi2field/optimize.hpp>
#include <chi2field/pairwise.hpp>
#include <chi2field/specialfn.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace chi2field {

enum class CorrFamily { exponential, matern, spacetime_gw };

inline CorrFamily family_of(const CorrelationModel& c) {
  if (std::holds_alternative<Exponential>(c)) return CorrFamily::exponential;
  if (std::holds_alternative<Matern>(c)) return CorrFamily::matern;
  return CorrFamily::spacetime_gw;
}

enum class Transform { identity, log, logit };

struct ParameterInfo {
  std::string name;
  Transform transform = Transform::identity;
  bool fixed = false;
  double fixed_value = 0.0;
};

/// Natural parameter vector (β₀..β_p, κ or σ², correlation parameters) and
/// the unconstrained coordinates the optimizer works in: log for positive
/// parameters, logit for φ_ST. Fixed parameters are held out of the free set.
class ParameterSpace {
 public:
  ParameterSpace(MarginalFamily marginal, CorrFamily corr, std::size_t n_beta)
      : marginal_(marginal), corr_(corr), n_beta_(n_beta) {
    if (n_beta == 0) throw domain_error("ParameterSpace: need at least an intercept");
    for (std::size_t k = 0; k < n_beta; ++k) info_.push_back({"beta" + std::to_string(k), Transform::identity});
    info_.push_back({marginal == MarginalFamily::weibull ? "kappa" : "sigma2", Transform::log});
    switch (corr) {
      case CorrFamily::exponential: info_.push_back({"phi", Transform::log}); break;
      case CorrFamily::matern:
        info_.push_back({"phi", Transform::log});
        info_.push_back({"nu", Transform::log});
        break;
      case CorrFamily::spacetime_gw:
        info_.push_back({"phi_s", Transform::log});
        info_.push_back({"phi_t", Transform::log});
        info_.push_back({"phi_st", Transform::logit});
        break;
    }
  }

  static ParameterSpace matching(const ModelParams& p) {
    return ParameterSpace(p.marginal, family_of(p.corr), p.beta.size());
  }

  ParameterSpace& fix(const std::string& name, double value) {
    auto& e = info_.at(index_of(name));
    e.fixed = true;
    e.fixed_value = value;
    return *this;
  }

  MarginalFamily marginal() const { return marginal_; }
  CorrFamily corr_family() const { return corr_; }
  std::size_t n_beta() const { return n_beta_; }
  std::size_t size() const { return info_.size(); }
  const std::vector<ParameterInfo>& info() const { return info_; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t k = 0; k < info_.size(); ++k)
      if (info_[k].name == name) return k;
    throw domain_error("ParameterSpace: unknown parameter '" + name + "'");
  }

  std::vector<std::size_t> free_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < info_.size(); ++k)
      if (!info_[k].fixed) out.push_back(k);
    return out;
  }
  std::size_t n_free() const { return free_indices().size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : info_) out.push_back(e.name);
    return out;
  }

  std::vector<double> natural(const ModelParams& p) const {
    check_shape(p);
    std::vector<double> v(p.beta.begin(), p.beta.end());
    v.push_back(p.shape);
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            v.push_back(c.phi);
          } else if constexpr (std::is_same_v<T, Matern>) {
            v.push_back(c.phi);
            v.push_back(c.nu);
          } else {
            v.push_back(c.phi_s);
            v.push_back(c.phi_t);
            v.push_back(c.phi_st);
          }
        },
        p.corr);
    for (std::size_t k = 0; k < info_.size(); ++k)
      if (info_[k].fixed) v[k] = info_[k].fixed_value;
    return v;
  }

  ModelParams params(std::span<const double> v) const {
    if (v.size() != info_.size()) throw domain_error("ParameterSpace: wrong parameter vector length");
    ModelParams p;
    p.marginal = marginal_;
    p.beta.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_beta_));
    p.shape = v[n_beta_];
    const double* c = v.data() + n_beta_ + 1;
    switch (corr_) {
      case CorrFamily::exponential: p.corr = Exponential{c[0]}; break;
      case CorrFamily::matern: p.corr = Matern{c[0], c[1]}; break;
      case CorrFamily::spacetime_gw: p.corr = SpaceTimeGW{c[0], c[1], c[2]}; break;
    }
    return p;
  }

  Eigen::VectorXd to_free(const ModelParams& p) const {
    const auto v = natural(p);
    const auto idx = free_indices();
    Eigen::VectorXd t(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) t[static_cast<Eigen::Index>(k)] = forward(info_[idx[k]].transform, v[idx[k]]);
    return t;
  }

  ModelParams from_free(const Eigen::VectorXd& t) const {
    const auto idx = free_indices();
    if (static_cast<std::size_t>(t.size()) != idx.size()) throw domain_error("ParameterSpace: wrong free vector length");
    std::vector<double> v(info_.size());
    for (std::size_t k = 0; k < info_.size(); ++k) v[k] = info_[k].fixed_value;
    for (std::size_t k = 0; k < idx.size(); ++k) v[idx[k]] = inverse(info_[idx[k]].transform, t[static_cast<Eigen::Index>(k)]);
    return params(v);
  }

  /// dθ/dt for each free coordinate (the transforms act componentwise).
  Eigen::VectorXd jacobian(const Eigen::VectorXd& t) const {
    const auto idx = free_indices();
    Eigen::VectorXd d(t.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      const double th = inverse(info_[idx[k]].transform, t[i]);
      switch (info_[idx[k]].transform) {
        case Transform::identity: d[i] = 1.0; break;
        case Transform::log: d[i] = th; break;
        case Transform::logit: d[i] = th * (1.0 - th); break;
      }
    }
    return d;
  }

 private:
  void check_shape(const ModelParams& p) const {
    if (p.marginal != marginal_ || family_of(p.corr) != corr_ || p.beta.size() != n_beta_)
      throw domain_error("ParameterSpace: parameters do not match the space");
  }

  static double forward(Transform tr, double v) {
    switch (tr) {
      case Transform::identity: return v;
      case Transform::log:
        if (!(v > 0.0)) throw domain_error("ParameterSpace: positive parameter is not positive");
        return std::log(v);
      case Transform::logit: {
        // Endpoints map to a finite start just inside the interval.
        const double c = std::clamp(v, 1e-6, 1.0 - 1e-6);
        return std::log(c / (1.0 - c));
      }
    }
    return v;
  }

  static double inverse(Transform tr, double t) {
    switch (tr) {
      case Transform::identity: return t;
      case Transform::log: return std::exp(t);
      case Transform::logit: return 1.0 / (1.0 + std::exp(-t));
    }
    return t;
  }

  MarginalFamily marginal_;
  CorrFamily corr_;
  std::size_t n_beta_;
  std::vector<ParameterInfo> info_;
};

// ---------------------------------------------------------------------------
// Log-scale least squares prefit

struct PrefitResult {
  std::vector<double> coefficients;
  std::vector<double> residuals;
  double residual_variance = 0.0;
};

/// OLS of log y on [1, covariates].
inline PrefitResult log_ols_prefit(const Dataset& data) {
  data.validate();
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = static_cast<Eigen::Index>(data.n_covariates() + 1);
  if (n < p) throw singular_matrix_error("prefit: fewer observations than coefficients");
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& s = data.sites[static_cast<std::size_t>(k)];
    x(k, 0) = 1.0;
    for (Eigen::Index c = 1; c < p; ++c) x(k, c) = s.covariates[static_cast<std::size_t>(c - 1)];
    y[k] = std::log(data.values[static_cast<std::size_t>(k)]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) throw singular_matrix_error("prefit: design matrix is rank deficient");
  const Eigen::VectorXd b = qr.solve(y);
  const Eigen::VectorXd r = y - x * b;
  PrefitResult out;
  out.coefficients.assign(b.data(), b.data() + p);
  out.residuals.assign(r.data(), r.data() + n);
  out.residual_variance = r.squaredNorm() / static_cast<double>(n);
  return out;
}

/// Regression of log values on q annual harmonics of the time index.
inline PrefitResult harmonic_prefit(const Dataset& data, int q, double period = kYearPeriodDays) {
  if (q < 1) throw domain_error("harmonic_prefit: q must be at least 1");
  return log_ols_prefit(with_harmonic_covariates(data, q, period));
}

/// E log W = log ν(κ) - γ/κ, so the trend intercept is b₀ - log ν(κ) + γ/κ.
inline double weibull_intercept(double log_scale_intercept, double kappa) {
  return log_scale_intercept - std::log(weibull_nu(kappa)) + kEulerGamma / kappa;
}

/// E log Y = log μ - σ²/2.
inline double loggaussian_intercept(double log_scale_intercept, double sigma2) {
  return log_scale_intercept + 0.5 * sigma2;
}

// ---------------------------------------------------------------------------
// Fit results

struct SubsampleInfo {
  std::string axis;
  std::size_t block_length = 0;
  std::size_t step = 0;
  std::size_t n_blocks = 0;
};

struct FitResult {
  std::string method;
  std::vector<std::string> names;
  std::vector<double> theta_hat;
  std::vector<bool> fixed;
  /// Natural-scale standard errors (NaN for fixed parameters); empty unless converged.
  std::vector<double> std_errors;
  double loglik_pl = std::numeric_limits<double>::quiet_NaN();
  double plic = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  SubsampleInfo subsample;
  ModelParams params;
  /// Sensitivity and variability in the optimizer's free coordinates.
  Eigen::MatrixXd sensitivity;
  Eigen::MatrixXd variability;
  std::string note;

  double estimate(const std::string& name) const { return theta_hat.at(position(name)); }
  double std_error(const std::string& name) const {
    if (std_errors.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std_errors.at(position(name));
  }

 private:
  std::size_t position(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return k;
    throw domain_error("FitResult: unknown parameter '" + name + "'");
  }
};

// ---------------------------------------------------------------------------
// Subsampling

struct BlockSpec {
  enum class Axis { time, space };
  Axis axis = Axis::time;
  std::size_t length = 0;
  std::size_t step = 0;
};

/// ⌈√n_t⌉ time units for temporal data, else ⌈√n⌉ contiguous sites; 50% overlap.
inline BlockSpec default_blocks(const Dataset& data) {
  BlockSpec b;
  if (data.has_time()) {
    int lo = *data.sites.front().time, hi = lo;
    for (const auto& s : data.sites) {
      lo = std::min(lo, *s.time);
      hi = std::max(hi, *s.time);
    }
    b.axis = BlockSpec::Axis::time;
    b.length = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(hi - lo + 1))));
  } else {
    b.axis = BlockSpec::Axis::space;
    b.length = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.size()))));
  }
  b.step = std::max<std::size_t>(1, (b.length + 1) / 2);
  return b;
}

/// Pair indices whose two observations both fall inside each block.
inline std::vector<std::vector<std::uint32_t>> block_pairs(const Dataset& data, const PairSet& pairs,
                                                           const BlockSpec& spec) {
  if (spec.length == 0 || spec.step == 0) throw domain_error("BlockSpec: length and step must be positive");
  // Position of each observation along the blocking axis.
  std::vector<long> pos(data.size());
  if (spec.axis == BlockSpec::Axis::time) {
    if (!data.has_time()) throw domain_error("time blocks need a time index on every site");
    for (std::size_t k = 0; k < data.size(); ++k) pos[k] = *data.sites[k].time;
  } else {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return data.sites[a].coords < data.sites[b].coords;
    });
    for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = static_cast<long>(r);
  }
  const long lo = *std::min_element(pos.begin(), pos.end());
  const long hi = *std::max_element(pos.begin(), pos.end());
  const auto len = static_cast<long>(spec.length), step = static_cast<long>(spec.step);
  std::vector<std::vector<std::uint32_t>> out;
  for (long start = lo; start + len - 1 <= hi; start += step) {
    std::vector<std::uint32_t> members;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const long a = pos[pairs.first[k]], b = pos[pairs.second[k]];
      if (std::min(a, b) >= start && std::max(a, b) < start + len) members.push_back(static_cast<std::uint32_t>(k));
    }
    if (!members.empty()) out.push_back(std::move(members));
  }
  return out;
}

struct Variability {
  Eigen::MatrixXd matrix;
  SubsampleInfo info;
};

/// Ĵ: covariance of the block scores of pl, rescaled from the mean block
/// size to the full pair count. Scores are central differences in the free
/// coordinates of `space`.
inline Variability subsample_variability(const PairwiseLikelihood& pl, const Dataset& data, const ParameterSpace& space,
                                         const ModelParams& at, const BlockSpec& spec) {
  const auto blocks = block_pairs(data, pl.pairs(), spec);
  if (blocks.size() < 10)
    throw domain_error("subsample_variability: " + std::to_string(blocks.size()) + " blocks, need at least 10");
  const Eigen::VectorXd t = space.to_free(at);
  const Eigen::VectorXd h = difference_steps(t);
  const auto p = t.size();
  const auto nb = static_cast<Eigen::Index>(blocks.size());
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(nb, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    Eigen::VectorXd up = t, down = t;
    up[i] += h[i];
    down[i] -= h[i];
    const auto tu = pl.pair_terms(space.from_free(up));
    const auto td = pl.pair_terms(space.from_free(down));
    for (Eigen::Index b = 0; b < nb; ++b) {
      double s = 0.0;
      for (auto k : blocks[static_cast<std::size_t>(b)]) s += tu[k] - td[k];
      scores(b, i) = s / (2.0 * h[i]);
    }
  }
  if (!scores.allFinite()) throw numerical_error("subsample_variability: non-finite block score");
  double mean_pairs = 0.0;
  for (const auto& b : blocks) mean_pairs += static_cast<double>(b.size());
  mean_pairs /= static_cast<double>(nb);
  const Eigen::RowVectorXd centre = scores.colwise().mean();
  const Eigen::MatrixXd c = scores.rowwise() - centre;
  Variability out;
  out.matrix = (c.transpose() * c) / static_cast<double>(nb - 1) * (static_cast<double>(pl.n_pairs()) / mean_pairs);
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
  out.info = {spec.axis == BlockSpec::Axis::time ? "time" : "space", spec.length, spec.step, blocks.size()};
  return out;
}

/// PLIC = -2 pl(θ̂) + 2 tr(Ĵ Ĥ⁻¹).
inline double plic(double loglik_pl, const Eigen::MatrixXd& h, const Eigen::MatrixXd& j) {
  if (h.rows() != h.cols() || j.rows() != h.rows() || j.cols() != h.cols())
    throw domain_error("plic: H and J must be square and of equal size");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  if (!lu.isInvertible()) throw singular_matrix_error("plic: H is singular");
  return -2.0 * loglik_pl + 2.0 * (j * lu.inverse()).trace();
}

/// (det F_a / det F_b)^{1/p}.
inline double relative_efficiency(const Eigen::MatrixXd& fa, const Eigen::MatrixXd& fb) {
  if (fa.rows() != fa.cols() || fb.rows() != fb.cols() || fa.rows() != fb.rows() || fa.rows() == 0)
    throw domain_error("relative_efficiency: matrices must be square, nonempty and of equal size");
  const double da = fa.determinant(), db = fb.determinant();
  if (!(da > 0.0) || !(db > 0.0)) throw domain_error("relative_efficiency: determinants must be positive");
  return std::pow(da / db, 1.0 / static_cast<double>(fa.rows()));
}

/// Sample mean squared error matrix of estimates around the truth.
inline Eigen::MatrixXd mse_matrix(const std::vector<std::vector<double>>& estimates, std::span<const double> truth) {
  if (estimates.empty()) throw domain_error("mse_matrix: no estimates");
  const auto p = static_cast<Eigen::Index>(truth.size());
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(p, p);
  for (const auto& e : estimates) {
    if (e.size() != truth.size()) throw domain_error("mse_matrix: estimate length mismatch");
    Eigen::VectorXd d(p);
    for (Eigen::Index i = 0; i < p; ++i) d[i] = e[static_cast<std::size_t>(i)] - truth[static_cast<std::size_t>(i)];
    f += d * d.transpose();
  }
  return f / static_cast<double>(estimates.size());
}

// ---------------------------------------------------------------------------
// Fitting

struct FitOptions {
  OptimizerOptions optimizer;
  bool std_errors = true;
  std::optional<BlockSpec> blocks;
};

/// Starting values: log-scale OLS for the trend with the family's intercept
/// shift, shape from the residual spread, and the best correlation
/// parameters on a coarse grid scaled to the selected lags.
inline ModelParams default_init(const Dataset& data, const PairwiseLikelihood& pl, const ParameterSpace& space) {
  const auto pre = log_ols_prefit(data);
  if (pre.coefficients.size() != space.n_beta())
    throw domain_error("default_init: covariate count does not match the parameter space");
  ModelParams p;
  p.marginal = space.marginal();
  p.beta = pre.coefficients;
  const double v = std::max(pre.residual_variance, 1e-6);
  if (p.marginal == MarginalFamily::weibull) {
    p.shape = std::numbers::pi / std::sqrt(6.0 * v);
    p.beta[0] = weibull_intercept(p.beta[0], p.shape);
  } else {
    p.shape = v;
    p.beta[0] = loggaussian_intercept(p.beta[0], p.shape);
  }
  std::vector<double> dist, gaps;
  for (const auto& l : pl.pairs().lags) {
    if (l.spatial > 0.0) dist.push_back(l.spatial);
    gaps.push_back(l.temporal);
  }
  double d_mid = 1.0;
  if (!dist.empty()) {
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2), dist.end());
    d_mid = dist[dist.size() / 2];
  }
  const double u_max = gaps.empty() ? 1.0 : std::max(1.0, *std::max_element(gaps.begin(), gaps.end()));
  std::vector<CorrelationModel> grid;
  switch (space.corr_family()) {
    case CorrFamily::exponential:
      for (double f : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) grid.push_back(Exponential{f * d_mid});
      break;
    case CorrFamily::matern:
      for (double f : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) grid.push_back(Matern{f * d_mid, 0.5});
      break;
    case CorrFamily::spacetime_gw:
      for (double fs : {0.25, 1.0, 4.0, 16.0})
        for (double ft : {1.5, 3.0, 6.0, 12.0}) grid.push_back(SpaceTimeGW{fs * d_mid, ft * u_max, 0.5});
      break;
  }
  double best = -std::numeric_limits<double>::infinity();
  ModelParams chosen = p;
  for (const auto& c : grid) {
    ModelParams q = p;
    q.corr = c;
    q = space.params(space.natural(q));  // apply fixed values
    double value = -std::numeric_limits<double>::infinity();
    try {
      value = pl(q);
    } catch (const std::exception&) {
    }
    if (value > best) {
      best = value;
      chosen = q;
    }
  }
  return chosen;
}

namespace detail {

inline FitResult optimize_in(const ParameterSpace& space, const ModelParams& init,
                             const std::function<double(const ModelParams&)>& loglik, const OptimizerOptions& opt) {
  auto objective = [&](const Eigen::VectorXd& t) {
    try {
      return -loglik(space.from_free(t));
    } catch (const domain_error&) {
      return std::numeric_limits<double>::infinity();
    } catch (const numerical_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto r = nelder_mead(objective, space.to_free(init), opt);
  FitResult out;
  out.names = space.names();
  out.params = space.from_free(r.x);
  out.theta_hat = space.natural(out.params);
  for (const auto& e : space.info()) out.fixed.push_back(e.fixed);
  out.loglik_pl = -r.value;
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  if (!r.converged) out.note = "optimizer budget exhausted; estimates are best-so-far";
  return out;
}

inline std::vector<double> natural_std_errors(const ParameterSpace& space, const Eigen::VectorXd& t,
                                              const Eigen::MatrixXd& cov_t) {
  const auto idx = space.free_indices();
  const Eigen::VectorXd d = space.jacobian(t);
  std::vector<double> se(space.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    se[idx[k]] = cov_t(i, i) >= 0.0 ? std::fabs(d[i]) * std::sqrt(cov_t(i, i)) : std::numeric_limits<double>::quiet_NaN();
  }
  return se;
}

}  // namespace detail

/// Maximum weighted pairwise likelihood fit, with Godambe standard errors
/// and PLIC when the optimizer converged.
inline FitResult fit_mwpl(const Dataset& data, const PairwiseLikelihood& pl, const ParameterSpace& space,
                          const std::optional<ModelParams>& init = std::nullopt, const FitOptions& options = {}) {
  const ModelParams start = init ? space.params(space.natural(*init)) : default_init(data, pl, space);
  auto out = detail::optimize_in(space, start, [&](const ModelParams& p) { return pl(p); }, options.optimizer);
  out.method = "mwpl";
  if (!out.converged || !options.std_errors || space.n_free() == 0) return out;
  try {
    const Eigen::VectorXd t = space.to_free(out.params);
    auto f = [&](const Eigen::VectorXd& x) {
      try {
        return pl(space.from_free(x));
      } catch (const domain_error&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    out.sensitivity = numeric_hessian(f, t);
    const auto var = subsample_variability(pl, data, space, out.params, options.blocks.value_or(default_blocks(data)));
    out.variability = var.matrix;
    out.subsample = var.info;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(out.sensitivity);
    if (!lu.isInvertible()) throw singular_matrix_error("fit_mwpl: sensitivity matrix is singular");
    const Eigen::MatrixXd hinv = lu.inverse();
    out.std_errors = detail::natural_std_errors(space, t, hinv * out.variability * hinv);
    out.plic = plic(out.loglik_pl, out.sensitivity, out.variability);
  } catch (const std::exception& e) {
    out.std_errors.clear();
    out.note = std::string("standard errors unavailable: ") + e.what();
  }
  return out;
}

inline FitResult fit_mwpl(const Dataset& data, const WeightSpec& weights, const ParameterSpace& space,
                          const std::optional<ModelParams>& init = std::nullopt, const FitOptions& options = {},
                          DistanceMetric metric = DistanceMetric::euclidean) {
  const PairwiseLikelihood pl(data, weights, metric);
  return fit_mwpl(data, pl, space, init, options);
}

/// Full likelihood of a Weibull field on the line with exponential parent
/// correlation. Standard errors come from the observed information.
inline FitResult fit_ml_chain(const Dataset& data, const ParameterSpace& space,
                              const std::optional<ModelParams>& init = std::nullopt, const FitOptions& options = {}) {
  data.validate();
  if (space.marginal() != MarginalFamily::weibull || space.corr_family() != CorrFamily::exponential)
    throw domain_error("fit_ml_chain: requires the Weibull marginal with exponential correlation");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& s : data.sites)
    if (s.coords.size() != 1) throw domain_error("fit_ml_chain: sites must be one-dimensional");
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return data.sites[a].coords[0] < data.sites[b].coords[0]; });
  std::vector<Site> sites;
  std::vector<double> values;
  for (auto k : order) {
    if (!sites.empty() && !(data.sites[k].coords[0] > sites.back().coords[0]))
      throw domain_error("fit_ml_chain: sites must be distinct");
    sites.push_back(data.sites[k]);
    values.push_back(data.values[k]);
  }
  auto loglik = [&](const ModelParams& p) { return markov_chain_log_density(values, sites, p.weibull()); };
  ModelParams start;
  if (init) {
    start = space.params(space.natural(*init));
  } else {
    const PairwiseLikelihood pl(data, WeightSpec{nearest_neighbour_cutoff(data.sites), std::numeric_limits<double>::infinity()});
    start = default_init(data, pl, space);
  }
  auto out = detail::optimize_in(space, start, loglik, options.optimizer);
  out.method = "ml";
  if (!out.converged || !options.std_errors || space.n_free() == 0) return out;
  try {
    const Eigen::VectorXd t = space.to_free(out.params);
    auto f = [&](const Eigen::VectorXd& x) {
      try {
        return loglik(space.from_free(x));
      } catch (const domain_error&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    out.sensitivity = numeric_hessian(f, t);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(out.sensitivity);
    if (!lu.isInvertible()) throw singular_matrix_error("fit_ml_chain: observed information is singular");
    out.std_errors = detail::natural_std_errors(space, t, lu.inverse());
  } catch (const std::exception& e) {
    out.std_errors.clear();
    out.note = std::string("standard errors unavailable: ") + e.what();
  }
  return out;
}

}  // namespace chi2field
