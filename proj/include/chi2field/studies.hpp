#pragma once

// Simulation studies on the line, a synthetic station network, and the
// end-to-end fit / predict / score workflow for daily station data.

#include <chi2field/correlation.hpp>
#include <chi2field/dataset.hpp>
#include <chi2field/diagnostics.hpp>
#include <chi2field/inference.hpp>
#include <chi2field/model.hpp>
#include <chi2field/pairwise.hpp>
#include <chi2field/predict.hpp>
#include <chi2field/process.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace chi2field {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to slot i by the body, which makes them independent of scheduling.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::vector<Site> unit_interval_grid(std::size_t n) {
  if (n < 2) throw domain_error("unit_interval_grid: need at least two points");
  std::vector<Site> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(Site{{static_cast<double>(i) / static_cast<double>(n - 1)}, std::nullopt, {}});
  return s;
}

// ---------------------------------------------------------------------------
// Estimation efficiency on the line: full likelihood vs nearest-neighbour WPL

struct EfficiencyStudyConfig {
  std::size_t n_sites = 150;
  std::vector<double> kappas{1.0, 3.0, 10.0};
  std::vector<double> phis{0.1 / 3, 0.2 / 3, 0.3 / 3};
  double beta0 = 0.25;
  double beta1 = -0.15;
  std::size_t replicates = 200;
  std::uint64_t seed = 20160901;
  unsigned threads = 1;
  OptimizerOptions optimizer{};
};

/// Reference RE on the default (κ, φ) grid; nullopt off the grid.
inline std::optional<double> reference_efficiency(double kappa, double phi) {
  static const double table[3][3] = {{0.954, 0.913, 0.884}, {0.955, 0.914, 0.886}, {0.955, 0.914, 0.886}};
  const double kappas[3] = {1.0, 3.0, 10.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::fabs(kappa - kappas[i]) < 1e-9 && std::fabs(phi - 0.1 * (j + 1) / 3.0) < 1e-9) return table[i][j];
  return std::nullopt;
}

struct EfficiencyCell {
  double kappa = 0.0;
  double phi = 0.0;
  double re = std::numeric_limits<double>::quiet_NaN();
  /// Jackknife standard error of re.
  double re_se = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  std::size_t failed = 0;
  Eigen::MatrixXd mse_ml;
  Eigen::MatrixXd mse_mwpl;
  std::vector<double> mean_ml;
  std::vector<double> mean_mwpl;
};

namespace detail {

inline double jackknife_re_se(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                              std::span<const double> truth) {
  const std::size_t n = a.size();
  const auto p = static_cast<Eigen::Index>(truth.size());
  auto outer = [&](const std::vector<double>& e) {
    Eigen::VectorXd d(p);
    for (Eigen::Index i = 0; i < p; ++i) d[i] = e[static_cast<std::size_t>(i)] - truth[static_cast<std::size_t>(i)];
    return Eigen::MatrixXd(d * d.transpose());
  };
  Eigen::MatrixXd sa = Eigen::MatrixXd::Zero(p, p), sb = sa;
  for (std::size_t k = 0; k < n; ++k) {
    sa += outer(a[k]);
    sb += outer(b[k]);
  }
  std::vector<double> loo(n);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    loo[k] = relative_efficiency((sa - outer(a[k])) / static_cast<double>(n - 1),
                                 (sb - outer(b[k])) / static_cast<double>(n - 1));
    mean += loo[k];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  return std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
}

inline std::vector<double> column_means(const std::vector<std::vector<double>>& v) {
  std::vector<double> m(v.front().size(), 0.0);
  for (const auto& e : v)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += e[i];
  for (auto& x : m) x /= static_cast<double>(v.size());
  return m;
}

}  // namespace detail

/// One replicate: covariate v ~ U(0,1) per site, a Weibull realization,
/// then ML and MWPL fits from the true parameters. Natural parameter order
/// (β₀, β₁, κ, φ).
struct EfficiencyReplicate {
  std::vector<double> ml;
  std::vector<double> mwpl;
  bool ok = false;
};

inline EfficiencyReplicate efficiency_replicate(const EfficiencyStudyConfig& cfg, double kappa, double phi,
                                                const GaussianSampler& sampler, std::mt19937_64& rng) {
  auto sites = unit_interval_grid(cfg.n_sites);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& s : sites) s.covariates = {unif(rng)};
  const std::vector<double> beta{cfg.beta0, cfg.beta1};
  const auto y = draw_weibull(sampler, kappa, site_means(beta, sites), rng);
  const auto data = make_dataset(sites, std::vector<double>(y.data(), y.data() + y.size()));
  const ModelParams truth{MarginalFamily::weibull, kappa, beta, Exponential{phi}};
  const auto space = ParameterSpace::matching(truth);
  FitOptions opt;
  opt.optimizer = cfg.optimizer;
  opt.std_errors = false;
  EfficiencyReplicate r;
  const auto ml = fit_ml_chain(data, space, truth, opt);
  const PairwiseLikelihood pl(data, WeightSpec{nearest_neighbour_cutoff(data.sites)});
  const auto wpl = fit_mwpl(data, pl, space, truth, opt);
  r.ml = ml.theta_hat;
  r.mwpl = wpl.theta_hat;
  r.ok = ml.converged && wpl.converged;
  return r;
}

inline std::vector<EfficiencyCell> efficiency_study(const EfficiencyStudyConfig& cfg) {
  if (cfg.replicates < 2) throw domain_error("efficiency_study: need at least two replicates");
  std::vector<EfficiencyCell> cells;
  const StreamFactory master(cfg.seed);
  std::size_t cell_index = 0;
  for (double kappa : cfg.kappas)
    for (double phi : cfg.phis) {
      const auto streams = master.child(cell_index++);
      const auto sites = unit_interval_grid(cfg.n_sites);
      const auto sampler = GaussianSampler::dense(corr_matrix(Exponential{phi}, sites));
      std::vector<EfficiencyReplicate> reps(cfg.replicates);
      parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
        auto rng = streams.stream(r);
        try {
          reps[r] = efficiency_replicate(cfg, kappa, phi, sampler, rng);
        } catch (const std::exception&) {
          reps[r].ok = false;
        }
      });
      EfficiencyCell cell;
      cell.kappa = kappa;
      cell.phi = phi;
      std::vector<std::vector<double>> a, b;
      for (const auto& r : reps) {
        if (!r.ok) {
          ++cell.failed;
          continue;
        }
        a.push_back(r.mwpl);
        b.push_back(r.ml);
      }
      cell.used = a.size();
      if (cell.used >= 2) {
        const std::vector<double> truth{cfg.beta0, cfg.beta1, kappa, phi};
        cell.mse_mwpl = mse_matrix(a, truth);
        cell.mse_ml = mse_matrix(b, truth);
        try {
          // Efficiency of MWPL relative to ML: below 1 when MWPL has the larger MSE.
          cell.re = relative_efficiency(cell.mse_ml, cell.mse_mwpl);
          cell.re_se = detail::jackknife_re_se(b, a, truth);
        } catch (const domain_error&) {
          // Too few replicates for a nondegenerate MSE matrix; RE stays NaN.
        }
        cell.mean_mwpl = detail::column_means(a);
        cell.mean_ml = detail::column_means(b);
      }
      cells.push_back(std::move(cell));
    }
  return cells;
}

// ---------------------------------------------------------------------------
// Prediction efficiency on the line: simple kriging vs the conditional mean

struct PredictionStudyConfig {
  std::size_t n_observed = 21;
  double spacing = 0.05;
  std::vector<double> kappas{1.0, 3.0, 10.0};
  std::vector<double> phis{0.1 / 3, 0.2 / 3, 0.3 / 3};
  std::size_t replicates = 500;
  std::uint64_t seed = 20160902;
  unsigned threads = 1;
};

/// Reference MSPE ratio (optimal over linear) on the default (κ, φ) grid.
inline std::optional<double> reference_prediction_ratio(double kappa, double phi) {
  static const double table[3][3] = {{0.953, 0.805, 0.687}, {0.960, 0.825, 0.721}, {0.967, 0.851, 0.764}};
  const double kappas[3] = {1.0, 3.0, 10.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::fabs(kappa - kappas[i]) < 1e-9 && std::fabs(phi - 0.1 * (j + 1) / 3.0) < 1e-9) return table[i][j];
  return std::nullopt;
}

struct PredictionCell {
  double kappa = 0.0;
  double phi = 0.0;
  double mspe_optimal = 0.0;
  double mspe_linear = 0.0;
  /// mspe_optimal / mspe_linear with a delta-method standard error.
  double ratio = 0.0;
  double ratio_se = 0.0;
  std::size_t replicates = 0;
};

inline std::vector<PredictionCell> prediction_study(const PredictionStudyConfig& cfg) {
  if (cfg.n_observed < 1 || cfg.replicates < 2) throw domain_error("prediction_study: bad configuration");
  std::vector<Site> all;
  for (std::size_t i = 0; i <= cfg.n_observed; ++i)
    all.push_back(Site{{cfg.spacing * static_cast<double>(i)}, std::nullopt, {}});
  const std::vector<Site> observed(all.begin(), all.end() - 1);
  const Site target = all.back();
  std::vector<PredictionCell> cells;
  const StreamFactory master(cfg.seed);
  std::size_t cell_index = 0;
  for (double kappa : cfg.kappas)
    for (double phi : cfg.phis) {
      const auto streams = master.child(cell_index++);
      const WeibullFieldModel model{kappa, {0.0}, Exponential{phi}};
      const auto sampler = GaussianSampler::dense(corr_matrix(model.corr, all));
      const KrigingSystem krige(model, observed);
      const Eigen::VectorXd lambda = krige.weights(target);
      const double rho = std::exp(-cfg.spacing / phi);
      std::vector<double> e_opt(cfg.replicates), e_lin(cfg.replicates);
      parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
        auto rng = streams.stream(r);
        const Eigen::VectorXd y = draw_weibull(sampler, kappa, std::vector<double>(all.size(), 1.0), rng);
        const std::vector<double> obs(y.data(), y.data() + cfg.n_observed);
        const double truth = y[static_cast<Eigen::Index>(cfg.n_observed)];
        const double opt = optimal_predictor_from_last(obs.back(), 1.0, 1.0, rho, kappa);
        const double lin = krige.predict_with_weights(obs, target, lambda).point;
        e_opt[r] = (truth - opt) * (truth - opt);
        e_lin[r] = (truth - lin) * (truth - lin);
      });
      PredictionCell c;
      c.kappa = kappa;
      c.phi = phi;
      c.replicates = cfg.replicates;
      const double n = static_cast<double>(cfg.replicates);
      for (std::size_t r = 0; r < cfg.replicates; ++r) {
        c.mspe_optimal += e_opt[r] / n;
        c.mspe_linear += e_lin[r] / n;
      }
      c.ratio = c.mspe_optimal / c.mspe_linear;
      double ss = 0.0;
      for (std::size_t r = 0; r < cfg.replicates; ++r) {
        const double d = e_opt[r] - c.ratio * e_lin[r];
        ss += d * d;
      }
      c.ratio_se = std::sqrt(ss / (n - 1.0) / n) / c.mspe_linear;
      cells.push_back(c);
    }
  return cells;
}

// ---------------------------------------------------------------------------
// Synthetic daily station network

struct StationNetworkConfig {
  std::size_t n_stations = 10;
  int n_days = 730;
  /// Stations are uniform in a square of this side (km, Euclidean).
  double extent_km = 300.0;
  int harmonics = 1;
  double kappa = 2.0;
  /// β₀ followed by (β_{1,k}, β_{2,k}) for k = 1..harmonics.
  std::vector<double> beta{-0.02, 0.075, 0.18};
  double phi_s = 200.0;
  double phi_t = 12.0;
  double phi_st = 0.0;
  /// Station scale factors a(s) are uniform on this interval.
  double scale_lo = 3.0;
  double scale_hi = 7.0;
  std::uint64_t seed = 2000;
};

/// Daily Weibull data on a random station layout, multiplied by a station
/// scale. Observations are ordered by day, then station.
inline Dataset synthetic_station_network(const StationNetworkConfig& cfg) {
  if (cfg.n_stations < 2 || cfg.n_days < 2) throw domain_error("synthetic network: need two stations and two days");
  if (cfg.beta.size() != static_cast<std::size_t>(2 * cfg.harmonics + 1))
    throw domain_error("synthetic network: beta must have 2*harmonics + 1 entries");
  const StreamFactory streams(cfg.seed);
  auto layout = streams.stream(0);
  std::uniform_real_distribution<double> where(0.0, cfg.extent_km), scale(cfg.scale_lo, cfg.scale_hi);
  std::vector<Site> stations;
  std::vector<double> a;
  for (std::size_t s = 0; s < cfg.n_stations; ++s) {
    const double x = where(layout), y = where(layout);
    stations.push_back(Site{{x, y}, std::nullopt, {}});
    a.push_back(scale(layout));
  }
  const SpaceTimeGW corr{cfg.phi_s, cfg.phi_t, cfg.phi_st};
  std::vector<Site> sites;
  for (int t = 0; t < cfg.n_days; ++t)
    for (const auto& st : stations) sites.push_back(Site{st.coords, t, harmonic_covariates(t, cfg.harmonics)});
  const auto means = site_means(cfg.beta, sites);
  std::optional<GaussianSampler> sampler;
  if (cfg.phi_st == 0.0) {
    const auto nt = static_cast<Eigen::Index>(cfg.n_days);
    const auto ns = static_cast<Eigen::Index>(cfg.n_stations);
    Eigen::MatrixXd rt(nt, nt), rs(ns, ns);
    for (Eigen::Index i = 0; i < nt; ++i)
      for (Eigen::Index j = 0; j < nt; ++j) rt(i, j) = wendland_temporal(std::fabs(static_cast<double>(i - j)), cfg.phi_t);
    for (Eigen::Index i = 0; i < ns; ++i)
      for (Eigen::Index j = 0; j < ns; ++j)
        rs(i, j) = cauchy_spatial(spatial_distance(stations[static_cast<std::size_t>(i)], stations[static_cast<std::size_t>(j)]), cfg.phi_s);
    sampler = GaussianSampler::kronecker(rt, rs);
  } else {
    std::vector<Site> bare = sites;
    for (auto& s : bare) s.covariates.clear();
    sampler = GaussianSampler::dense(corr_matrix(corr, bare));
  }
  auto rng = streams.stream(1);
  const Eigen::VectorXd y = draw_weibull(*sampler, cfg.kappa, means, rng);
  Dataset d;
  d.sites = sites;
  for (auto& s : d.sites) s.covariates.clear();
  d.values.resize(sites.size());
  d.station.resize(sites.size());
  for (std::size_t s = 0; s < cfg.n_stations; ++s) {
    char name[16];
    std::snprintf(name, sizeof name, "st%02zu", s);
    d.station_names.push_back(name);
  }
  for (std::size_t k = 0; k < sites.size(); ++k) {
    d.station[k] = k % cfg.n_stations;
    d.values[k] = a[d.station[k]] * y[static_cast<Eigen::Index>(k)];
  }
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Station workflow: rescale, harmonic trend, MWPL fits, one-day-ahead
// prediction and scores

struct WindPipelineConfig {
  int harmonics = 4;
  double period = kYearPeriodDays;
  std::vector<double> phi_st_values{0.0, 0.5, 1.0};
  std::vector<MarginalFamily> families{MarginalFamily::weibull, MarginalFamily::loggaussian};
  WeightSpec weights{std::numeric_limits<double>::infinity(), 1.0};
  DistanceMetric metric = DistanceMetric::euclidean;
  /// Days of history used by the predictors.
  int window_days = 5;
  FitOptions fit{};
};

struct ModelScore {
  std::string model;  // "weibull", "loggaussian" or "naive"
  double phi_st = std::numeric_limits<double>::quiet_NaN();
  Scores scores;
};

struct WindPipelineResult {
  Dataset data;  // rescaled, with harmonic covariates
  PrefitResult prefit;
  std::vector<std::pair<double, FitResult>> weibull_fits;      // (φ_ST, fit)
  std::vector<std::pair<double, FitResult>> loggaussian_fits;  // (φ_ST, fit)
  std::vector<ModelScore> scores;
  /// Targets scored: every observation with `window_days` of complete history.
  std::vector<std::size_t> targets;
  /// Predictions per model, aligned with `targets`, in `scores` order.
  std::vector<std::vector<double>> predictions;
};

namespace detail {

/// Index of the observation (station, day), or npos.
class DayStationIndex {
 public:
  explicit DayStationIndex(const Dataset& d) : n_st_(d.n_stations()) {
    lo_ = hi_ = *d.sites.front().time;
    for (const auto& s : d.sites) {
      lo_ = std::min(lo_, *s.time);
      hi_ = std::max(hi_, *s.time);
    }
    idx_.assign(static_cast<std::size_t>(hi_ - lo_ + 1) * n_st_, npos);
    for (std::size_t k = 0; k < d.size(); ++k) {
      auto& slot = idx_[static_cast<std::size_t>(*d.sites[k].time - lo_) * n_st_ + d.station[k]];
      if (slot != npos) throw domain_error("station data: two observations for one station and day");
      slot = k;
    }
  }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t at(std::size_t station, int day) const {
    if (day < lo_ || day > hi_) return npos;
    return idx_[static_cast<std::size_t>(day - lo_) * n_st_ + station];
  }
  int first_day() const { return lo_; }
  int last_day() const { return hi_; }

 private:
  std::size_t n_st_;
  int lo_ = 0, hi_ = 0;
  std::vector<std::size_t> idx_;
};

}  // namespace detail

/// Observations that have all stations observed on each of the previous
/// `window` days, and the history indices for each such target.
inline std::vector<std::pair<std::size_t, std::vector<std::size_t>>> prediction_windows(const Dataset& data, int window) {
  if (window < 1) throw domain_error("prediction window must be at least one day");
  const detail::DayStationIndex index(data);
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> out;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const int t = *data.sites[k].time;
    std::vector<std::size_t> hist;
    bool complete = true;
    for (int d = t - window; d < t && complete; ++d)
      for (std::size_t s = 0; s < data.n_stations(); ++s) {
        const auto j = index.at(s, d);
        if (j == detail::DayStationIndex::npos) {
          complete = false;
          break;
        }
        hist.push_back(j);
      }
    if (complete) out.emplace_back(k, std::move(hist));
  }
  return out;
}

/// One-day-ahead predictions: simple kriging for the Weibull model, the
/// Gaussian-scale conditional mean for the log-Gaussian model. Weights
/// depend only on relative lags, so they are computed once per station.
inline std::vector<double> one_day_ahead(const Dataset& data, const ModelParams& p,
                                         const std::vector<std::pair<std::size_t, std::vector<std::size_t>>>& windows,
                                         DistanceMetric metric) {
  std::vector<double> out(windows.size());
  std::vector<std::optional<Eigen::VectorXd>> cached(data.n_stations());
  auto relative = [&](const std::vector<std::size_t>& hist, std::size_t target) {
    std::vector<Site> s;
    for (auto j : hist) s.push_back(Site{data.sites[j].coords, *data.sites[j].time - *data.sites[target].time, data.sites[j].covariates});
    return s;
  };
  if (p.marginal == MarginalFamily::weibull) {
    std::vector<std::optional<KrigingSystem>> systems(data.n_stations());
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const auto& [k, hist] = windows[w];
      const auto st = data.station[k];
      const Site target{data.sites[k].coords, 0, data.sites[k].covariates};
      if (!systems[st]) {
        systems[st].emplace(p.weibull(), relative(hist, k), metric);
        cached[st] = systems[st]->weights(target);
      }
      // Means enter through μ(s_i) and μ(s₀), which vary with the day.
      const WeibullFieldModel m = p.weibull();
      const double mu0 = mean_function(m.beta, data.sites[k]);
      double s = 1.0;
      for (std::size_t i = 0; i < hist.size(); ++i)
        s += (*cached[st])[static_cast<Eigen::Index>(i)] *
             (data.values[hist[i]] / mean_function(m.beta, data.sites[hist[i]]) - 1.0);
      out[w] = mu0 * s;
    }
  } else {
    std::vector<std::optional<LogGaussianPredictor>> systems(data.n_stations());
    std::vector<double> explained(data.n_stations());
    const double s2 = p.shape;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const auto& [k, hist] = windows[w];
      const auto st = data.station[k];
      const Site target{data.sites[k].coords, 0, data.sites[k].covariates};
      const auto rel = relative(hist, k);
      if (!systems[st]) {
        systems[st].emplace(p.loggaussian(), rel, metric);
        cached[st] = systems[st]->weights(target);
        Eigen::VectorXd c(static_cast<Eigen::Index>(rel.size()));
        for (std::size_t i = 0; i < rel.size(); ++i) c[static_cast<Eigen::Index>(i)] = corr(p.corr, lag_between(rel[i], target, metric));
        explained[st] = std::clamp(cached[st]->dot(c), 0.0, 1.0);
      }
      double shift = 0.0;
      for (std::size_t i = 0; i < hist.size(); ++i)
        shift += (*cached[st])[static_cast<Eigen::Index>(i)] *
                 (std::log(data.values[hist[i]]) - (linear_predictor(p.beta, data.sites[hist[i]]) - 0.5 * s2));
      const double m0 = linear_predictor(p.beta, data.sites[k]) - 0.5 * s2;
      out[w] = std::exp(m0 + shift + 0.5 * s2 * (1.0 - explained[st]));
    }
  }
  return out;
}

/// Plug-in marginal at each target: Weibull(κ, μν(κ)) or log-Gaussian(log μ, σ²).
inline std::vector<PlugInMarginal> plug_in_marginals(const Dataset& data, const ModelParams& p,
                                                     std::span<const std::size_t> targets) {
  std::vector<PlugInMarginal> out;
  for (auto k : targets) {
    const double mu = mean_function(p.beta, data.sites[k]);
    if (p.marginal == MarginalFamily::weibull) out.emplace_back(weibull_field_marginal(p.shape, mu));
    else out.emplace_back(LogGaussianMarginal(std::log(mu), p.shape));
  }
  return out;
}

inline WindPipelineResult wind_pipeline(const Dataset& raw, const WindPipelineConfig& cfg) {
  if (!raw.has_time()) throw domain_error("wind pipeline: every observation needs a day index");
  WindPipelineResult res;
  res.data = with_harmonic_covariates(rescale_by_station_mean(raw), cfg.harmonics, cfg.period);
  res.prefit = log_ols_prefit(res.data);
  const PairwiseLikelihood pl(res.data, cfg.weights, cfg.metric);
  const auto windows = prediction_windows(res.data, cfg.window_days);
  if (windows.empty()) throw domain_error("wind pipeline: no observation has a complete prediction window");
  for (const auto& w : windows) res.targets.push_back(w.first);
  std::vector<double> observed;
  for (auto k : res.targets) observed.push_back(res.data.values[k]);
  for (auto family : cfg.families)
    for (double phi_st : cfg.phi_st_values) {
      ParameterSpace space(family, CorrFamily::spacetime_gw, res.data.n_covariates() + 1);
      space.fix("phi_st", phi_st);
      auto fit = fit_mwpl(res.data, pl, space, std::nullopt, cfg.fit);
      const auto pred = one_day_ahead(res.data, fit.params, windows, cfg.metric);
      const auto marg = plug_in_marginals(res.data, fit.params, res.targets);
      res.scores.push_back({family == MarginalFamily::weibull ? "weibull" : "loggaussian", phi_st, score(pred, observed, marg)});
      res.predictions.push_back(pred);
      (family == MarginalFamily::weibull ? res.weibull_fits : res.loggaussian_fits).emplace_back(phi_st, std::move(fit));
    }
  const auto naive = naive_predict(res.data.sites, res.data.values);
  std::vector<double> pred, obs;
  for (auto k : res.targets)
    if (naive[k]) {
      pred.push_back(*naive[k]);
      obs.push_back(res.data.values[k]);
    }
  res.scores.push_back({"naive", std::numeric_limits<double>::quiet_NaN(), score(pred, obs)});
  std::vector<double> aligned;
  for (auto k : res.targets) aligned.push_back(naive[k].value_or(std::numeric_limits<double>::quiet_NaN()));
  res.predictions.push_back(aligned);
  return res;
}

/// Theoretical semi-variogram of W under a fitted Weibull model: σ²_W (1 - ρ_W(h, u)).
inline double weibull_semivariogram(const WeibullFieldModel& m, Lag lag) {
  return weibull_variance_factor(m.kappa) * (1.0 - weibull_corr(m.corr, lag, m.kappa));
}

}  // namespace chi2field
