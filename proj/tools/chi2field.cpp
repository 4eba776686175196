// chi2field: simulate, fit, predict, score, reproduce the line studies, run
// the station workflow and emit diagnostics. All output is CSV or JSON.

#include <chi2field/copula.hpp>
#include <chi2field/diagnostics.hpp>
#include <chi2field/io.hpp>
#include <chi2field/studies.hpp>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace chi2field;
using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// The artifact was written but the optimizer stopped short.
struct not_converged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// "-" or empty is stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
    file_.open(path);
    if (!file_) throw config_error("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

fs::path output_dir(const std::string& dir) {
  if (dir.empty()) throw config_error("--output-dir is required");
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v) { return format_double(v); }

double parse_real(const std::string& s, const std::string& what) {
  if (s == "inf" || s == "Inf" || s == "infinity") return kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw config_error(what + ": not a number: '" + s + "'");
}

DistanceMetric parse_metric(const std::string& s) {
  if (s == "euclidean") return DistanceMetric::euclidean;
  if (s == "great-circle" || s == "great_circle") return DistanceMetric::great_circle_km;
  throw config_error("unknown metric '" + s + "' (euclidean, great-circle)");
}

std::string metric_name(DistanceMetric m) { return m == DistanceMetric::euclidean ? "euclidean" : "great-circle"; }

/// name=value pairs from --fix / --init.
std::map<std::string, double> parse_assignments(const std::vector<std::string>& items, const std::string& flag) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw config_error(flag + ": expected name=value, got '" + item + "'");
    out[item.substr(0, eq)] = parse_real(item.substr(eq + 1), flag + " " + item.substr(0, eq));
  }
  return out;
}

std::vector<std::string> default_covariate_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n; ++k) names.push_back("v" + std::to_string(k + 1));
  return names;
}

// ---------------------------------------------------------------------------
// Model and data preparation shared by several subcommands

struct ModelFlags {
  std::string marginal = "weibull";
  std::string corr = "exponential";
  double kappa = 1.0;
  double sigma2 = 1.0;
  std::vector<double> beta{0.0};
  double phi = 0.1;
  double nu = 0.5;
  double phi_s = 1.0;
  double phi_t = 1.0;
  double phi_st = 0.0;

  void attach(CLI::App* app) {
    app->add_option("--marginal", marginal, "weibull | loggaussian")->capture_default_str();
    app->add_option("--corr", corr, "exponential | matern | spacetime")->capture_default_str();
    app->add_option("--kappa", kappa, "Weibull shape")->capture_default_str();
    app->add_option("--sigma2", sigma2, "log-Gaussian variance")->capture_default_str();
    app->add_option("--beta", beta, "trend coefficients: intercept, then one per covariate")->capture_default_str();
    app->add_option("--phi", phi, "range (exponential, matern)")->capture_default_str();
    app->add_option("--nu", nu, "Matern smoothness")->capture_default_str();
    app->add_option("--phi-s", phi_s, "spatial range (spacetime)")->capture_default_str();
    app->add_option("--phi-t", phi_t, "temporal range in days (spacetime)")->capture_default_str();
    app->add_option("--phi-st", phi_st, "space-time interaction in [0, 1]")->capture_default_str();
  }

  CorrelationModel correlation() const {
    switch (parse_corr_family(corr)) {
      case CorrFamily::exponential: return Exponential{phi};
      case CorrFamily::matern: return Matern{phi, nu};
      case CorrFamily::spacetime_gw: return SpaceTimeGW{phi_s, phi_t, phi_st};
    }
    return Exponential{phi};
  }

  ModelParams params() const {
    const auto m = parse_marginal(marginal);
    ModelParams p{m, m == MarginalFamily::weibull ? kappa : sigma2, beta, correlation()};
    try {
      p.validate();
    } catch (const domain_error& e) {
      throw config_error(std::string("model: ") + e.what());
    }
    return p;
  }
};

/// How observations were transformed before fitting; stored with a fit so
/// that prediction applies the same steps.
struct Preparation {
  int harmonics = 0;
  double period = kYearPeriodDays;
  bool rescale = false;
  std::map<std::string, double> station_scale;

  json to_json() const {
    json j{{"harmonics", harmonics}, {"period", period}, {"rescaled", rescale}};
    json scales = json::object();
    for (const auto& [name, a] : station_scale) scales[name] = a;
    j["station_scale"] = scales;
    return j;
  }

  static Preparation from_json(const json& j) {
    Preparation p;
    if (!j.contains("data")) return p;
    const auto& d = j.at("data");
    p.harmonics = d.value("harmonics", 0);
    p.period = d.value("period", kYearPeriodDays);
    p.rescale = d.value("rescaled", false);
    if (d.contains("station_scale"))
      for (const auto& [name, a] : d.at("station_scale").items()) p.station_scale[name] = a.get<double>();
    return p;
  }

  /// Rescales and attaches harmonics; fills station_scale when rescaling.
  Dataset apply_fresh(const Dataset& raw) {
    Dataset d = raw;
    if (rescale) {
      d = rescale_by_station_mean(d);
      station_scale.clear();
      for (std::size_t s = 0; s < d.n_stations(); ++s) station_scale[d.station_names[s]] = d.station_scale[s];
    }
    if (harmonics > 0) d = with_harmonic_covariates(d, harmonics, period);
    return d;
  }

  double scale_of(const std::string& station) const {
    if (!rescale) return 1.0;
    const auto it = station_scale.find(station);
    if (it == station_scale.end()) throw config_error("station '" + station + "' has no scale in the fit document");
    return it->second;
  }

  /// Applies stored scales rather than recomputing them.
  Dataset apply_stored(const Dataset& raw) const {
    Dataset d = raw;
    if (rescale) {
      d.station_scale.assign(d.n_stations(), 1.0);
      for (std::size_t s = 0; s < d.n_stations(); ++s) d.station_scale[s] = scale_of(d.station_names[s]);
      for (std::size_t k = 0; k < d.size(); ++k) d.values[k] /= d.station_scale[d.station[k]];
    }
    if (harmonics > 0) d = with_harmonic_covariates(d, harmonics, period);
    return d;
  }
};

json fit_document(const FitResult& fit, const Preparation& prep, const WeightSpec& w, DistanceMetric metric,
                  std::size_t n_obs) {
  auto j = to_json(fit);
  j["data"] = prep.to_json();
  j["data"]["n_observations"] = n_obs;
  j["weights"] = {{"delta_space", json_number(w.delta_space)}, {"delta_time", json_number(w.delta_time)}};
  j["metric"] = metric_name(metric);
  return j;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateFlags {
  ModelFlags model;
  std::string layout = "grid";
  std::size_t n_sites = 150;
  std::size_t grid_n = 20;
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::size_t stations = 10;
  int days = 730;
  double extent_km = 300.0;
  int harmonics = 1;
  double scale_lo = 3.0;
  double scale_hi = 7.0;
  std::string output = "-";
};

void run_simulate(const SimulateFlags& f, const CLI::App& app) {
  if (f.replicates < 1) throw config_error("--replicates must be at least 1");
  const StreamFactory streams(f.seed);
  std::vector<Dataset> reps;
  if (f.layout == "network") {
    if (parse_marginal(f.model.marginal) != MarginalFamily::weibull) throw config_error("network layout simulates the Weibull model only");
    StationNetworkConfig cfg;
    cfg.n_stations = f.stations;
    cfg.n_days = f.days;
    cfg.extent_km = f.extent_km;
    cfg.harmonics = f.harmonics;
    cfg.kappa = f.model.kappa;
    if (app.count("--beta")) cfg.beta = f.model.beta;
    else if (f.harmonics != 1) cfg.beta.assign(static_cast<std::size_t>(2 * f.harmonics + 1), 0.0);
    if (app.count("--phi-s")) cfg.phi_s = f.model.phi_s;
    if (app.count("--phi-t")) cfg.phi_t = f.model.phi_t;
    cfg.phi_st = f.model.phi_st;
    cfg.scale_lo = f.scale_lo;
    cfg.scale_hi = f.scale_hi;
    if (cfg.beta.size() != static_cast<std::size_t>(2 * cfg.harmonics + 1))
      throw config_error("--beta: the network layout needs 2*harmonics + 1 coefficients");
    for (std::size_t r = 0; r < f.replicates; ++r) {
      cfg.seed = streams.child(r).master();
      reps.push_back(synthetic_station_network(cfg));
    }
    Output out(f.output);
    write_replicates_csv(out.stream(), reps);
    return;
  }
  std::vector<Site> sites;
  if (f.layout == "grid") {
    sites = unit_interval_grid(f.n_sites);
  } else if (f.layout == "grid2d") {
    if (f.grid_n < 2) throw config_error("--grid-n must be at least 2");
    for (std::size_t i = 0; i < f.grid_n; ++i)
      for (std::size_t j = 0; j < f.grid_n; ++j)
        sites.push_back(Site{{static_cast<double>(i) / static_cast<double>(f.grid_n - 1),
                              static_cast<double>(j) / static_cast<double>(f.grid_n - 1)},
                             std::nullopt,
                             {}});
  } else {
    throw config_error("unknown layout '" + f.layout + "' (grid, grid2d, network)");
  }
  const auto p = f.model.params();
  if (family_of(p.corr) == CorrFamily::spacetime_gw) throw config_error("--corr spacetime needs the network layout");
  const auto sampler = GaussianSampler::dense(corr_matrix(p.corr, sites));
  // Covariates are uniform on (0, 1), drawn once so every replicate shares the layout.
  auto layout_rng = streams.stream(0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& s : sites)
    for (std::size_t c = 1; c < p.beta.size(); ++c) s.covariates.push_back(unif(layout_rng));
  const auto means = site_means(p.beta, sites);
  for (std::size_t r = 0; r < f.replicates; ++r) {
    auto rng = streams.stream(r + 1);
    const Eigen::VectorXd y = p.marginal == MarginalFamily::weibull ? draw_weibull(sampler, p.shape, means, rng)
                                                                    : draw_loggaussian(sampler, p.shape, means, rng);
    reps.push_back(make_dataset(sites, std::vector<double>(y.data(), y.data() + y.size())));
  }
  Output out(f.output);
  write_replicates_csv(out.stream(), reps, default_covariate_names(p.beta.size() - 1));
}

// ---------------------------------------------------------------------------
// fit

struct FitFlags {
  std::string data;
  int replicate = 0;
  std::string marginal = "weibull";
  std::string corr = "exponential";
  std::string delta_space = "inf";
  std::string delta_time = "inf";
  bool nearest_neighbour = false;
  int harmonics = 0;
  double period = kYearPeriodDays;
  bool rescale = false;
  std::vector<std::string> init;
  std::vector<std::string> fix;
  std::size_t max_evals = 20000;
  int restarts = 1;
  double xtol = 1e-8;
  std::string metric = "euclidean";
  std::string method = "mwpl";
  bool no_std_errors = false;
  std::string block_axis = "auto";
  std::size_t block_length = 0;
  std::string output = "-";
};

void run_fit(const FitFlags& f) {
  Preparation prep;
  prep.harmonics = f.harmonics;
  prep.period = f.period;
  prep.rescale = f.rescale;
  const auto data = prep.apply_fresh(read_dataset_csv(f.data, f.replicate));
  const auto metric = parse_metric(f.metric);
  WeightSpec w{parse_real(f.delta_space, "--delta-space"), parse_real(f.delta_time, "--delta-time")};
  if (f.nearest_neighbour) w.delta_space = nearest_neighbour_cutoff(data.sites, metric);

  ParameterSpace space(parse_marginal(f.marginal), parse_corr_family(f.corr), data.n_covariates() + 1);
  try {
    for (const auto& [name, v] : parse_assignments(f.fix, "--fix")) space.fix(name, v);
  } catch (const domain_error& e) {
    throw config_error(std::string("--fix: ") + e.what());
  }
  FitOptions opt;
  opt.optimizer.max_evaluations = f.max_evals;
  opt.optimizer.restarts = f.restarts;
  opt.optimizer.xtol = f.xtol;
  opt.std_errors = !f.no_std_errors;
  if (f.block_axis != "auto" || f.block_length > 0) {
    BlockSpec b = default_blocks(data);
    if (f.block_axis == "time") b.axis = BlockSpec::Axis::time;
    else if (f.block_axis == "space") b.axis = BlockSpec::Axis::space;
    else if (f.block_axis != "auto") throw config_error("--block-axis: expected auto, time or space");
    if (f.block_length > 0) b.length = f.block_length;
    b.step = std::max<std::size_t>(1, (b.length + 1) / 2);
    opt.blocks = b;
  }

  const PairwiseLikelihood pl(data, w, metric);
  std::optional<ModelParams> init;
  if (!f.init.empty()) {
    auto nat = space.natural(default_init(data, pl, space));
    try {
      for (const auto& [name, v] : parse_assignments(f.init, "--init")) nat[space.index_of(name)] = v;
      init = space.params(nat);
    } catch (const domain_error& e) {
      throw config_error(std::string("--init: ") + e.what());
    }
  }
  FitResult fit;
  if (f.method == "mwpl") fit = fit_mwpl(data, pl, space, init, opt);
  else if (f.method == "ml") fit = fit_ml_chain(data, space, init, opt);
  else throw config_error("--method: expected mwpl or ml");

  Output out(f.output);
  out.stream() << fit_document(fit, prep, w, metric, data.size()).dump(2) << '\n';
  if (!fit.converged) throw not_converged("optimizer did not converge within " + std::to_string(f.max_evals) + " evaluations");
}

// ---------------------------------------------------------------------------
// predict

struct PredictFlags {
  std::string fit;
  std::string data;
  int replicate = 0;
  std::string targets;
  int window_days = 0;
  std::string output = "-";
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw config_error(path + ": " + e.what());
  }
}

void run_predict(const PredictFlags& f) {
  const auto doc = read_json_file(f.fit);
  const auto p = params_from_json(doc);
  const auto prep = Preparation::from_json(doc);
  const auto metric = parse_metric(doc.value("metric", std::string("euclidean")));
  const auto data = prep.apply_stored(read_dataset_csv(f.data, f.replicate));
  if (data.n_covariates() + 1 != p.beta.size())
    throw config_error("data carry " + std::to_string(data.n_covariates()) + " covariates; the fit expects " +
                       std::to_string(p.beta.size() - 1));
  if (f.window_days > 0 && !data.has_time()) throw config_error("--window-days needs time-indexed data");

  const auto table = read_csv_table(f.targets);
  const auto cx = table.require("x");
  const auto cy = table.column("y"), ct = table.column("t"), cid = table.column("target_id"),
             cst = table.column("station"), cobs = table.column("observed");
  const std::vector<std::string> reserved{"x", "y", "t", "target_id", "station", "observed"};
  std::vector<std::size_t> cov_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (std::find(reserved.begin(), reserved.end(), table.header[c]) == reserved.end()) cov_cols.push_back(c);
  if (prep.harmonics == 0 && cov_cols.size() != p.beta.size() - 1)
    throw config_error("targets: expected " + std::to_string(p.beta.size() - 1) + " covariate columns, found " +
                       std::to_string(cov_cols.size()));

  auto sites_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<Site> s;
    std::vector<double> v;
    for (auto k : idx) {
      s.push_back(data.sites[k]);
      v.push_back(data.values[k]);
    }
    return std::pair{s, v};
  };
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  // Predictor systems keyed by the first day of the history window (INT_MIN: all data).
  std::map<int, std::pair<std::vector<Site>, std::vector<double>>> history;
  std::map<int, std::optional<KrigingSystem>> kriging;
  std::map<int, std::optional<LogGaussianPredictor>> lognormal;

  Output out(f.output);
  auto& os = out.stream();
  os << "target_id,point,mspe,mu" << (cobs ? ",observed,crps" : "") << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Site target;
    target.coords.push_back(table.number(r, cx));
    if (cy && !table.rows[r][*cy].empty()) target.coords.push_back(table.number(r, *cy));
    if (ct && !table.rows[r][*ct].empty()) target.time = detail::parse_day(table.rows[r][*ct], table.lines[r]);
    if (prep.harmonics > 0) {
      if (!target.time) throw config_error("line " + std::to_string(table.lines[r]) + ": harmonic trend needs column t");
      target.covariates = harmonic_covariates(static_cast<double>(*target.time), prep.harmonics, prep.period);
    } else {
      for (auto c : cov_cols) target.covariates.push_back(table.number(r, c));
    }
    const double a = prep.rescale ? prep.scale_of(cst ? table.rows[r][*cst] : std::string()) : 1.0;
    int key = std::numeric_limits<int>::min();
    if (f.window_days > 0) {
      if (!target.time) throw config_error("line " + std::to_string(table.lines[r]) + ": --window-days needs column t");
      key = *target.time - f.window_days;
    }
    if (!history.count(key)) {
      std::vector<std::size_t> idx;
      if (f.window_days == 0) idx = all;
      else
        for (auto k : all)
          if (*data.sites[k].time >= key && *data.sites[k].time < key + f.window_days) idx.push_back(k);
      if (idx.empty()) throw config_error("line " + std::to_string(table.lines[r]) + ": no observations in the prediction window");
      history[key] = sites_of(idx);
    }
    const auto& [obs_sites, obs_values] = history[key];
    PredictionResult res;
    if (p.marginal == MarginalFamily::weibull) {
      auto& sys = kriging[key];
      if (!sys) sys.emplace(p.weibull(), obs_sites, metric);
      res = sys->predict(obs_values, target);
    } else {
      auto& sys = lognormal[key];
      if (!sys) sys.emplace(p.loggaussian(), obs_sites, metric);
      res = sys->predict_with_mspe(obs_values, target);
    }
    const double mu = a * mean_function(p.beta, target);
    os << (cid ? table.rows[r][*cid] : std::to_string(r)) << ',' << fmt(a * res.point) << ',' << fmt(a * a * res.mspe)
       << ',' << fmt(mu);
    if (cobs) {
      const auto& cell = table.rows[r][*cobs];
      if (cell.empty()) {
        os << ",,";
      } else {
        const double y = table.number(r, *cobs);
        const PlugInMarginal m = p.marginal == MarginalFamily::weibull ? PlugInMarginal(weibull_field_marginal(p.shape, mu))
                                                                       : PlugInMarginal(LogGaussianMarginal(std::log(mu), p.shape));
        os << ',' << fmt(y) << ',' << (y > 0.0 ? fmt(crps(m, y)) : std::string("nan"));
      }
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// score

void run_score(const std::string& predictions, const std::string& output) {
  const auto t = read_csv_table(predictions);
  const auto cp = t.require("point"), co = t.require("observed");
  const auto cc = t.column("crps");
  std::vector<double> pred, obs;
  double crps_sum = 0.0;
  std::size_t crps_n = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][co].empty() || t.rows[r][cp].empty()) continue;
    const double y = t.number(r, co), yhat = t.number(r, cp);
    if (!std::isfinite(y) || !std::isfinite(yhat)) continue;
    pred.push_back(yhat);
    obs.push_back(y);
    if (cc && !t.rows[r][*cc].empty()) {
      const double c = t.number(r, *cc);
      if (std::isfinite(c)) {
        crps_sum += c;
        ++crps_n;
      }
    }
  }
  if (pred.empty()) throw config_error("score: no rows with both point and observed");
  const auto s = score(pred, obs);
  Output out(output);
  out.stream() << "n,rmse,mae,mean_crps\n"
               << s.n << ',' << fmt(s.rmse) << ',' << fmt(s.mae) << ','
               << fmt(crps_n == pred.size() ? crps_sum / static_cast<double>(crps_n) : kNaN) << '\n';
}

// ---------------------------------------------------------------------------
// studies

struct Table1Flags {
  std::size_t replicates = 200;
  std::uint64_t seed = 20160901;
  unsigned threads = 1;
  std::vector<double> kappas{1.0, 3.0, 10.0};
  std::vector<double> phis{0.1 / 3, 0.2 / 3, 0.3 / 3};
  std::size_t n_sites = 150;
  std::size_t max_evals = 20000;
  std::string output = "-";
};

void run_table1(const Table1Flags& f) {
  if (f.replicates < 100) throw config_error("study-table1: --replicates must be at least 100");
  EfficiencyStudyConfig cfg;
  cfg.replicates = f.replicates;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.kappas = f.kappas;
  cfg.phis = f.phis;
  cfg.n_sites = f.n_sites;
  cfg.optimizer.max_evaluations = f.max_evals;
  const auto cells = efficiency_study(cfg);
  Output out(f.output);
  auto& os = out.stream();
  // RE = (det MSE_ML / det MSE_MWPL)^{1/p}: below 1 when ML is more efficient.
  os << "kappa,phi,re,re_se,reference,used,failed\n";
  for (const auto& c : cells) {
    const auto ref = reference_efficiency(c.kappa, c.phi);
    os << fmt(c.kappa) << ',' << fmt(c.phi) << ',' << fmt(c.re) << ',' << fmt(c.re_se) << ','
       << (ref ? fmt(*ref) : std::string()) << ',' << c.used << ',' << c.failed << '\n';
  }
}

struct Table2Flags {
  std::size_t replicates = 500;
  std::uint64_t seed = 20160902;
  unsigned threads = 1;
  std::vector<double> kappas{1.0, 3.0, 10.0};
  std::vector<double> phis{0.1 / 3, 0.2 / 3, 0.3 / 3};
  std::string output = "-";
};

void run_table2(const Table2Flags& f) {
  if (f.replicates < 200) throw config_error("study-table2: --replicates must be at least 200");
  PredictionStudyConfig cfg;
  cfg.replicates = f.replicates;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.kappas = f.kappas;
  cfg.phis = f.phis;
  Output out(f.output);
  auto& os = out.stream();
  os << "kappa,phi,mspe_optimal,mspe_linear,ratio,ratio_se,reference,replicates\n";
  for (const auto& c : prediction_study(cfg)) {
    const auto ref = reference_prediction_ratio(c.kappa, c.phi);
    os << fmt(c.kappa) << ',' << fmt(c.phi) << ',' << fmt(c.mspe_optimal) << ',' << fmt(c.mspe_linear) << ','
       << fmt(c.ratio) << ',' << fmt(c.ratio_se) << ',' << (ref ? fmt(*ref) : std::string()) << ',' << c.replicates
       << '\n';
  }
}

// ---------------------------------------------------------------------------
// variograms (pipeline-wind and diagnostics)

std::vector<double> spatial_edges(const Dataset& d, std::size_t bins, DistanceMetric metric) {
  double hi = 0.0;
  for (std::size_t a = 0; a < d.n_stations(); ++a)
    for (std::size_t b = 0; b < d.size(); ++b) hi = std::max(hi, spatial_distance(d.sites[a], d.sites[b], metric));
  if (!(hi > 0.0)) return {};
  std::vector<double> e;
  for (std::size_t k = 0; k <= bins; ++k) e.push_back(hi * (1.0 + 1e-9) * static_cast<double>(k) / static_cast<double>(bins));
  return e;
}

void write_variogram(const fs::path& path, const std::vector<VariogramBin>& bins,
                     const std::optional<WeibullFieldModel>& theory, bool temporal) {
  Output out(path.string());
  auto& os = out.stream();
  os << "lo,hi,mean_lag,gamma,count,theory\n";
  for (const auto& b : bins) {
    double th = kNaN;
    if (theory && !b.empty) th = weibull_semivariogram(*theory, temporal ? Lag{0.0, b.mean_lag} : Lag{b.mean_lag, 0.0});
    os << fmt(b.lo) << ',' << fmt(b.hi) << ',' << (b.empty ? "" : fmt(b.mean_lag)) << ','
       << (b.empty ? "" : fmt(b.gamma)) << ',' << b.count << ',' << (std::isnan(th) ? "" : fmt(th)) << '\n';
  }
}

/// Empirical spatial (and, for daily data, temporal) semi-variograms of `resid`.
void write_variograms(const fs::path& dir, const Dataset& d, const std::vector<double>& resid, std::size_t spatial_bins,
                      int max_lag_days, DistanceMetric metric, const std::optional<WeibullFieldModel>& theory) {
  if (const auto edges = spatial_edges(d, spatial_bins, metric); !edges.empty())
    write_variogram(dir / "variogram_spatial.csv",
                    empirical_semivariogram(d, resid, VariogramAxis::spatial_marginal, edges, metric), theory, false);
  if (d.has_time() && max_lag_days >= 1) {
    std::vector<double> edges;
    for (int k = 0; k <= max_lag_days; ++k) edges.push_back(k + 0.5);
    write_variogram(dir / "variogram_temporal.csv",
                    empirical_semivariogram(d, resid, VariogramAxis::temporal_marginal, edges, metric), theory, true);
  }
}

/// y / μ̂(s): unit-mean residuals on the W scale.
std::vector<double> mean_residuals(const Dataset& d, const std::optional<ModelParams>& p) {
  std::vector<double> r(d.values);
  if (p)
    for (std::size_t k = 0; k < d.size(); ++k) r[k] /= mean_function(p->beta, d.sites[k]);
  return r;
}

// ---------------------------------------------------------------------------
// pipeline-wind

struct PipelineFlags {
  std::string data;
  std::size_t stations = 10;
  int days = 730;
  std::uint64_t seed = 2000;
  double true_phi_st = 0.0;
  int harmonics = 4;
  double period = kYearPeriodDays;
  std::vector<double> phi_st{0.0, 0.5, 1.0};
  std::vector<std::string> families{"weibull", "loggaussian"};
  std::string delta_space = "inf";
  std::string delta_time = "1";
  int window_days = 5;
  std::string metric = "euclidean";
  std::size_t max_evals = 20000;
  std::size_t spatial_bins = 10;
  int max_lag_days = 30;
  bool write_data = false;
  std::string output_dir;
};

void run_pipeline(const PipelineFlags& f) {
  const auto dir = output_dir(f.output_dir);
  Dataset raw;
  if (f.data.empty()) {
    StationNetworkConfig net;
    net.n_stations = f.stations;
    net.n_days = f.days;
    net.seed = f.seed;
    net.phi_st = f.true_phi_st;
    raw = synthetic_station_network(net);
  } else {
    raw = read_dataset_csv(f.data);
  }
  if (f.write_data) {
    Output out((dir / "data.csv").string());
    write_dataset_csv(out.stream(), raw);
  }
  WindPipelineConfig cfg;
  cfg.harmonics = f.harmonics;
  cfg.period = f.period;
  cfg.phi_st_values = f.phi_st;
  cfg.families.clear();
  for (const auto& s : f.families) cfg.families.push_back(parse_marginal(s));
  cfg.weights = WeightSpec{parse_real(f.delta_space, "--delta-space"), parse_real(f.delta_time, "--delta-time")};
  cfg.metric = parse_metric(f.metric);
  cfg.window_days = f.window_days;
  cfg.fit.optimizer.max_evaluations = f.max_evals;
  const auto res = wind_pipeline(raw, cfg);

  Preparation prep;
  prep.harmonics = f.harmonics;
  prep.period = f.period;
  prep.rescale = true;
  for (std::size_t s = 0; s < res.data.n_stations(); ++s) prep.station_scale[res.data.station_names[s]] = res.data.station_scale[s];

  json fits = json::array();
  bool all_converged = true;
  const FitResult* best_weibull = nullptr;
  for (const auto* group : {&res.weibull_fits, &res.loggaussian_fits})
    for (const auto& [phi_st, fit] : *group) {
      auto j = fit_document(fit, prep, cfg.weights, cfg.metric, res.data.size());
      j["phi_st_fixed"] = phi_st;
      fits.push_back(j);
      all_converged = all_converged && fit.converged;
      if (group == &res.weibull_fits && fit.converged &&
          (!best_weibull || (std::isfinite(fit.plic) && !(best_weibull->plic <= fit.plic))))
        best_weibull = &fit;
    }
  {
    json prefit;
    prefit["coefficients"] = res.prefit.coefficients;
    prefit["residual_variance"] = res.prefit.residual_variance;
    Output out((dir / "fits.json").string());
    out.stream() << json{{"prefit", prefit}, {"fits", fits}}.dump(2) << '\n';
  }
  {
    Output out((dir / "predictions.csv").string());
    auto& os = out.stream();
    os << "station,t,observed";
    for (const auto& s : res.scores) os << ',' << s.model << (std::isnan(s.phi_st) ? "" : "_phi_st_" + fmt(s.phi_st));
    os << '\n';
    for (std::size_t i = 0; i < res.targets.size(); ++i) {
      const auto k = res.targets[i];
      const double a = res.data.station_scale[res.data.station[k]];
      os << res.data.station_names[res.data.station[k]] << ',' << *res.data.sites[k].time << ',' << fmt(a * res.data.values[k]);
      for (const auto& p : res.predictions) os << ',' << (std::isnan(p[i]) ? "" : fmt(a * p[i]));
      os << '\n';
    }
  }
  {
    // Scores are on the rescaled scale Y/a(s), as the fits are.
    Output out((dir / "scores.csv").string());
    auto& os = out.stream();
    os << "model,phi_st,n,rmse,mae,mean_crps\n";
    for (const auto& s : res.scores)
      os << s.model << ',' << (std::isnan(s.phi_st) ? "" : fmt(s.phi_st)) << ',' << s.scores.n << ',' << fmt(s.scores.rmse)
         << ',' << fmt(s.scores.mae) << ',' << fmt(s.scores.mean_crps) << '\n';
  }
  std::optional<WeibullFieldModel> theory;
  std::optional<ModelParams> trend;
  if (best_weibull) {
    theory = best_weibull->params.weibull();
    trend = best_weibull->params;
  }
  write_variograms(dir, res.data, mean_residuals(res.data, trend), f.spatial_bins, f.max_lag_days, cfg.metric, theory);
  if (!all_converged) throw not_converged("at least one fit did not converge; see fits.json");
}

// ---------------------------------------------------------------------------
// diagnostics

struct DiagnosticsFlags {
  std::string data;
  int replicate = 0;
  std::string fit;
  int harmonics = 0;
  double period = kYearPeriodDays;
  bool rescale = false;
  std::string metric = "euclidean";
  std::size_t spatial_bins = 10;
  int max_lag_days = 30;
  std::vector<double> quantiles{0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.975, 0.99};
  bool pair_files = true;
  double copula_rho = 0.6;
  int copula_m = 2;
  std::size_t copula_n = 201;
  double copula_range = 3.0;
  std::string output_dir;
};

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

void run_diagnostics(const DiagnosticsFlags& f) {
  const auto dir = output_dir(f.output_dir);
  std::optional<ModelParams> p;
  Preparation prep;
  auto metric = parse_metric(f.metric);
  Dataset d;
  if (!f.fit.empty()) {
    const auto doc = read_json_file(f.fit);
    p = params_from_json(doc);
    prep = Preparation::from_json(doc);
    metric = parse_metric(doc.value("metric", std::string("euclidean")));
    d = prep.apply_stored(read_dataset_csv(f.data, f.replicate));
    if (d.n_covariates() + 1 != p->beta.size()) throw config_error("data covariates do not match the fit");
  } else {
    prep.harmonics = f.harmonics;
    prep.period = f.period;
    prep.rescale = f.rescale;
    d = prep.apply_fresh(read_dataset_csv(f.data, f.replicate));
  }
  const auto resid = mean_residuals(d, p);
  std::optional<WeibullFieldModel> theory;
  if (p && p->marginal == MarginalFamily::weibull) theory = p->weibull();
  write_variograms(dir, d, resid, f.spatial_bins, f.max_lag_days, metric, theory);

  const auto z = normal_scores_by_station(d, resid);
  {
    Output out((dir / "normal_scores.csv").string());
    auto& os = out.stream();
    os << "station,t,residual,normal_score\n";
    for (std::size_t k = 0; k < d.size(); ++k)
      os << d.station_names[d.station[k]] << ',' << (d.sites[k].time ? std::to_string(*d.sites[k].time) : "") << ','
         << fmt(resid[k]) << ',' << fmt(z[k]) << '\n';
  }
  if (d.has_time() && d.n_stations() > 1) {
    // Align stations by day for the pair scatter and tail-dependence files.
    std::vector<std::map<int, std::size_t>> by_day(d.n_stations());
    for (std::size_t k = 0; k < d.size(); ++k) by_day[d.station[k]][*d.sites[k].time] = k;
    Output tail((dir / "tail_dependence.csv").string());
    auto& ts = tail.stream();
    ts << "station_a,station_b,u,chi,exceed_first,exceed_both,short_series\n";
    for (std::size_t a = 0; a < d.n_stations(); ++a)
      for (std::size_t b = a + 1; b < d.n_stations(); ++b) {
        std::vector<int> days;
        std::vector<std::size_t> ra, rb;
        for (const auto& [t, ka] : by_day[a])
          if (const auto it = by_day[b].find(t); it != by_day[b].end()) {
            days.push_back(t);
            ra.push_back(ka);
            rb.push_back(it->second);
          }
        if (days.size() < 2) continue;
        const auto& na = d.station_names[a];
        const auto& nb = d.station_names[b];
        if (f.pair_files) {
          Output pair((dir / ("normal_scores_" + file_safe(na) + "__" + file_safe(nb) + ".csv")).string());
          auto& ps = pair.stream();
          ps << "t,z_" << na << ",z_" << nb << '\n';
          for (std::size_t i = 0; i < days.size(); ++i)
            ps << days[i] << ',' << fmt(z[ra[i]]) << ',' << fmt(z[rb[i]]) << '\n';
        }
        std::vector<double> va, vb;
        for (std::size_t i = 0; i < days.size(); ++i) {
          va.push_back(resid[ra[i]]);
          vb.push_back(resid[rb[i]]);
        }
        const auto curve = tail_dependence_diagnostic(va, vb, f.quantiles);
        for (const auto& pt : curve.points)
          ts << na << ',' << nb << ',' << fmt(pt.u) << ',' << fmt(pt.chi) << ',' << pt.exceed_first << ','
             << pt.exceed_both << ',' << (curve.short_series ? "true" : "false") << '\n';
      }
  }
  {
    const auto grid = square_grid(-f.copula_range, f.copula_range, f.copula_n);
    Output out((dir / "copula_grid.csv").string());
    auto& os = out.stream();
    os << "z1,z2,density,ok\n";
    for (const auto& g : copula_density_normal_scale(grid, f.copula_rho, f.copula_m))
      os << fmt(g.z1) << ',' << fmt(g.z2) << ',' << fmt(g.density) << ',' << (g.ok ? "true" : "false") << '\n';
  }
}

// ---------------------------------------------------------------------------
// Config file: a JSON object whose keys are long option names of the
// chosen subcommand (underscores allowed). Flags on the command line win.

std::vector<std::string> merge_config(const CLI::App& app, std::vector<std::string> args) {
  std::string config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw config_error("--config needs a file name");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;
  const CLI::App* sub = nullptr;
  for (const auto& a : rest)
    if (!a.empty() && a[0] != '-') {
      for (const auto* s : app.get_subcommands([](const CLI::App*) { return true; }))
        if (s->get_name() == a) sub = s;
      break;
    }
  if (!sub) throw config_error("--config: name a subcommand before or after the config file");
  const auto doc = read_json_file(config_path);
  if (!doc.is_object()) throw config_error(config_path + ": expected a JSON object");
  auto given = [&](const std::string& flag) {
    return std::any_of(rest.begin(), rest.end(), [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  auto scalar = [&](const json& v, const std::string& key) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return fmt(v.get<double>());
    throw config_error(config_path + ": key '" + key + "' must be a string, number, boolean or array of those");
  };
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    const std::string flag = "--" + name;
    const auto* opt = sub->get_option_no_throw(flag);
    if (!opt) throw config_error(config_path + ": unknown key '" + key + "' for " + sub->get_name());
    if (given(flag)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) rest.push_back(flag);
    } else if (value.is_array()) {
      if (value.empty()) continue;
      rest.push_back(flag);
      for (const auto& e : value) rest.push_back(scalar(e, key));
    } else {
      rest.push_back(flag);
      rest.push_back(scalar(value, key));
    }
  }
  return rest;
}

void report(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weibull and chi-square random fields: simulation, pairwise likelihood fitting, prediction", "chi2field"};
  app.require_subcommand(1);
  app.add_option("--config", "JSON file of option values; command-line flags override it");

  SimulateFlags sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate realizations to CSV");
  sim.model.attach(c_sim);
  c_sim->add_option("--layout", sim.layout, "grid (n points on [0,1]) | grid2d (n x n on [0,1]^2) | network")->capture_default_str();
  c_sim->add_option("--n-sites", sim.n_sites, "points on the line (grid)")->capture_default_str();
  c_sim->add_option("--grid-n", sim.grid_n, "points per side (grid2d)")->capture_default_str();
  c_sim->add_option("--replicates", sim.replicates)->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--stations", sim.stations, "stations (network)")->capture_default_str();
  c_sim->add_option("--days", sim.days, "days (network)")->capture_default_str();
  c_sim->add_option("--extent-km", sim.extent_km, "side of the station square (network)")->capture_default_str();
  c_sim->add_option("--harmonics", sim.harmonics, "annual harmonics in the trend (network)")->capture_default_str();
  c_sim->add_option("--scale-lo", sim.scale_lo, "station scale lower bound (network)")->capture_default_str();
  c_sim->add_option("--scale-hi", sim.scale_hi, "station scale upper bound (network)")->capture_default_str();
  c_sim->add_option("--output,-o", sim.output, "CSV path, - for stdout")->capture_default_str();

  FitFlags fit;
  auto* c_fit = app.add_subcommand("fit", "Fit by weighted pairwise likelihood (or full likelihood on the line)");
  c_fit->add_option("--data", fit.data, "long-format CSV")->required();
  c_fit->add_option("--replicate", fit.replicate, "replicate to use when the CSV has a replicate column")->capture_default_str();
  c_fit->add_option("--marginal", fit.marginal, "weibull | loggaussian")->capture_default_str();
  c_fit->add_option("--corr", fit.corr, "exponential | matern | spacetime")->capture_default_str();
  c_fit->add_option("--delta-space", fit.delta_space, "spatial cut-off (inf: all)")->capture_default_str();
  c_fit->add_option("--delta-time", fit.delta_time, "temporal cut-off in days (inf: all)")->capture_default_str();
  c_fit->add_flag("--nearest-neighbour", fit.nearest_neighbour, "spatial cut-off at the smallest site spacing");
  c_fit->add_option("--harmonics", fit.harmonics, "replace covariates by q annual harmonics of t")->capture_default_str();
  c_fit->add_option("--period", fit.period, "harmonic period in days")->capture_default_str();
  c_fit->add_flag("--rescale", fit.rescale, "divide each station by its mean first");
  c_fit->add_option("--init", fit.init, "starting values, name=value");
  c_fit->add_option("--fix", fit.fix, "fixed parameters, name=value");
  c_fit->add_option("--max-evals", fit.max_evals, "objective evaluation budget")->capture_default_str();
  c_fit->add_option("--restarts", fit.restarts)->capture_default_str();
  c_fit->add_option("--xtol", fit.xtol, "simplex size tolerance")->capture_default_str();
  c_fit->add_option("--metric", fit.metric, "euclidean | great-circle (lon, lat in degrees; km)")->capture_default_str();
  c_fit->add_option("--method", fit.method, "mwpl | ml (Weibull, exponential, 1-D sites)")->capture_default_str();
  c_fit->add_flag("--no-std-errors", fit.no_std_errors, "skip the sandwich standard errors");
  c_fit->add_option("--block-axis", fit.block_axis, "auto | time | space")->capture_default_str();
  c_fit->add_option("--block-length", fit.block_length, "subsampling block length (0: default)")->capture_default_str();
  c_fit->add_option("--output,-o", fit.output, "JSON path, - for stdout")->capture_default_str();

  PredictFlags pred;
  auto* c_pred = app.add_subcommand("predict", "Predict at target sites from a fit");
  c_pred->add_option("--fit", pred.fit, "fit JSON")->required();
  c_pred->add_option("--data", pred.data, "observations CSV")->required();
  c_pred->add_option("--replicate", pred.replicate)->capture_default_str();
  c_pred->add_option("--targets", pred.targets, "CSV with x[,y][,t][,station][,target_id][,observed][,covariates]")->required();
  c_pred->add_option("--window-days", pred.window_days, "use only the previous d days of data (0: all)")->capture_default_str();
  c_pred->add_option("--output,-o", pred.output)->capture_default_str();

  std::string score_in, score_out = "-";
  auto* c_score = app.add_subcommand("score", "RMSE, MAE and mean CRPS of a predictions CSV");
  c_score->add_option("--predictions", score_in, "CSV with point, observed[, crps]")->required();
  c_score->add_option("--output,-o", score_out)->capture_default_str();

  Table1Flags t1;
  auto* c_t1 = app.add_subcommand("study-table1", "Estimation efficiency of nearest-neighbour WPL vs ML on the line");
  c_t1->add_option("--replicates", t1.replicates, "at least 100")->capture_default_str();
  c_t1->add_option("--seed", t1.seed)->capture_default_str();
  c_t1->add_option("--threads", t1.threads)->capture_default_str();
  c_t1->add_option("--kappas", t1.kappas)->capture_default_str();
  c_t1->add_option("--phis", t1.phis)->capture_default_str();
  c_t1->add_option("--n-sites", t1.n_sites)->capture_default_str();
  c_t1->add_option("--max-evals", t1.max_evals)->capture_default_str();
  c_t1->add_option("--output,-o", t1.output)->capture_default_str();

  Table2Flags t2;
  auto* c_t2 = app.add_subcommand("study-table2", "MSPE of the optimal vs the linear predictor on the line");
  c_t2->add_option("--replicates", t2.replicates, "at least 200")->capture_default_str();
  c_t2->add_option("--seed", t2.seed)->capture_default_str();
  c_t2->add_option("--threads", t2.threads)->capture_default_str();
  c_t2->add_option("--kappas", t2.kappas)->capture_default_str();
  c_t2->add_option("--phis", t2.phis)->capture_default_str();
  c_t2->add_option("--output,-o", t2.output)->capture_default_str();

  PipelineFlags pw;
  auto* c_pw = app.add_subcommand("pipeline-wind", "Rescale, harmonic trend, space-time fits, one-day-ahead prediction");
  c_pw->add_option("--data", pw.data, "station CSV (default: synthetic network)");
  c_pw->add_option("--stations", pw.stations, "synthetic stations")->capture_default_str();
  c_pw->add_option("--days", pw.days, "synthetic days")->capture_default_str();
  c_pw->add_option("--seed", pw.seed, "synthetic data seed")->capture_default_str();
  c_pw->add_option("--true-phi-st", pw.true_phi_st, "synthetic space-time interaction")->capture_default_str();
  c_pw->add_option("--harmonics", pw.harmonics)->capture_default_str();
  c_pw->add_option("--period", pw.period)->capture_default_str();
  c_pw->add_option("--phi-st", pw.phi_st, "fixed interaction values to fit")->capture_default_str();
  c_pw->add_option("--families", pw.families)->capture_default_str();
  c_pw->add_option("--delta-space", pw.delta_space)->capture_default_str();
  c_pw->add_option("--delta-time", pw.delta_time)->capture_default_str();
  c_pw->add_option("--window-days", pw.window_days)->capture_default_str();
  c_pw->add_option("--metric", pw.metric)->capture_default_str();
  c_pw->add_option("--max-evals", pw.max_evals)->capture_default_str();
  c_pw->add_option("--spatial-bins", pw.spatial_bins)->capture_default_str();
  c_pw->add_option("--max-lag-days", pw.max_lag_days)->capture_default_str();
  c_pw->add_flag("--write-data", pw.write_data, "also write the input data to data.csv");
  c_pw->add_option("--output-dir", pw.output_dir)->required();

  DiagnosticsFlags dg;
  auto* c_dg = app.add_subcommand("diagnostics", "Semi-variograms, normal scores, tail dependence, copula grid");
  c_dg->add_option("--data", dg.data)->required();
  c_dg->add_option("--replicate", dg.replicate)->capture_default_str();
  c_dg->add_option("--fit", dg.fit, "fit JSON; residuals become y / mu-hat and a theory column is added");
  c_dg->add_option("--harmonics", dg.harmonics, "without --fit")->capture_default_str();
  c_dg->add_option("--period", dg.period)->capture_default_str();
  c_dg->add_flag("--rescale", dg.rescale, "without --fit");
  c_dg->add_option("--metric", dg.metric)->capture_default_str();
  c_dg->add_option("--spatial-bins", dg.spatial_bins)->capture_default_str();
  c_dg->add_option("--max-lag-days", dg.max_lag_days)->capture_default_str();
  c_dg->add_option("--quantiles", dg.quantiles)->capture_default_str();
  c_dg->add_flag("!--no-pair-files", dg.pair_files, "skip the per-pair normal-score files");
  c_dg->add_option("--copula-rho", dg.copula_rho)->capture_default_str();
  c_dg->add_option("--copula-m", dg.copula_m)->capture_default_str();
  c_dg->add_option("--copula-n", dg.copula_n)->capture_default_str();
  c_dg->add_option("--copula-range", dg.copula_range)->capture_default_str();
  c_dg->add_option("--output-dir", dg.output_dir)->required();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(app, args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      report("config_error", e.what(), kExitConfig);
      return kExitConfig;
    }
    try {
      if (*c_sim) run_simulate(sim, *c_sim);
      else if (*c_fit) run_fit(fit);
      else if (*c_pred) run_predict(pred);
      else if (*c_score) run_score(score_in, score_out);
      else if (*c_t1) run_table1(t1);
      else if (*c_t2) run_table2(t2);
      else if (*c_pw) run_pipeline(pw);
      else if (*c_dg) run_diagnostics(dg);
    } catch (const domain_error& e) {
      // Out-of-domain model values reach the library through the flags.
      report("config_error", e.what(), kExitConfig);
      return kExitConfig;
    }
  } catch (const config_error& e) {
    report("config_error", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const not_converged& e) {
    report("not_converged", e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const numerical_error& e) {
    report("numerical_error", e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const std::exception& e) {
    report("error", e.what(), kExitNumerical);
    return kExitNumerical;
  }
  return 0;
}
