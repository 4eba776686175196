#pragma once

// Long-format CSV for station data and JSON for fit results.

#include <chi2field/dataset.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/inference.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace chi2field {

/// Shortest-round-trip-safe decimal text (17 significant digits).
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw config_error("line " + std::to_string(line) + ": column '" + column + "': not a number: '" + s + "'");
  }
}

/// Integer day index, or an ISO date YYYY-MM-DD mapped to days since 1970-01-01.
inline int parse_day(const std::string& s, std::size_t line) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) == 3) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw config_error("line " + std::to_string(line) + ": invalid date '" + s + "'");
    return static_cast<int>(std::chrono::sys_days{ymd}.time_since_epoch().count());
  }
  const double v = parse_number(s, line, "t");
  if (v != std::floor(v) || std::fabs(v) > 1e9)
    throw config_error("line " + std::to_string(line) + ": t must be an integer day index or YYYY-MM-DD");
  return static_cast<int>(v);
}

}  // namespace detail

/// Reads station,x[,y][,t],value[,covariates...] with a header row. A
/// `replicate` column, when present, selects rows equal to `replicate`.
inline Dataset read_dataset_csv(std::istream& in, int replicate = 0) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw config_error("dataset CSV: empty input (header required)");
  ++line_no;
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k].empty()) throw config_error("dataset CSV: empty column name in header");
    if (!col.emplace(header[k], k).second) throw config_error("dataset CSV: duplicate column '" + header[k] + "'");
  }
  for (const char* required : {"station", "x", "value"})
    if (!col.count(required)) throw config_error(std::string("dataset CSV: missing required column '") + required + "'");
  const std::vector<std::string> reserved{"station", "x", "y", "t", "value", "replicate"};
  std::vector<std::size_t> cov_cols;
  for (std::size_t k = 0; k < header.size(); ++k)
    if (std::find(reserved.begin(), reserved.end(), header[k]) == reserved.end()) cov_cols.push_back(k);
  Dataset d;
  std::map<std::string, std::size_t> station_ids;
  std::map<std::size_t, std::vector<double>> station_coords;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw config_error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                         " fields, found " + std::to_string(cells.size()));
    if (col.count("replicate") &&
        detail::parse_number(cells[col["replicate"]], line_no, "replicate") != static_cast<double>(replicate))
      continue;
    Site s;
    s.coords.push_back(detail::parse_number(cells[col["x"]], line_no, "x"));
    if (col.count("y") && !cells[col["y"]].empty()) s.coords.push_back(detail::parse_number(cells[col["y"]], line_no, "y"));
    if (col.count("t") && !cells[col["t"]].empty()) s.time = detail::parse_day(cells[col["t"]], line_no);
    for (auto c : cov_cols) s.covariates.push_back(detail::parse_number(cells[c], line_no, header[c]));
    const double v = detail::parse_number(cells[col["value"]], line_no, "value");
    if (!(v > 0.0)) throw config_error("line " + std::to_string(line_no) + ": value must be positive");
    const auto& name = cells[col["station"]];
    if (name.empty()) throw config_error("line " + std::to_string(line_no) + ": empty station name");
    auto [it, fresh] = station_ids.emplace(name, d.station_names.size());
    if (fresh) {
      d.station_names.push_back(name);
      station_coords[it->second] = s.coords;
    } else if (station_coords[it->second] != s.coords) {
      throw config_error("line " + std::to_string(line_no) + ": station '" + name + "' changes coordinates");
    }
    d.station.push_back(it->second);
    d.sites.push_back(std::move(s));
    d.values.push_back(v);
  }
  if (d.values.empty()) throw config_error("dataset CSV: no data rows");
  try {
    d.validate();
  } catch (const domain_error& e) {
    throw config_error(std::string("dataset CSV: ") + e.what());
  }
  return d;
}

inline Dataset read_dataset_csv(const std::string& path, int replicate = 0) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  return read_dataset_csv(in, replicate);
}

inline void write_dataset_csv(std::ostream& out, const Dataset& d, const std::vector<std::string>& covariate_names = {}) {
  const auto ncov = d.n_covariates();
  out << "station,x,y,t,value";
  for (std::size_t c = 0; c < ncov; ++c) out << ',' << (c < covariate_names.size() ? covariate_names[c] : "v" + std::to_string(c + 1));
  out << '\n';
  for (std::size_t k = 0; k < d.size(); ++k) {
    const auto& s = d.sites[k];
    out << d.station_names[d.station[k]] << ',' << format_double(s.coords.at(0)) << ','
        << (s.coords.size() > 1 ? format_double(s.coords[1]) : "") << ',' << (s.time ? std::to_string(*s.time) : "") << ','
        << format_double(d.values[k]);
    for (double v : s.covariates) out << ',' << format_double(v);
    out << '\n';
  }
}

/// Several realizations on one layout, distinguished by a leading `replicate` column.
inline void write_replicates_csv(std::ostream& out, const std::vector<Dataset>& reps,
                                 const std::vector<std::string>& covariate_names = {}) {
  if (reps.empty()) throw domain_error("write_replicates_csv: nothing to write");
  std::ostringstream body;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    body.str("");
    write_dataset_csv(body, reps[r], covariate_names);
    const auto text = body.str();
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    if (r == 0) out << "replicate," << line << '\n';
    while (std::getline(lines, line)) out << r << ',' << line << '\n';
  }
}

/// A header row and string cells; for the smaller tabular inputs (targets, predictions).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// Source line of each row, for diagnostics.
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
  std::size_t require(const std::string& name) const {
    const auto c = column(name);
    if (!c) throw config_error("CSV: missing required column '" + name + "'");
    return *c;
  }
  double number(std::size_t row, std::size_t col) const {
    return detail::parse_number(rows[row][col], lines[row], header[col]);
  }
};

inline CsvTable read_csv_table(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw config_error("CSV: empty input (header required)");
  t.header = detail::split_csv_line(line);
  for (std::size_t k = 0; k < t.header.size(); ++k)
    if (std::find(t.header.begin(), t.header.begin() + static_cast<std::ptrdiff_t>(k), t.header[k]) !=
        t.header.begin() + static_cast<std::ptrdiff_t>(k))
      throw config_error("CSV: duplicate column '" + t.header[k] + "'");
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw config_error("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                         " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(line_no);
  }
  if (t.rows.empty()) throw config_error("CSV: no data rows");
  return t;
}

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  return read_csv_table(in);
}

// ---------------------------------------------------------------------------
// JSON

inline std::string to_string(MarginalFamily m) { return m == MarginalFamily::weibull ? "weibull" : "loggaussian"; }

inline std::string to_string(CorrFamily c) {
  switch (c) {
    case CorrFamily::exponential: return "exponential";
    case CorrFamily::matern: return "matern";
    case CorrFamily::spacetime_gw: return "spacetime";
  }
  return "";
}

inline MarginalFamily parse_marginal(const std::string& s) {
  if (s == "weibull") return MarginalFamily::weibull;
  if (s == "loggaussian" || s == "log-gaussian") return MarginalFamily::loggaussian;
  throw config_error("unknown marginal model '" + s + "' (weibull, loggaussian)");
}

inline CorrFamily parse_corr_family(const std::string& s) {
  if (s == "exponential") return CorrFamily::exponential;
  if (s == "matern") return CorrFamily::matern;
  if (s == "spacetime" || s == "spacetime_gw") return CorrFamily::spacetime_gw;
  throw config_error("unknown correlation family '" + s + "' (exponential, matern, spacetime)");
}

/// JSON numbers cannot be NaN or infinite; those become null.
inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const FitResult& f) {
  nlohmann::json j;
  j["method"] = f.method;
  j["marginal"] = to_string(f.params.marginal);
  j["correlation"] = to_string(family_of(f.params.corr));
  nlohmann::json est = nlohmann::json::array();
  for (std::size_t k = 0; k < f.names.size(); ++k) {
    nlohmann::json e;
    e["name"] = f.names[k];
    e["estimate"] = json_number(f.theta_hat[k]);
    e["fixed"] = static_cast<bool>(f.fixed[k]);
    e["std_error"] = f.std_errors.empty() ? nlohmann::json(nullptr) : json_number(f.std_errors[k]);
    est.push_back(e);
  }
  j["parameters"] = est;
  j["loglik_pl"] = json_number(f.loglik_pl);
  j["plic"] = json_number(f.plic);
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["evaluations"] = f.evaluations;
  j["subsample"] = {{"axis", f.subsample.axis},
                    {"block_length", f.subsample.block_length},
                    {"step", f.subsample.step},
                    {"blocks", f.subsample.n_blocks}};
  if (!f.note.empty()) j["note"] = f.note;
  return j;
}

/// Model parameters from a fit JSON document.
inline ModelParams params_from_json(const nlohmann::json& j) {
  try {
    const auto marginal = parse_marginal(j.at("marginal").get<std::string>());
    const auto family = parse_corr_family(j.at("correlation").get<std::string>());
    std::map<std::string, double> v;
    std::size_t n_beta = 0;
    for (const auto& e : j.at("parameters")) {
      const auto name = e.at("name").get<std::string>();
      v[name] = e.at("estimate").get<double>();
      if (name.rfind("beta", 0) == 0) ++n_beta;
    }
    const ParameterSpace space(marginal, family, n_beta);
    std::vector<double> nat;
    for (const auto& e : space.info()) {
      if (!v.count(e.name)) throw config_error("fit JSON: missing parameter '" + e.name + "'");
      nat.push_back(v[e.name]);
    }
    auto p = space.params(nat);
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("fit JSON: ") + e.what());
  } catch (const domain_error& e) {
    throw config_error(std::string("fit JSON: ") + e.what());
  }
}

}  // namespace chi2field
