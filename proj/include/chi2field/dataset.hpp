#pragma once

#include <chi2field/errors.hpp>
#include <chi2field/model.hpp>
#include <chi2field/site.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace chi2field {

/// Positive observations at (site, time) points. `station[k]` indexes
/// `station_names`; observations sharing coordinates share a station.
struct Dataset {
  std::vector<Site> sites;
  std::vector<double> values;
  std::vector<std::size_t> station;
  std::vector<std::string> station_names;
  /// a(s) per station when values have been divided by the station mean; empty otherwise.
  std::vector<double> station_scale;

  std::size_t size() const { return values.size(); }
  std::size_t n_stations() const { return station_names.size(); }
  bool has_time() const {
    return !sites.empty() && std::all_of(sites.begin(), sites.end(), [](const Site& s) { return s.time.has_value(); });
  }
  std::size_t n_covariates() const { return sites.empty() ? 0 : sites.front().covariates.size(); }

  void validate() const {
    if (sites.size() != values.size()) throw domain_error("Dataset: sites and values differ in length");
    if (station.size() != values.size()) throw domain_error("Dataset: station ids and values differ in length");
    if (sites.empty()) throw domain_error("Dataset: no observations");
    const auto dim = sites.front().coords.size();
    const auto ncov = sites.front().covariates.size();
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (!(values[k] > 0.0) || !std::isfinite(values[k]))
        throw domain_error("Dataset: observation " + std::to_string(k) + " is not a positive finite value");
      if (sites[k].coords.size() != dim) throw domain_error("Dataset: inconsistent coordinate dimension");
      if (sites[k].covariates.size() != ncov) throw domain_error("Dataset: inconsistent covariate count");
      if (station[k] >= station_names.size()) throw domain_error("Dataset: station id out of range");
    }
    if (!station_scale.empty() && station_scale.size() != station_names.size())
      throw domain_error("Dataset: station_scale must have one entry per station");
  }
};

/// Assigns station ids by distinct coordinates, in order of first appearance.
inline void assign_stations(Dataset& data) {
  std::map<std::vector<double>, std::size_t> ids;
  data.station.assign(data.sites.size(), 0);
  data.station_names.clear();
  for (std::size_t k = 0; k < data.sites.size(); ++k) {
    auto [it, fresh] = ids.emplace(data.sites[k].coords, ids.size());
    if (fresh) data.station_names.push_back("s" + std::to_string(it->second));
    data.station[k] = it->second;
  }
}

inline Dataset make_dataset(std::vector<Site> sites, std::vector<double> values) {
  Dataset d;
  d.sites = std::move(sites);
  d.values = std::move(values);
  assign_stations(d);
  d.validate();
  return d;
}

/// Ỹ(s,t) = Y(s,t)/a(s), with a(s) the average of the observations at s.
inline Dataset rescale_by_station_mean(const Dataset& data) {
  data.validate();
  std::vector<double> sum(data.n_stations(), 0.0);
  std::vector<std::size_t> count(data.n_stations(), 0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    sum[data.station[k]] += data.values[k];
    ++count[data.station[k]];
  }
  Dataset out = data;
  out.station_scale.assign(data.n_stations(), 1.0);
  for (std::size_t s = 0; s < sum.size(); ++s) {
    if (count[s] == 0) throw domain_error("rescale_by_station_mean: station without observations");
    out.station_scale[s] = sum[s] / static_cast<double>(count[s]);
  }
  for (std::size_t k = 0; k < data.size(); ++k) out.values[k] /= out.station_scale[data.station[k]];
  return out;
}

/// Replaces every site's covariates by the q annual harmonics of its time index.
inline Dataset with_harmonic_covariates(const Dataset& data, int q, double period = kYearPeriodDays) {
  if (!data.has_time()) throw domain_error("with_harmonic_covariates: every site needs a time index");
  Dataset out = data;
  for (auto& s : out.sites) s.covariates = harmonic_covariates(static_cast<double>(*s.time), q, period);
  return out;
}

}  // namespace chi2field
