#pragma once

#include <chi2field/errors.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace chi2field {

/// A spatial location, optionally tagged with an integer time index (days), plus covariates.
struct Site {
  std::vector<double> coords;
  std::optional<int> time;
  std::vector<double> covariates;

  friend bool operator==(const Site&, const Site&) = default;
};

/// Separation of two sites: ‖h‖ and |u|.
struct Lag {
  double spatial = 0.0;
  double temporal = 0.0;
};

enum class DistanceMetric {
  euclidean,
  /// coords are (longitude, latitude) in degrees; distance in kilometres.
  great_circle_km,
};

inline constexpr double kEarthRadiusKm = 6371.0088;

inline double spatial_distance(const Site& a, const Site& b,
                               DistanceMetric metric = DistanceMetric::euclidean) {
  if (a.coords.size() != b.coords.size())
    throw domain_error("spatial_distance: coordinate dimensions differ");
  if (metric == DistanceMetric::great_circle_km) {
    if (a.coords.size() != 2) throw domain_error("great-circle distance needs (lon, lat) coordinates");
    constexpr double deg = std::numbers::pi / 180.0;
    const double lat1 = a.coords[1] * deg;
    const double lat2 = b.coords[1] * deg;
    const double dlat = lat2 - lat1;
    const double dlon = (b.coords[0] - a.coords[0]) * deg;
    const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::fmin(1.0, s)));
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < a.coords.size(); ++k) {
    const double d = a.coords[k] - b.coords[k];
    sq += d * d;
  }
  return std::sqrt(sq);
}

inline Lag lag_between(const Site& a, const Site& b,
                       DistanceMetric metric = DistanceMetric::euclidean) {
  Lag lag{spatial_distance(a, b, metric), 0.0};
  if (a.time && b.time) lag.temporal = std::abs(static_cast<double>(*a.time - *b.time));
  return lag;
}

/// Same position and same time index (covariates are ignored).
inline bool same_location(const Site& a, const Site& b) {
  return a.coords == b.coords && a.time == b.time;
}

}  // namespace chi2field
