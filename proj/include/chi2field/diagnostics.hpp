#pragma once

// Normal scores, empirical semi-variograms and an empirical upper-tail
// dependence curve.

#include <chi2field/dataset.hpp>
#include <chi2field/errors.hpp>
#include <chi2field/site.hpp>
#include <chi2field/specialfn.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace chi2field {

/// Φ⁻¹((rank - ½)/n) with average ranks for ties.
inline std::vector<double> normal_scores(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw domain_error("normal_scores: need at least two values");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && values[order[hi]] == values[order[lo]]) ++hi;
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);  // mean of ranks lo+1..hi
    const double z = normal_quantile((rank - 0.5) / static_cast<double>(n));
    for (std::size_t k = lo; k < hi; ++k) out[order[k]] = z;
    lo = hi;
  }
  return out;
}

/// Normal scores computed separately within each station.
inline std::vector<double> normal_scores_by_station(const Dataset& data, std::span<const double> values) {
  if (values.size() != data.size()) throw domain_error("normal_scores_by_station: length mismatch");
  std::vector<std::vector<std::size_t>> members(data.n_stations());
  for (std::size_t k = 0; k < data.size(); ++k) members[data.station[k]].push_back(k);
  std::vector<double> out(values.size());
  for (const auto& m : members) {
    if (m.empty()) continue;
    std::vector<double> v;
    for (auto k : m) v.push_back(values[k]);
    const auto z = normal_scores(v);
    for (std::size_t r = 0; r < m.size(); ++r) out[m[r]] = z[r];
  }
  return out;
}

enum class VariogramAxis { spatial_marginal, temporal_marginal };

struct VariogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_lag = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
  bool empty = true;
};

/// γ̂(b) = Σ (r_i - r_j)² / (2|N(b)|) over bins [edges[k], edges[k+1]).
/// Spatial: pairs observed at the same time (or all pairs for untimed data);
/// temporal: pairs at the same station.
inline std::vector<VariogramBin> empirical_semivariogram(const Dataset& data, std::span<const double> residuals,
                                                         VariogramAxis axis, std::span<const double> edges,
                                                         DistanceMetric metric = DistanceMetric::euclidean) {
  if (residuals.size() != data.size()) throw domain_error("empirical_semivariogram: length mismatch");
  if (edges.size() < 2) throw domain_error("empirical_semivariogram: need at least one bin");
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (!(edges[k] > edges[k - 1])) throw domain_error("empirical_semivariogram: bin edges must increase");
  const std::size_t nb = edges.size() - 1;
  std::vector<double> sum(nb, 0.0), lag_sum(nb, 0.0);
  std::vector<std::size_t> count(nb, 0);
  auto add = [&](double lag, double a, double b) {
    if (lag < edges.front() || lag >= edges.back()) return;
    const auto k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), lag) - edges.begin()) - 1;
    sum[k] += (a - b) * (a - b);
    lag_sum[k] += lag;
    ++count[k];
  };
  const bool timed = data.has_time();
  if (axis == VariogramAxis::temporal_marginal) {
    if (!timed) throw domain_error("empirical_semivariogram: temporal axis needs time indices");
    std::vector<std::vector<std::size_t>> members(data.n_stations());
    for (std::size_t k = 0; k < data.size(); ++k) members[data.station[k]].push_back(k);
    for (auto& m : members) {
      std::stable_sort(m.begin(), m.end(), [&](auto a, auto b) { return *data.sites[a].time < *data.sites[b].time; });
      for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t b = a + 1; b < m.size(); ++b) {
          const double u = static_cast<double>(*data.sites[m[b]].time - *data.sites[m[a]].time);
          if (u >= edges.back()) break;
          add(u, residuals[m[a]], residuals[m[b]]);
        }
    }
  } else if (timed) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return *data.sites[a].time < *data.sites[b].time; });
    for (std::size_t lo = 0; lo < order.size();) {
      std::size_t hi = lo;
      while (hi < order.size() && *data.sites[order[hi]].time == *data.sites[order[lo]].time) ++hi;
      for (std::size_t a = lo; a < hi; ++a)
        for (std::size_t b = a + 1; b < hi; ++b)
          add(spatial_distance(data.sites[order[a]], data.sites[order[b]], metric), residuals[order[a]],
              residuals[order[b]]);
      lo = hi;
    }
  } else {
    for (std::size_t a = 0; a < data.size(); ++a)
      for (std::size_t b = a + 1; b < data.size(); ++b)
        add(spatial_distance(data.sites[a], data.sites[b], metric), residuals[a], residuals[b]);
  }
  std::vector<VariogramBin> out(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    out[k].lo = edges[k];
    out[k].hi = edges[k + 1];
    out[k].count = count[k];
    out[k].empty = count[k] == 0;
    if (count[k] > 0) {
      out[k].gamma = sum[k] / (2.0 * static_cast<double>(count[k]));
      out[k].mean_lag = lag_sum[k] / static_cast<double>(count[k]);
    }
  }
  return out;
}

struct TailDependencePoint {
  double u = 0.0;
  double chi = std::numeric_limits<double>::quiet_NaN();
  std::size_t exceed_first = 0;
  std::size_t exceed_both = 0;
};

struct TailDependenceCurve {
  std::vector<TailDependencePoint> points;
  /// Fewer than 100 aligned observations; the curve is very noisy.
  bool short_series = false;
};

/// χ(u) = #{both above their u-quantile} / #{first above its u-quantile},
/// using empirical ranks of each series.
inline TailDependenceCurve tail_dependence_diagnostic(std::span<const double> a, std::span<const double> b,
                                                      std::span<const double> quantiles) {
  if (a.size() != b.size()) throw domain_error("tail_dependence_diagnostic: series must be aligned");
  if (a.size() < 2) throw domain_error("tail_dependence_diagnostic: need at least two points");
  const std::size_t n = a.size();
  auto pseudo = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> u(n);
    for (std::size_t r = 0; r < n; ++r) u[order[r]] = static_cast<double>(r + 1) / static_cast<double>(n + 1);
    return u;
  };
  const auto ua = pseudo(a), ub = pseudo(b);
  TailDependenceCurve out;
  out.short_series = n < 100;
  for (double u : quantiles) {
    if (!(u > 0.0 && u < 1.0)) throw domain_error("tail_dependence_diagnostic: quantiles must lie in (0, 1)");
    TailDependencePoint p;
    p.u = u;
    for (std::size_t k = 0; k < n; ++k)
      if (ua[k] > u) {
        ++p.exceed_first;
        if (ub[k] > u) ++p.exceed_both;
      }
    if (p.exceed_first > 0) p.chi = static_cast<double>(p.exceed_both) / static_cast<double>(p.exceed_first);
    out.points.push_back(p);
  }
  return out;
}

}  // namespace chi2field
