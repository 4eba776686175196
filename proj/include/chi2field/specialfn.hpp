#pragma once

// Scalar special functions used by the densities, correlations and scores.
//
// Everything here is pure: identical arguments give bit-identical results and
// no function touches global state (lgamma_r is used instead of lgamma so the
// glibc `signgam` global is never written).

#include <chi2field/errors.hpp>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <math.h>

namespace chi2field {

/// Truncation policy for hypergeometric series.
struct SeriesControl {
  double rel_tol = 1e-13;
  std::size_t max_terms = 100000;

  void validate() const {
    if (!(rel_tol > 0.0)) throw domain_error("SeriesControl: rel_tol must be positive");
    if (max_terms < 1) throw domain_error("SeriesControl: max_terms must be at least 1");
  }
};

/// Above this argument ₂F₁(a,b;c;x) is replaced by its value at x = 1.
inline constexpr double kGaussEndpointThreshold = 1.0 - 1e-8;

namespace detail {

inline double lgamma_signed(double x, int& sign) {
#if defined(__GLIBC__)
  return ::lgamma_r(x, &sign);
#else
  const double g = std::tgamma(x);
  sign = g < 0 ? -1 : 1;
  return std::log(std::fabs(g));
#endif
}

inline bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

/// 1/Γ(x), equal to zero at the poles.
inline double reciprocal_gamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  int sign = 1;
  const double lg = lgamma_signed(x, sign);
  return sign * std::exp(-lg);
}

/// Gamma ratio Π Γ(num) / Π Γ(den) evaluated through logs with tracked sign.
inline double gamma_ratio(std::initializer_list<double> num, std::initializer_list<double> den) {
  double log_value = 0.0;
  int sign = 1;
  for (double v : den) {
    if (is_nonpositive_integer(v)) return 0.0;
    int s = 1;
    log_value -= lgamma_signed(v, s);
    sign *= s;
  }
  for (double v : num) {
    if (is_nonpositive_integer(v))
      throw domain_error("gamma_ratio: pole in numerator at " + std::to_string(v));
    int s = 1;
    log_value += lgamma_signed(v, s);
    sign *= s;
  }
  return sign * std::exp(log_value);
}

// Σ_k t_k with t_0 = 1, t_{k+1} = t_k (x²/4)/((k+1)(k+1+ν)), returned as a log,
// so that log[(x/2)^{-ν} I_ν(x)] = log(sum) - lgamma(ν + 1).
inline double log_bessel_i_series_sum(double order, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  constexpr double kRescale = 1e280;
  for (std::size_t k = 0;; ++k) {
    const double kk = static_cast<double>(k + 1);
    const double ratio = q / (kk * (kk + order));
    term *= ratio;
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_scale += std::log(kRescale);
    }
    if (ratio < 1.0 && term <= 1e-17 * sum) break;
    if (k > 1000000) throw convergence_error("log_bessel_i: series did not converge");
  }
  return log_scale + std::log(sum);
}

// log I_ν(x) from the large-argument expansion, summed until the terms either
// fall below double precision or start to grow.
inline double log_bessel_i_asymptotic(double order, double x) {
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < 500; ++k) {
    const double odd = 2.0 * static_cast<double>(k) - 1.0;
    term *= -(mu - odd * odd) / (8.0 * static_cast<double>(k) * x);
    const double magnitude = std::fabs(term);
    if (magnitude >= previous) break;
    sum += term;
    if (magnitude <= 1e-17 * std::fabs(sum)) break;
    previous = magnitude;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

inline bool use_bessel_asymptotic(double order, double x) { return x >= 30.0 + order * order; }

}  // namespace detail

/// log Γ(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw domain_error("log_gamma: argument must be positive");
  int sign = 1;
  return detail::lgamma_signed(x, sign);
}

/// γ(s, z) = ∫₀ᶻ t^{s-1} e^{-t} dt.
inline double lower_incomplete_gamma(double s, double z) {
  if (!(s > 0.0)) throw domain_error("lower_incomplete_gamma: s must be positive");
  if (!(z >= 0.0)) throw domain_error("lower_incomplete_gamma: z must be nonnegative");
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return std::tgamma(s);
  return boost::math::tgamma_lower(s, z);
}

/// log[(x/2)^{-ν} I_ν(x)], finite at x = 0 where it equals -log Γ(ν+1).
///
/// This is the combination that appears in the Kibble density; working with
/// it directly avoids the 0·∞ form of (x/2)^{-ν}I_ν(x) at x = 0 when ν < 0.
inline double log_bessel_i_normalized(double order, double x) {
  if (!(x >= 0.0)) throw domain_error("log_bessel_i: argument must be nonnegative");
  if (!(order > -1.0)) throw domain_error("log_bessel_i: order must exceed -1");
  if (detail::use_bessel_asymptotic(order, x))
    return detail::log_bessel_i_asymptotic(order, x) - order * std::log(0.5 * x);
  return detail::log_bessel_i_series_sum(order, x) - log_gamma(order + 1.0);
}

/// log I_a(x), the modified Bessel function of the first kind, evaluated in
/// log space (no overflow for large x).
inline double log_bessel_i(double order, double x) {
  if (!(x >= 0.0)) throw domain_error("log_bessel_i: argument must be nonnegative");
  if (!(order > -1.0)) throw domain_error("log_bessel_i: order must exceed -1");
  if (x == 0.0) {
    if (order == 0.0) return 0.0;
    return order > 0.0 ? -std::numeric_limits<double>::infinity()
                       : std::numeric_limits<double>::infinity();
  }
  if (detail::use_bessel_asymptotic(order, x)) return detail::log_bessel_i_asymptotic(order, x);
  return order * std::log(0.5 * x) + detail::log_bessel_i_series_sum(order, x) -
         log_gamma(order + 1.0);
}

/// K_a(x), the modified Bessel function of the second kind.
///
/// Half-integer orders use the finite closed form; other orders defer to
/// std::cyl_bessel_k.
inline double bessel_k(double order, double x) {
  if (!(order > 0.0)) throw domain_error("bessel_k: order must be positive");
  if (!(x > 0.0)) throw domain_error("bessel_k: argument must be positive");
  const double twice = 2.0 * order;
  if (twice == std::floor(twice) && static_cast<long>(twice) % 2 == 1) {
    const long n = static_cast<long>(order - 0.5);
    double sum = 0.0;
    double coef = 1.0;  // (n+k)! / (k! (n-k)!)
    double inv_pow = 1.0;
    for (long k = 0; k <= n; ++k) {
      sum += coef * inv_pow;
      coef *= static_cast<double>((n + k + 1) * (n - k)) / static_cast<double>(k + 1);
      inv_pow /= 2.0 * x;
    }
    return std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) * sum;
  }
  return std::cyl_bessel_k(order, x);
}

namespace detail {

// Plain hypergeometric series. When `skip_leading` is set the k = 0 term is
// left out, so the caller receives pFq - 1 without cancellation.
inline double hypergeom_series(std::span<const double> numerators,
                               std::span<const double> denominators, double x,
                               const SeriesControl& ctl, bool skip_leading = false) {
  double term = 1.0;
  double sum = skip_leading ? 0.0 : 1.0;
  if (x == 0.0) return sum;
  for (std::size_t k = 0; k < ctl.max_terms; ++k) {
    const double kd = static_cast<double>(k);
    double ratio = x / (kd + 1.0);
    for (double a : numerators) ratio *= a + kd;
    for (double b : denominators) ratio /= b + kd;
    term *= ratio;
    if (term == 0.0) return sum;  // a numerator hit a nonpositive integer
    sum += term;
    // Geometric bound on the remaining tail once the ratios are below one.
    const double r = std::fabs(ratio);
    if (r < 1.0 && std::fabs(term) * std::max(1.0, r / (1.0 - r)) <= ctl.rel_tol * std::fabs(sum))
      return sum;
  }
  throw convergence_error("hypergeom_pfq: series did not reach rel_tol within " +
                          std::to_string(ctl.max_terms) + " terms");
}

inline void check_denominators(std::span<const double> denominators) {
  for (double b : denominators)
    if (is_nonpositive_integer(b))
      throw domain_error("hypergeom_pfq: denominator parameter is a nonpositive integer");
}

inline bool terminates(std::span<const double> numerators) {
  for (double a : numerators)
    if (is_nonpositive_integer(a)) return true;
  return false;
}

}  // namespace detail

/// Generalized hypergeometric series pFq(a; b; x) = Σ Π(a_i)_k / Π(b_j)_k · x^k / k!.
///
/// Only evaluates where the series converges: any x when p ≤ q, |x| < 1 when
/// p = q + 1. Divergent configurations are domain errors.
inline double hypergeom_pfq(std::span<const double> numerators,
                            std::span<const double> denominators, double x,
                            const SeriesControl& ctl = {}) {
  ctl.validate();
  detail::check_denominators(denominators);
  if (!detail::terminates(numerators)) {
    if (numerators.size() == denominators.size() + 1 && !(std::fabs(x) < 1.0))
      throw domain_error("hypergeom_pfq: series requires |x| < 1 (use gauss_2f1_at_one at x = 1)");
    if (numerators.size() > denominators.size() + 1 && x != 0.0)
      throw domain_error("hypergeom_pfq: series diverges for p > q + 1");
  }
  return detail::hypergeom_series(numerators, denominators, x, ctl);
}

inline double hypergeom_pfq(std::initializer_list<double> numerators,
                            std::initializer_list<double> denominators, double x,
                            const SeriesControl& ctl = {}) {
  return hypergeom_pfq(std::span<const double>(numerators.begin(), numerators.size()),
                       std::span<const double>(denominators.begin(), denominators.size()), x,
                       ctl);
}

/// Gauss summation ₂F₁(a,b;c;1) = Γ(c)Γ(c-a-b)/(Γ(c-a)Γ(c-b)), requires c - a - b > 0.
inline double gauss_2f1_at_one(double a, double b, double c) {
  if (!(c - a - b > 0.0)) throw domain_error("gauss_2f1_at_one: requires c - a - b > 0");
  if (detail::is_nonpositive_integer(c)) throw domain_error("gauss_2f1_at_one: c is a pole");
  return detail::gamma_ratio({c, c - a - b}, {c - a, c - b});
}

namespace detail {

// Near-integer c - a - b within this distance is evaluated with the
// logarithmic (integer) connection formula.
inline constexpr double kIntegerGapTolerance = 1e-7;

// ₂F₁(a,b;c;x) for x close to 1 through the connection formulas in (1 - x).
inline double hyp2f1_near_one(double a, double b, double c, double x, const SeriesControl& ctl) {
  using boost::math::digamma;
  const double y = 1.0 - x;
  const double s = c - a - b;
  const double nearest = std::round(s);
  if (std::fabs(s - nearest) > kIntegerGapTolerance) {
    const double a1[] = {a, b};
    const double b1[] = {a + b - c + 1.0};
    const double a2[] = {c - a, c - b};
    const double b2[] = {s + 1.0};
    const double first = gamma_ratio({c, s}, {c - a, c - b}) * hypergeom_series(a1, b1, y, ctl);
    const double second = std::pow(y, s) * gamma_ratio({c, -s}, {a, b}) *
                          hypergeom_series(a2, b2, y, ctl);
    return first + second;
  }
  // Integer m = c - a - b ≥ 1 (s > 0 is required by the callers).
  const long m = static_cast<long>(nearest);
  if (m < 1) throw domain_error("hypergeom_2f1: c - a - b must be positive near x = 1");
  const double am = a + static_cast<double>(m);
  const double bm = b + static_cast<double>(m);
  const double cc = a + b + static_cast<double>(m);

  double finite = 0.0;
  {
    double t = 1.0;
    for (long n = 0; n < m; ++n) {
      finite += t;
      const double nd = static_cast<double>(n);
      t *= (a + nd) * (b + nd) / ((nd + 1.0) * (1.0 - static_cast<double>(m) + nd)) * y;
    }
    finite *= gamma_ratio({static_cast<double>(m), cc}, {am, bm});
  }

  const double log_y = std::log(y);
  double tail = 0.0;
  double t = 1.0 / std::tgamma(static_cast<double>(m) + 1.0);  // (a+m)_n (b+m)_n / (n! (n+m)!)
  for (std::size_t n = 0; n < ctl.max_terms; ++n) {
    const double nd = static_cast<double>(n);
    const double bracket = log_y - digamma(nd + 1.0) - digamma(nd + static_cast<double>(m) + 1.0) +
                           digamma(am + nd) + digamma(bm + nd);
    const double contribution = t * bracket;
    tail += contribution;
    if (n > 0 && std::fabs(contribution) <= ctl.rel_tol * std::fabs(tail)) break;
    t *= (am + nd) * (bm + nd) / ((nd + 1.0) * (nd + static_cast<double>(m) + 1.0)) * y;
    if (t == 0.0) break;
    if (n + 1 == ctl.max_terms) throw convergence_error("hypergeom_2f1: connection series did not converge");
  }
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return finite - sign * std::pow(y, static_cast<double>(m)) * gamma_ratio({cc}, {a, b}) * tail;
}

}  // namespace detail

/// Gauss hypergeometric ₂F₁(a,b;c;x) on x ∈ (-1, 1].
///
/// Uses the power series for |x| ≤ 0.9, the (1 - x) connection formulas on
/// (0.9, 1 - 1e-8], and the Gauss summation above that. With `minus_one` set
/// the result is ₂F₁ - 1, computed without cancellation on the series branch.
inline double hypergeom_2f1(double a, double b, double c, double x, const SeriesControl& ctl = {},
                            bool minus_one = false) {
  ctl.validate();
  if (detail::is_nonpositive_integer(c)) throw domain_error("hypergeom_2f1: c is a nonpositive integer");
  if (!(x > -1.0 && x <= 1.0)) throw domain_error("hypergeom_2f1: x must lie in (-1, 1]");
  const double num[] = {a, b};
  const double den[] = {c};
  const double shift = minus_one ? 1.0 : 0.0;
  if (detail::is_nonpositive_integer(a) || detail::is_nonpositive_integer(b))
    return detail::hypergeom_series(num, den, x, ctl, minus_one);
  if (x < -0.9) {
    // Pfaff: (1 - x)^{-a} ₂F₁(a, c - b; c; x/(x - 1)).
    const double num2[] = {a, c - b};
    return std::pow(1.0 - x, -a) * detail::hypergeom_series(num2, den, x / (x - 1.0), ctl) - shift;
  }
  if (x <= 0.9) return detail::hypergeom_series(num, den, x, ctl, minus_one);
  if (x > kGaussEndpointThreshold) {
    if (minus_one && c > 0.0 && c - a > 0.0 && c - b > 0.0) {
      const double s = c - (a + b);
      if (!(s > 0.0)) throw domain_error("gauss_2f1_at_one: requires c - a - b > 0");
      return std::expm1(std::lgamma(c) + std::lgamma(s) - std::lgamma(c - a) - std::lgamma(c - b));
    }
    return gauss_2f1_at_one(a, b, c) - shift;
  }
  return detail::hyp2f1_near_one(a, b, c, x, ctl) - shift;
}

/// e^{-z} ₁F₁(a; b; z) for a, b > 0 and z ≥ 0, summed in log space so that
/// large z do not overflow.
inline double log_scaled_hypergeom_1f1(double a, double b, double z, const SeriesControl& ctl = {}) {
  if (!(a > 0.0 && b > 0.0)) throw domain_error("log_scaled_hypergeom_1f1: requires a, b > 0");
  if (!(z >= 0.0)) throw domain_error("log_scaled_hypergeom_1f1: requires z >= 0");
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  constexpr double kRescale = 1e280;
  for (std::size_t k = 0; k < ctl.max_terms; ++k) {
    const double kd = static_cast<double>(k);
    const double ratio = (a + kd) / ((b + kd) * (kd + 1.0)) * z;
    term *= ratio;
    sum += term;
    if (sum > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      log_scale += std::log(kRescale);
    }
    if (ratio < 1.0 && term <= ctl.rel_tol * sum) return log_scale + std::log(sum) - z;
    if (term == 0.0) return log_scale + std::log(sum) - z;
  }
  throw convergence_error("log_scaled_hypergeom_1f1: series did not converge");
}

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw domain_error("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline constexpr double kEulerGamma = std::numbers::egamma_v<double>;

}  // namespace chi2field
