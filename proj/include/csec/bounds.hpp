#pragma once

// Closed-form attack-progress evaluators. Names ending in `_bound` are upper
// bounds, `exact_*` and `displacement_finite` are exact values (or exact
// expectations), `*_moments` return expectation/variance bounds of the
// stochastic learners.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace csec::bounds {

/// (1 - x)^i evaluated in log space.
inline double pow1m(double x, double i) {
  if (i == 0.0) return 1.0;
  if (x == 1.0) return 0.0;
  return std::exp(i * std::log1p(-x));
}

/// 1 - (1 - x)^i without cancellation.
inline double one_minus_pow1m(double x, double i) {
  if (i == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return -std::expm1(i * std::log1p(-x));
}

/// Infinite-horizon learner: D_i <= ln(1 + i/n).
inline double bound_infinite(double i, double n) {
  if (i < 0.0 || n < 1.0) throw std::invalid_argument("bound_infinite: need i >= 0, n >= 1");
  return std::log1p(i / n);
}

/// Infinite-horizon learner under the optimal attack: D_i = sum_{k=1..i} 1/(n+k).
inline double exact_infinite(std::uint64_t i, std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("exact_infinite: need n >= 1");
  // Summed from the smallest term up.
  double s = 0.0;
  for (std::uint64_t k = i; k >= 1; --k) s += 1.0 / static_cast<double>(n + k);
  return s;
}

/// Attack iterations needed to reach displacement D against the infinite
/// horizon learner: ceil(n (e^D - 1)). Values within 1e-9 relative of an
/// integer are not rounded up.
inline std::uint64_t effort_inverse(double displacement, double n) {
  if (displacement < 0.0) throw std::invalid_argument("effort_inverse: displacement must be >= 0");
  if (n < 1.0) throw std::invalid_argument("effort_inverse: need n >= 1");
  const double v = n * std::expm1(displacement);
  const double nearest = std::round(v);
  if (std::abs(v - nearest) <= 1e-9 * std::max(1.0, v)) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(v));
}

/// Average-out learner (exact) and random-out learner (expectation): i/n.
inline double displacement_finite(double i, double n) {
  if (i < 0.0 || n < 1.0) throw std::invalid_argument("displacement_finite: need i >= 0, n >= 1");
  return i / n;
}

struct MixModel {
  double nu = 0.05;
  double alpha = 0.0;
  double n = 1000.0;
  double eps_second_moment = 1.0;

  void validate() const {
    if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("MixModel: nu must lie in (0, 1)");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("MixModel: alpha must lie in [0, 1)");
    if (!(n >= 2.0)) throw std::invalid_argument("MixModel: n must be >= 2");
    if (!(eps_second_moment >= 0.0 && eps_second_moment <= 1.0))
      throw std::invalid_argument("MixModel: E(eps^2) must lie in [0, 1]");
  }
};

/// Per-iteration constants of the limited-control and protected bounds.
struct BoundParams {
  double c = 1.0;
  double d = 1.0;
  double b = 1.0;
  double gamma = 0.0;
  double delta = 0.0;
  double rho = 0.0;
};

/// Constants for the protected learner; alpha = 0 gives the limited-control ones
/// except for delta and rho, which the two results define differently.
inline BoundParams protected_params(double i, const MixModel& m) {
  m.validate();
  const double nu = m.nu, a = m.alpha, n = m.n;
  BoundParams p;
  p.c = pow1m((1.0 - nu) * (1.0 - a) / n, i);
  p.d = pow1m((1.0 - nu) / n * (2.0 - 1.0 / n) * (1.0 - a), i);
  p.b = pow1m((1.0 - nu) / n, i);
  p.gamma = p.c - p.d;
  const double one_c = one_minus_pow1m((1.0 - nu) * (1.0 - a) / n, i);
  const double one_d = one_minus_pow1m((1.0 - nu) / n * (2.0 - 1.0 / n) * (1.0 - a), i);
  p.rho = a * one_c * one_d * (2.0 * nu * (1.0 - a) + a) /
          ((1.0 - 1.0 / (2.0 * n)) * (1.0 - nu) * (1.0 - nu) * (1.0 - a) * (1.0 - a));
  p.delta = one_d * (nu + (1.0 - nu) * m.eps_second_moment) / ((2.0 * n - 1.0) * (1.0 - nu) * (1.0 - a));
  return p;
}

inline BoundParams limited_params(double i, const MixModel& m) {
  MixModel m0 = m;
  m0.alpha = 0.0;
  m0.validate();
  const double nu = m0.nu, n = m0.n;
  BoundParams p;
  p.c = pow1m((1.0 - nu) / n, i);
  p.d = pow1m((1.0 - nu) / n * (2.0 - 1.0 / n), i);
  p.b = p.c;
  p.gamma = p.c - p.d;
  const double one_d = one_minus_pow1m((1.0 - nu) / n * (2.0 - 1.0 / n), i);
  // delta depends on i through d_i as well as on n.
  p.delta = (nu * nu + one_d) / ((2.0 * n - 1.0) * (1.0 - nu) * (1.0 - nu));
  p.rho = 0.0;
  return p;
}

struct LimitedMoments {
  double expectation = 0.0;
  double variance_bound = 0.0;
};

/// Limited-control learner (no false-positive protection) under the optimal attack.
inline LimitedMoments limited_moments(double i, const MixModel& m) {
  if (i < 0.0) throw std::invalid_argument("limited_moments: need i >= 0");
  const auto p = limited_params(i, m);
  const double ratio = m.nu / (1.0 - m.nu);
  return {one_minus_pow1m((1.0 - m.nu) / m.n, i) * ratio, p.gamma * ratio * ratio + p.delta};
}

struct ProtectedMoments {
  double expectation_upper = 0.0;
  double expectation_lower = 0.0;
  double variance_bound = 0.0;
};

/// Learner with false-positive cap alpha under the optimal attack.
inline ProtectedMoments protected_moments(double i, const MixModel& m) {
  if (i < 0.0) throw std::invalid_argument("protected_moments: need i >= 0");
  const auto p = protected_params(i, m);
  const double nu = m.nu, a = m.alpha;
  const double one_c = one_minus_pow1m((1.0 - nu) * (1.0 - a) / m.n, i);
  ProtectedMoments out;
  out.expectation_upper = one_c * (nu + a * (1.0 - nu)) / ((1.0 - nu) * (1.0 - a));
  out.expectation_lower = one_c * nu / (1.0 - nu);
  out.variance_bound = p.gamma * nu * nu / ((1.0 - a) * (1.0 - a) * (1.0 - nu) * (1.0 - nu)) + p.rho + p.delta;
  return out;
}

/// Asymptotic expectation nu/(1 - nu) of the limited-control learner.
inline double limited_asymptote(double nu) { return nu / (1.0 - nu); }

inline double protected_asymptote(double nu, double alpha) {
  return (nu + alpha * (1.0 - nu)) / ((1.0 - nu) * (1.0 - alpha));
}

/// Smallest traffic fraction whose asymptotic displacement reaches D: D/(1 + D).
inline double nu_crit(double displacement) {
  if (displacement < 0.0) throw std::invalid_argument("nu_crit: displacement must be >= 0");
  return displacement / (1.0 + displacement);
}

/// Tightly-packed Voronoi cells: cell radius over ball radius ~ (1/n)^(1/d).
/// The per-iteration displacement estimate is this value divided by n.
inline double voronoi_slope(double n, double d) {
  if (n < 1.0 || d < 1.0) throw std::invalid_argument("voronoi_slope: need n >= 1, d >= 1");
  if (std::isinf(d)) return 1.0;
  return std::pow(1.0 / n, 1.0 / d);
}

/// s_i for s_0 = 0, s_{k+1} = q s_k + p. At q = 1 this is p i.
inline double geometric_series_closed_form(double p, double q, std::uint64_t i) {
  if (q == 1.0) return p * static_cast<double>(i);
  const double qi = std::pow(q, static_cast<double>(i));
  return p * (1.0 - qi) / (1.0 - q);
}

}  // namespace csec::bounds
