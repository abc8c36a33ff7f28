#pragma once

// Brownian scaling limit of N * P_N and related Gaussian integrals.
//
//   A_a(t) = int_0^t exp(a B_s) ds,     m_a(t) = E 1/A_a(t),
//   g(c)   = m_{c sqrt 2}(1).
//
// Conditioning on the endpoint, E[1/A_2(t) | B_t = x] = phi(x) / t with
// phi(x) = x e^{-x} / sinh x = 2x / (e^{2x} - 1). Brownian scaling then gives
//
//   m_a(t) = (a^2/4) m_2(a^2 t / 4),   t m_2(t) = E phi(sqrt(t) Z),
//   g(c)   = E phi(c Z / sqrt 2),
//
// each a single Gaussian expectation.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fixlab/errors.hpp"
#include "fixlab/estimate.hpp"
#include "fixlab/quadrature.hpp"
#include "fixlab/rng.hpp"

namespace fixlab {

// 2x / (e^{2x} - 1), with phi(0) = 1. Finite for every finite x.
inline double phi(double x) noexcept {
  if (x == 0.0) return 1.0;
  if (x < 0.0) return 2.0 * x / std::expm1(2.0 * x);
  return -2.0 * x * std::exp(-2.0 * x) / std::expm1(-2.0 * x);
}

inline LimitValue m2(double t, const QuadratureSpec& quad = {}) {
  detail::require(t > 0.0, "m2 needs t > 0");
  const double root = std::sqrt(t);
  auto v = gated([&](const QuadratureSpec& q) {
    return gaussian_expectation([root](double z) { return phi(root * z); }, q) / t;
  }, quad);
  return v;
}

inline LimitValue m_alpha(double alpha, double t, const QuadratureSpec& quad = {}) {
  detail::require(alpha > 0.0, "m_alpha needs alpha > 0");
  detail::require(t > 0.0, "m_alpha needs t > 0");
  const double scale = alpha * alpha / 4.0;
  const LimitValue inner = m2(scale * t, quad);
  return {scale * inner.value, scale * inner.estimated_abs_error};
}

// Limit of N * P_N when delta * sqrt(N) -> c. g(0) = 1.
inline LimitValue g(double c, const QuadratureSpec& quad = {}) {
  detail::require(c >= 0.0, "g needs c >= 0");
  if (c == 0.0) return {1.0, 0.0};
  const double s = c / std::numbers::sqrt2;
  return gated([s](const QuadratureSpec& q) {
    return gaussian_expectation([s](double z) { return phi(s * z); }, q);
  }, quad);
}

// h(x) = x + 1 + (x - 1) e^{2x}; phi''(x) = e^{-x} h(x) / sinh(x)^3.
// Near 0 the closed form cancels to nothing (h ~ 2x^3/3), so the Taylor series
// sum_{m>=3} 2^{m-1} (m-2) x^m / m! is used there.
inline double convexity_h(double x) noexcept {
  if (std::abs(x) < 0.5) {
    double term = 2.0 * x * x * x / 3.0;  // m = 3: 2^{m-1} x^m / m!, times (m - 2) below
    double sum = 0.0;
    for (int m = 3; m < 30; ++m) {
      sum += (m - 2) * term;
      term *= 2.0 * x / (m + 1);
    }
    return sum;
  }
  return x + 1.0 + (x - 1.0) * std::exp(2.0 * x);
}

// Predictions for P_N at fixed delta with delta * sqrt(N) large.
struct BetterPrediction {
  double crude = 0.0;           // delta / sqrt(pi N)
  double refined = 0.0;         // g(delta sqrt N) / N
  double crude_scaled = 0.0;    // sqrt(pi N) * crude = delta
  double refined_scaled = 0.0;  // sqrt(pi N) * refined = g(delta sqrt N) sqrt(pi / N)
};

inline BetterPrediction better_prediction(std::size_t n, double delta, const QuadratureSpec& quad = {}) {
  detail::require(n >= 1, "prediction needs n >= 1");
  detail::require(delta >= 0.0, "prediction needs delta >= 0");
  const double nd = static_cast<double>(n);
  const double limit = g(delta * std::sqrt(nd), quad).value;
  const double root_pi_n = std::sqrt(std::numbers::pi * nd);
  return {delta / root_pi_n, limit / nd, delta, limit * std::sqrt(std::numbers::pi / nd)};
}

// E[1/A_2(M)^2 | B_M = x] in overflow-free form. With a = |x| and w = e^{-2a},
//   core = 4 (a^2 (1-w) + M (1+w)(a - tanh a)) / (M^2 (1-w)^3),
// and the conditional moment is core for x <= 0, core * e^{-4x} for x > 0.
inline double conditional_inverse_square(double x, double M) {
  detail::require(M > 0.0, "needs M > 0");
  const double a = std::abs(x);
  if (a == 0.0) return 1.0 / (M * M) + 1.0 / (3.0 * M);
  const double one_minus_w = -std::expm1(-2.0 * a);
  const double one_plus_w = 2.0 - one_minus_w;
  double a_minus_tanh;
  if (a < 0.05) {
    const double a2 = a * a;
    a_minus_tanh = a * a2 * (1.0 / 3.0 + a2 * (-2.0 / 15.0 + a2 * (17.0 / 315.0 + a2 * (-62.0 / 2835.0))));
  } else {
    a_minus_tanh = a - std::tanh(a);
  }
  const double core = 4.0 * (a * a * one_minus_w + M * one_plus_w * a_minus_tanh) /
                      (M * M * one_minus_w * one_minus_w * one_minus_w);
  return x <= 0.0 ? core : core * std::exp(-4.0 * x);
}

// E Y_M with Y_M = B_M^- / int_0^M exp(2 B_s) ds. Conditioning on B_M = x <= 0,
// the integrand is (-x) phi(x) / M; with x = sqrt(M) z, z < 0.
inline LimitValue y_first_moment(double M, const QuadratureSpec& quad = {}) {
  detail::require(M > 0.0, "y_first_moment needs M > 0");
  const double root = std::sqrt(M);
  return gated([&](const QuadratureSpec& q) {
    return gaussian_expectation([&](double z) {
      const double x = root * z;
      return -x * phi(x) / M;
    }, q, HalfLine::negative);
  }, quad);
}

// E Y_M^2 = E[(B_M^-)^2 E[1/A^2 | B_M]].
inline LimitValue y_second_moment(double M, const QuadratureSpec& quad = {}) {
  detail::require(M > 0.0, "y_second_moment needs M > 0");
  const double root = std::sqrt(M);
  return gated([&](const QuadratureSpec& q) {
    return gaussian_expectation([&](double z) {
      const double x = root * z;
      return x * x * conditional_inverse_square(x, M);
    }, q, HalfLine::negative);
  }, quad);
}

// Large-M asymptote of E Y_M^2: 4 sqrt(2/pi) sqrt(M).
inline double y_second_moment_asymptote(double M) {
  return 4.0 * std::sqrt(2.0 / std::numbers::pi) * std::sqrt(M);
}

// Monte Carlo over Brownian paths: the path is sampled on `fine_steps` equal
// increments of [0, 1] and int_0^1 exp(sqrt(2) c B_s) ds is approximated by
// the trapezoid rule on every `stride`-th grid point. Path p always comes
// from Stream(seed, brownian, p), so different strides at the same seed see
// the same paths.
inline Estimate brownian_mc_g_subsampled(double c, std::uint64_t paths, std::uint64_t fine_steps,
                                         std::uint64_t stride, std::uint64_t seed,
                                         unsigned jobs = default_jobs()) {
  detail::require(c >= 0.0, "c must be nonnegative");
  detail::require(paths >= 2, "need at least 2 paths");
  detail::require(fine_steps >= 1, "need at least 1 step");
  detail::require(stride >= 1 && fine_steps % stride == 0, "stride must divide the step count");
  const double a = std::numbers::sqrt2 * c;
  const double dt = 1.0 / static_cast<double>(fine_steps);
  const double sd = std::sqrt(dt);
  const double h = dt * static_cast<double>(stride);
  const RunningStats stats = run_replicates(paths, jobs, [&] {
    return [=](std::uint64_t p) {
      Stream rng(seed, StreamDomain::brownian, p);
      double b = 0.0;
      double sum = 0.5;  // endpoint s = 0
      double last = 1.0;
      for (std::uint64_t i = 1; i <= fine_steps; ++i) {
        b += sd * rng.normal();
        if (i % stride == 0) {
          last = std::exp(a * b);
          sum += last;
        }
      }
      sum -= 0.5 * last;
      return 1.0 / (h * sum);
    };
  });
  return Estimate{stats.mean, stats.std_error(), paths, seed};
}

inline Estimate brownian_mc_g(double c, std::uint64_t paths, std::uint64_t steps, std::uint64_t seed,
                              unsigned jobs = default_jobs()) {
  return brownian_mc_g_subsampled(c, paths, steps, 1, seed, jobs);
}

}  // namespace fixlab
