#pragma once

// Truncated power series in omega for the normalized autocorrelation and
// autocovariance of s = 1/(w + w0).

#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "coefficients.hpp"
#include "errors.hpp"
#include "numeric.hpp"

namespace invgp {

/// omega = |w0| / sqrt(R_ww(0)) >= 0. Only the modulus of w0 enters.
class OmegaRatio {
 public:
  OmegaRatio() = default;
  explicit OmegaRatio(double value) : value_(value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw DomainError("OmegaRatio: omega must be finite and >= 0");
  }

  static OmegaRatio from_mean(double abs_w0, double R_ww0) {
    if (!(R_ww0 > 0.0)) throw DomainError("OmegaRatio: R_ww(0) must be > 0");
    return OmegaRatio(std::abs(abs_w0) / std::sqrt(R_ww0));
  }

  double value() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

struct SeriesEvaluation {
  cplx value;
  int truncation_order = 0;
  double last_term_magnitude = 0.0;
  double tail_bound = 0.0;     // majorant sum from order N upward; may be +inf
  double tail_estimate = 0.0;  // |term_{N+2}| + |term_{N+4}|
  bool flagged = false;        // tail_estimate > kTailFlagRatio * |value|
};

inline constexpr double kTailFlagRatio = 1e-3;

/// [(1 - e^{-omega^2}) / omega]^2, with the limit 0 at omega = 0.
inline double asymptotic_floor(OmegaRatio omega) {
  const double w = omega.value();
  if (w == 0.0) return 0.0;
  const double m = -std::expm1(-w * w) / w;
  return m * m;
}

/// Sum over even n <= N of omega_limit(n) omega^n / n!.
inline double asymptotic_floor_partial(OmegaRatio omega, int N) {
  double sum = 0.0;
  for (int n = 0; n <= N; n += 2) sum += omega_limit(n) * std::pow(omega.value(), n) / specfun::factorial(n);
  return sum;
}

namespace detail {

inline void require_even_order(int N) {
  if (N < 0 || N % 2 != 0) throw DomainError("series: truncation order must be even and >= 0");
}

// log of the majorant for order n; n = 0 continues the formula through
// n Gamma(n/2) = 2 Gamma(n/2 + 1), i.e. pi / (1 - |r|).
inline double log_majorant(int n, double abs_r) {
  if (n == 0) return std::log(std::numbers::pi) - std::log1p(-abs_r);
  return log_omega_bound(n, abs_r);
}

// Sum of majorant * omega^n / n! over even n >= N, in log space.
inline double majorant_tail(double abs_r, double omega, int N) {
  if (omega == 0.0) return N == 0 ? std::exp(log_majorant(0, abs_r)) : 0.0;
  const double log_w = std::log(omega);
  double log_sum = -std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  for (int n = N; n <= N + 4000; n += 2) {
    const double lt = log_majorant(n, abs_r) + n * log_w - specfun::log_factorial(n);
    const double hi = std::max(log_sum, lt);
    log_sum = hi + std::log(std::exp(log_sum - hi) + std::exp(lt - hi));
    if (lt < prev && lt < log_sum + std::log(1e-17)) break;
    prev = lt;
  }
  return std::exp(log_sum);
}

}  // namespace detail

/// Sums coeffs[i] omega^{2i} / (2i)! for 2i <= N. coeffs must hold orders
/// 0, 2, ..., N + 4 (the last two feed the tail estimate); omega = 0 needs only order 0.
inline SeriesEvaluation sum_series(std::span<const cplx> coeffs, double abs_r, OmegaRatio omega, int N) {
  detail::require_even_order(N);
  if (!(abs_r >= 0.0) || !(abs_r < 1.0)) throw DomainError("series: |r| must lie in [0, 1)");
  const double w = omega.value();
  const std::size_t needed = w == 0.0 ? 1 : static_cast<std::size_t>(N / 2 + 3);
  if (coeffs.size() < needed) throw DomainError("series: coefficient list shorter than N + 4");
  SeriesEvaluation out;
  out.truncation_order = N;
  auto term = [&](int n) { return coeffs[n / 2] * (std::pow(w, n) / specfun::factorial(n)); };
  for (int n = 0; n <= N; n += 2) {
    if (n > 0 && w == 0.0) break;
    out.value += term(n);
  }
  out.last_term_magnitude = (N > 0 && w == 0.0) ? 0.0 : std::abs(term(N));
  out.tail_estimate = w == 0.0 ? 0.0 : std::abs(term(N + 2)) + std::abs(term(N + 4));
  out.tail_bound = detail::majorant_tail(abs_r, w, N);
  out.flagged = out.tail_estimate > kTailFlagRatio * std::abs(out.value);
  return out;
}

namespace detail {

inline SeriesEvaluation series_at(cplx r, OmegaRatio omega, int N, bool centered) {
  require_even_order(N);
  if (!(std::abs(r) < 1.0)) throw DomainError("series: |r| must be < 1");
  const int top = omega.value() == 0.0 ? 0 : N + 4;
  std::vector<cplx> coeffs;
  for (int n = 0; n <= top; n += 2) {
    const auto v = omega_n_evaluate(n, r);
    coeffs.push_back(centered ? v.centered : v.value);
  }
  return sum_series(coeffs, std::abs(r), omega, N);
}

}  // namespace detail

/// Normalized autocorrelation: sum over even n <= N of Omega_n omega^n / n!.
inline SeriesEvaluation autocorrelation(cplx r, OmegaRatio omega, int N) {
  return detail::series_at(r, omega, N, false);
}

/// Normalized autocovariance from the centered coefficients Omega'_n.
inline SeriesEvaluation autocovariance(cplx r, OmegaRatio omega, int N) {
  return detail::series_at(r, omega, N, true);
}

/// Normalized value divided by R_ww(0).
inline cplx denormalize(cplx normalized_value, double R_ww0) {
  if (!(R_ww0 > 0.0)) throw DomainError("denormalize: R_ww(0) must be > 0");
  return normalized_value / R_ww0;
}

}  // namespace invgp
