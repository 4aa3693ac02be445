#pragma once

// Special functions needed by the autocorrelation expansion and the
// integrability bounds: regularized Gauss 2F1 with integer parameters, the
// zero-balanced 3F2(1,1,1;3/2,3/2;z), the modified Struve function L0, and a
// few exact Gamma values. Everything is built from elementary functions.

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace invgp::specfun {

struct EvalAccuracy {
  double rel_tol = 1e-12;
  long max_terms = 1'000'000;

  void validate() const {
    if (!(rel_tol > 0.0)) throw ConfigError("EvalAccuracy: rel_tol must be > 0");
    if (max_terms < 1) throw ConfigError("EvalAccuracy: max_terms must be >= 1");
  }
};

/// A series value together with the sum of absolute values of its terms. The
/// ratio abs_sum / |value| is the cancellation factor of the evaluation.
template <class Real>
struct SeriesValue {
  Real value{};
  Real abs_sum{};
};

/// Value plus a certified bound on the omitted tail.
struct CertifiedValue {
  double value = 0.0;
  double tail_bound = 0.0;
  long terms = 0;
};

inline double factorial(int n) {
  if (n < 0) throw DomainError("factorial of a negative integer");
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double log_factorial(int n) {
  if (n < 0) throw DomainError("factorial of a negative integer");
  double s = 0.0;
  for (int k = 2; k <= n; ++k) s += std::log(static_cast<double>(k));
  return s;
}

template <class Real>
Real factorial_as(int n) {
  Real f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

/// Gamma(twice_x / 2) for a positive integer twice_x, by recurrence from
/// Gamma(1) = 1 and Gamma(1/2) = sqrt(pi).
inline double gamma_half_integer(int twice_x) {
  if (twice_x <= 0) throw DomainError("gamma_half_integer: argument must be positive");
  double g = (twice_x % 2 == 0) ? 1.0 : std::sqrt(std::numbers::pi);
  for (int t = (twice_x % 2 == 0) ? 2 : 1; t < twice_x; t += 2) g *= 0.5 * t;
  return g;
}

inline double log_gamma_half_integer(int twice_x) {
  if (twice_x <= 0) throw DomainError("log_gamma_half_integer: argument must be positive");
  double g = (twice_x % 2 == 0) ? 0.0 : 0.5 * std::log(std::numbers::pi);
  for (int t = (twice_x % 2 == 0) ? 2 : 1; t < twice_x; t += 2) g += std::log(0.5 * t);
  return g;
}

/// Harmonic number H_n = 1 + 1/2 + ... + 1/n (H_0 = 0).
template <class Real>
Real harmonic(int n) {
  Real h = 0;
  for (int k = 1; k <= n; ++k) h += Real(1) / Real(k);
  return h;
}

struct MathConstants {
  double zeta3;    // Apery's constant
  double catalan;  // Catalan's constant G
  double pi;
};

constexpr MathConstants math_constants() {
  return {1.2020569031595942853997381615114, 0.91596559417721901505460351493238,
          std::numbers::pi};
}

namespace detail {

template <class Real>
Real pochhammer(int a, int m) {
  Real p = 1;
  for (int i = 0; i < m; ++i) p *= Real(a + i);
  return p;
}

// Scaled tolerance for a working precision: never ask for more than the type offers.
template <class Real>
Real series_tolerance(double rel_tol) {
  Real eps = machine_epsilon<Real>();
  Real tol = Real(rel_tol);
  return tol < eps ? eps : tol;
}

// Direct summation of sum_{m >= m0} (a)_m (b)_m / (Gamma(c+m) m!) z^m divided by z^m0.
template <class Real>
SeriesValue<Real> direct_series_scaled(int a, int b, int c, const Real& z, const Real& tol,
                                       long max_terms, bool drop_leading) {
  using std::abs;
  const int m0 = std::max(0, 1 - c);
  const bool terminating = (b <= 0) || (a <= 0);
  // Terms beyond m = stop vanish because a Pochhammer factor hits zero.
  int stop = 0;
  if (terminating) {
    stop = (a <= 0 && b <= 0) ? std::min(-a, -b) : (a <= 0 ? -a : -b);
    if (m0 > stop) return {Real(0), Real(0)};
  }

  // Leading term: (a)_m0 (b)_m0 / ((c + m0 - 1)! m0!), with c + m0 = 1 when c <= 0.
  Real t = pochhammer<Real>(a, m0) * pochhammer<Real>(b, m0);
  if (c >= 1) {
    t /= factorial_as<Real>(c - 1);
  } else {
    t /= factorial_as<Real>(m0);
  }
  Real sum = drop_leading ? Real(0) : t;
  Real abs_sum = abs(sum);
  for (long m = m0; ; ++m) {
    if (terminating && m >= stop) break;
    const Real ratio = Real(a + m) * Real(b + m) / (Real(c + m) * Real(m + 1));
    t *= ratio * z;
    sum += t;
    abs_sum += abs(t);
    if (!terminating) {
      const Real q = abs(ratio * z) > z ? abs(ratio * z) : z;
      if (q < 1 && m > m0 + 1) {
        const Real tail = abs(t) * q / (1 - q);
        if (tail <= tol * abs(sum)) break;
      }
      if (m - m0 > max_terms) {
        throw AccuracyError("hypergeometric 2F1 series did not converge within max_terms",
                            static_cast<double>(sum), static_cast<double>(abs(t)));
      }
    }
  }
  return {sum, abs_sum};
}

// Regularized 2F1(A, B; A+B+m; z) for positive integers A, B and integer m >= 0,
// expanded around z = 1 (logarithmic connection formulas). Requires 1 - z <= 1/2.
template <class Real>
SeriesValue<Real> log_connection(int A, int B, int m, const Real& z, const Real& tol,
                                 long max_terms) {
  using std::abs;
  using std::log;
  const Real w = 1 - z;
  const Real log_w = log(w);
  Real sum = 0;
  Real abs_sum = 0;
  if (m == 0) {
    // F~ = 1/(Gamma(A)Gamma(B)) sum (A)_n (B)_n/(n!)^2 [2 psi(n+1) - psi(A+n) - psi(B+n) - ln w] w^n
    const Real pref = Real(1) / (factorial_as<Real>(A - 1) * factorial_as<Real>(B - 1));
    Real coef = 1;  // (A)_n (B)_n / (n!)^2 * w^n
    Real h_n = 0, h_a = harmonic<Real>(A - 1), h_b = harmonic<Real>(B - 1);
    int small_run = 0;
    for (long n = 0;; ++n) {
      const Real t = pref * coef * (2 * h_n - h_a - h_b - log_w);
      sum += t;
      abs_sum += abs(t);
      if (abs(t) <= tol * abs(sum) * (1 - w)) {
        if (++small_run >= 2) break;
      } else {
        small_run = 0;
      }
      if (n > max_terms) {
        throw AccuracyError("2F1 log-connection series did not converge",
                            static_cast<double>(sum), static_cast<double>(abs(t)));
      }
      coef *= Real(A + n) * Real(B + n) / (Real(n + 1) * Real(n + 1)) * w;
      h_n += Real(1) / Real(n + 1);
      h_a += Real(1) / Real(A + n);
      h_b += Real(1) / Real(B + n);
    }
    return {sum, abs_sum};
  }

  // Finite part: Gamma(m)/(Gamma(A+m)Gamma(B+m)) sum_{n<m} (A)_n (B)_n/(n! (1-m)_n) w^n
  {
    const Real pref = factorial_as<Real>(m - 1) /
                      (factorial_as<Real>(A + m - 1) * factorial_as<Real>(B + m - 1));
    Real coef = 1;
    for (int n = 0; n < m; ++n) {
      const Real t = pref * coef;
      sum += t;
      abs_sum += abs(t);
      coef *= Real(A + n) * Real(B + n) / (Real(n + 1) * Real(1 - m + n)) * w;
    }
  }
  // Logarithmic part: -(z-1)^m/(Gamma(A)Gamma(B)) sum (A+m)_n (B+m)_n/(n!(n+m)!) w^n [...]
  {
    const Real sign = (m % 2 == 0) ? Real(1) : Real(-1);  // (z-1)^m = (-1)^m w^m
    const Real pref = -sign * ipow(w, m) /
                      (factorial_as<Real>(A - 1) * factorial_as<Real>(B - 1));
    Real coef = Real(1) / factorial_as<Real>(m);
    Real h_n = 0;
    Real h_nm = harmonic<Real>(m);
    Real h_a = harmonic<Real>(A + m - 1);
    Real h_b = harmonic<Real>(B + m - 1);
    int small_run = 0;
    for (long n = 0;; ++n) {
      const Real t = pref * coef * (log_w - h_n - h_nm + h_a + h_b);
      sum += t;
      abs_sum += abs(t);
      if (abs(t) <= tol * abs(sum) * (1 - w)) {
        if (++small_run >= 2) break;
      } else {
        small_run = 0;
      }
      if (n > max_terms) {
        throw AccuracyError("2F1 log-connection series did not converge",
                            static_cast<double>(sum), static_cast<double>(abs(t)));
      }
      coef *= Real(A + m + n) * Real(B + m + n) / (Real(n + 1) * Real(n + m + 1)) * w;
      h_n += Real(1) / Real(n + 1);
      h_nm += Real(1) / Real(n + m + 1);
      h_a += Real(1) / Real(A + m + n);
      h_b += Real(1) / Real(B + m + n);
    }
  }
  return {sum, abs_sum};
}

}  // namespace detail

/// Regularized Gauss hypergeometric function 2F1(a,b;c;z)/Gamma(c) for integer
/// parameters, divided by z^m0 with m0 = max(0, 1 - c) (the power carried by the
/// first non-vanishing term when c <= 0). The scaling keeps tiny z from
/// underflowing when the caller multiplies the result by a compensating power.
///
/// With drop_leading set (only meaningful for c = 1), the constant leading term
/// 1 is excluded, i.e. the result is 2F1 - 1.
template <class Real>
SeriesValue<Real> hyp2f1_regularized_scaled(int a, int b, int c, const Real& z,
                                            const EvalAccuracy& acc = {},
                                            bool drop_leading = false) {
  if (!(z >= 0) || !(z < 1)) throw DomainError("gauss_2f1_regularized: z must lie in [0, 1)");
  const Real tol = detail::series_tolerance<Real>(acc.rel_tol);
  const bool direct_terminates = (a <= 0) || (b <= 0);
  const bool euler_terminates = (c - a <= 0) || (c - b <= 0);
  if (drop_leading && c != 1) throw DomainError("drop_leading requires c = 1");

  if (z <= Real(0.5) || (direct_terminates && !euler_terminates)) {
    return detail::direct_series_scaled<Real>(a, b, c, z, tol, acc.max_terms, drop_leading);
  }

  SeriesValue<Real> out;
  if (euler_terminates) {
    // Euler transformation: F~(a,b;c;z) = (1-z)^(c-a-b) F~(c-a, c-b; c; z).
    const Real pref = ipow(Real(1 - z), c - a - b);
    const auto inner = detail::direct_series_scaled<Real>(c - a, c - b, c, z, tol,
                                                          acc.max_terms, false);
    out = {pref * inner.value, pref * inner.abs_sum};
  } else {
    // Both forms non-terminating: a, b, c-a, c-b >= 1, hence c >= 2 and m0 = 0.
    int A = a, B = b;
    Real pref = 1;
    if (c - a - b < 0) {
      pref = ipow(Real(1 - z), c - a - b);
      A = c - a;
      B = c - b;
    }
    const auto conn = detail::log_connection<Real>(A, B, c - A - B, z, tol, acc.max_terms);
    out = {pref * conn.value, pref * conn.abs_sum};
  }
  if (drop_leading) {
    out.value -= 1;
    out.abs_sum += 1;
  }
  return out;
}

/// Regularized 2F1(a,b;c;z)/Gamma(c) for integer parameters and z in [0, 1).
inline double gauss_2f1_regularized(int a, int b, int c, double z, const EvalAccuracy& acc = {}) {
  acc.validate();
  const auto s = hyp2f1_regularized_scaled<double>(a, b, c, z, acc);
  const int m0 = std::max(0, 1 - c);
  return s.value * ipow(z, m0);
}

namespace detail {

// 3F2(1,1,1; 3/2,3/2; z) = z^{-1/2} int_0^S h(1 - (1-z) cosh^2 s) ds, S = asinh(sqrt(z/(1-z))),
// h(x) = arcsin(sqrt x)/sqrt x. The integrand is analytic within pi/2 of the real axis.
inline CertifiedValue hyp3f2_zero_balanced_integral(double z, const EvalAccuracy& acc) {
  const double q = 1.0 - z;
  const double span = std::asinh(std::sqrt(z / q));
  auto h = [](double x) {
    if (x <= 0.0) return 1.0;
    const double sx = std::sqrt(x);
    return std::asin(sx) / sx;
  };
  auto integrate = [&](int panels, int nodes) {
    std::vector<double> x, w;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
      gauss_legendre(nodes, span * p / panels, span * (p + 1) / panels, x, w);
      for (int i = 0; i < nodes; ++i) {
        const double c = std::cosh(x[i]);
        sum += w[i] * h(1.0 - q * c * c);
      }
    }
    return sum / std::sqrt(z);
  };
  double err = 0.0, value = 0.0;
  for (int panels = static_cast<int>(std::ceil(span)); panels <= 4096; panels *= 2) {
    value = integrate(panels, 24);
    err = std::abs(value - integrate(panels, 16));
    if (err <= acc.rel_tol * value) return {value, err, static_cast<long>(panels) * 40};
  }
  throw AccuracyError("hyp3f2_zero_balanced: quadrature did not reach tolerance", value, err);
}

}  // namespace detail

/// 3F2(1,1,1; 3/2,3/2; z) = sum_k (k!)^2 z^k / ((3/2)_k)^2 with a geometric tail bound.
inline CertifiedValue hyp3f2_zero_balanced_certified(double z, const EvalAccuracy& acc = {}) {
  acc.validate();
  if (!(z >= 0.0) || !(z < 1.0)) {
    throw DomainError("hyp3f2_zero_balanced: z must lie in [0, 1)");
  }
  if (z > 0.9) return detail::hyp3f2_zero_balanced_integral(z, acc);
  double t = 1.0;
  double sum = 1.0;
  for (long k = 0; k < acc.max_terms; ++k) {
    const double kk = static_cast<double>(k);
    // Term ratio (k+1)^2/(k+3/2)^2 z increases towards z, so z bounds the tail ratio.
    t *= (kk + 1.0) * (kk + 1.0) / ((kk + 1.5) * (kk + 1.5)) * z;
    sum += t;
    const double tail = t * z / (1.0 - z);
    if (tail <= acc.rel_tol * sum) return {sum, tail, k + 2};
  }
  throw AccuracyError("hyp3f2_zero_balanced: series did not converge within max_terms", sum,
                      t * z / (1.0 - z));
}

inline double hyp3f2_zero_balanced(double z, const EvalAccuracy& acc = {}) {
  return hyp3f2_zero_balanced_certified(z, acc).value;
}

/// Modified Struve function of order zero, L0(x) = sum (x/2)^(2k+1) / Gamma(k+3/2)^2.
inline double struve_l0(double x, const EvalAccuracy& acc = {}) {
  acc.validate();
  if (!(x >= 0.0)) throw DomainError("struve_l0: x must be >= 0");
  if (x == 0.0) return 0.0;
  const double h = 0.5 * x;
  double t = h * 4.0 / std::numbers::pi;  // Gamma(3/2)^2 = pi/4
  double sum = t;
  for (long k = 0; k < acc.max_terms; ++k) {
    const double d = static_cast<double>(k) + 1.5;
    const double ratio = h * h / (d * d);
    t *= ratio;
    sum += t;
    if (ratio < 1.0 && t * ratio / (1.0 - ratio) <= acc.rel_tol * sum) return sum;
  }
  throw AccuracyError("struve_l0: series did not converge within max_terms", sum, t);
}

}  // namespace invgp::specfun
