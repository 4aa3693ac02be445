#pragma once

// Series coefficients Omega_n(tau) of the normalized autocorrelation expansion,
// their large-lag limits, centered versions and magnitude majorant.

#include <cmath>
#include <complex>
#include <ostream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"
#include "kernels.hpp"
#include "numeric.hpp"
#include "specfun.hpp"

namespace invgp {

/// lim_{|r| -> 0} Omega_n = 2 (-1)^{n/2+1} (2^{n/2} - 1) n! / (n/2 + 1)!, exact
/// integer arithmetic rounded once to double. Odd n gives 0.
inline double omega_limit(int n) {
  if (n < 0) throw DomainError("omega_limit: order must be >= 0");
  if (n % 2 != 0) return 0.0;
  using boost::multiprecision::cpp_int;
  const int h = n / 2;
  cpp_int ratio = 1;  // n! / (h+1)!
  for (int k = h + 2; k <= n; ++k) ratio *= k;
  cpp_int value = 2 * ((cpp_int(1) << h) - 1) * ratio;
  if (h % 2 == 0) value = -value;
  return value.convert_to<double>();
}

/// log of the coefficient majorant 2^{3n/2-1} n pi Gamma(n/2) (1-|r|)^{-1-n/2}; n >= 2 even.
inline double log_omega_bound(int n, double abs_r) {
  if (n < 2 || n % 2 != 0) throw DomainError("omega_bound: order must be even and >= 2");
  if (!(abs_r >= 0.0) || !(abs_r < 1.0)) throw DomainError("omega_bound: |r| must lie in [0, 1)");
  const int h = n / 2;
  return (3.0 * h - 1.0) * std::log(2.0) + std::log(static_cast<double>(n) * std::numbers::pi) +
         specfun::log_factorial(h - 1) - (1.0 + h) * std::log1p(-abs_r);
}

inline double omega_bound(int n, double abs_r) { return std::exp(log_omega_bound(n, abs_r)); }

/// Literal real-argument closed forms for n = 0, 2, 4, 6. They cancel
/// catastrophically as r -> 0, so |r| < 1e-4 is rejected.
inline double omega_n_closed_real(int n, double r) {
  if (n != 0 && n != 2 && n != 4 && n != 6) {
    throw UnsupportedOrderError("omega_n_closed_real: closed forms exist for n = 0, 2, 4, 6 only");
  }
  if (!(std::abs(r) < 1.0)) throw DomainError("omega_n_closed_real: |r| must be < 1");
  if (std::abs(r) < 1e-4) throw DomainError("omega_n_closed_real: |r| below 1e-4 loses all digits");
  const double lg = std::log1p(-r * r);
  const double q = 1.0 + r;
  switch (n) {
    case 0:
      return -lg / r;
    case 2:
      return 4.0 / q + 2.0 * lg / (r * r);
    case 4:
      return -12.0 / r - 24.0 / (q * q) - 12.0 * lg / (r * r * r);
    default:
      return 120.0 / (r * r) + 320.0 / (q * q * q) + 80.0 / (q * q) + 80.0 / q +
             120.0 * lg / (r * r * r * r);
  }
}

/// Complex-argument closed forms for n = 0, 2.
inline cplx omega_n_closed_complex(int n, cplx r) {
  if (n != 0 && n != 2) throw UnsupportedOrderError("omega_n_closed_complex: closed forms exist for n = 0, 2 only");
  if (!(std::abs(r) < 1.0)) throw DomainError("omega_n_closed_complex: |r| must be < 1");
  if (std::abs(r) < 1e-4) throw DomainError("omega_n_closed_complex: |r| below 1e-4 loses all digits");
  const double z = std::norm(r);
  if (n == 0) return -std::log1p(-z) / r;
  return 2.0 * (1.0 - 2.0 * std::conj(r) + std::conj(r) / r) / (1.0 - z) + 2.0 * std::log1p(-z) / (r * r);
}

struct CoefficientOptions {
  double rel_tol = 1e-13;  // against max(|Omega_n|, |omega_limit(n)|)
};

/// Omega_n and Omega'_n = Omega_n - omega_limit(n) from one evaluation.
struct CoefficientValue {
  cplx value;
  cplx centered;
  double error_estimate = 0.0;
  int digits = 0;  // decimal digits of the working precision that certified the value
};

namespace detail {

template <class Real>
struct OmegaParts {
  Real re{}, im{}, re_centered{}, im_centered{}, abs_sum{};
};

// The double sum over (k, j) grouped by p = 2j - k + 1. The regularized 2F1 with c = p + 1 <= 0
// starts at z^{-p}; z^{-p} (r*)^p = r^{-p}, so every term is
// coef * S * |r|^{|p|} e^{-i p phi} with S the z^{m0}-scaled 2F1.
template <class Real>
OmegaParts<Real> omega_parts(int n, double r_re, double r_im) {
  using std::abs;
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const int h = n / 2;
  const Real x = r_re, y = r_im;
  const Real z = x * x + y * y;
  const Real mag = sqrt(z);
  const bool real_axis = (r_im == 0.0);
  const bool negative_axis = real_axis && r_re < 0.0;
  const Real phi = real_axis ? Real(0) : Real(atan2(y, x));

  specfun::EvalAccuracy acc;
  acc.rel_tol = 1e-300;  // clamped to the working epsilon
  acc.max_terms = 10'000'000;

  std::vector<Real> fact(n + 1);
  fact[0] = 1;
  for (int i = 1; i <= n; ++i) fact[i] = fact[i - 1] * i;

  const int p_min = 1 - n;
  const int p_max = h + 1;
  std::vector<Real> group(p_max - p_min + 1), group_c(p_max - p_min + 1), group_abs(p_max - p_min + 1);
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j <= std::min(k, h); ++j) {
      const int p = 2 * j - k + 1;
      const int a = 1 + j, b = 1 + j - k + h, c = 2 + 2 * j - k;
      Real coef = fact[n] / (fact[h - j] * fact[k - j]);
      if (k % 2 != 0) coef = -coef;
      const std::size_t g = static_cast<std::size_t>(p - p_min);
      if (p == 0) {
        const auto s = specfun::hyp2f1_regularized_scaled<Real>(a, b, c, z, acc, true);
        group[g] += coef * (s.value + 1);
        group_c[g] += coef * s.value;
        group_abs[g] += abs(coef) * (s.abs_sum + 1);
      } else {
        const auto s = specfun::hyp2f1_regularized_scaled<Real>(a, b, c, z, acc, false);
        group[g] += coef * s.value;
        group_c[g] += coef * s.value;
        group_abs[g] += abs(coef) * s.abs_sum;
      }
    }
  }

  OmegaParts<Real> out;
  for (int p = p_min; p <= p_max; ++p) {
    const std::size_t g = static_cast<std::size_t>(p - p_min);
    const Real radial = ipow(mag, std::abs(p));
    Real cs, sn;
    if (real_axis) {
      cs = (negative_axis && (std::abs(p) % 2 != 0)) ? Real(-1) : Real(1);
      sn = 0;
    } else {
      cs = cos(Real(p) * phi);
      sn = -sin(Real(p) * phi);
    }
    out.re += group[g] * radial * cs;
    out.im += group[g] * radial * sn;
    out.re_centered += group_c[g] * radial * cs;
    out.im_centered += group_c[g] * radial * sn;
    out.abs_sum += group_abs[g] * radial;
  }
  if (h % 2 != 0) {
    out.re = -out.re;
    out.im = -out.im;
    out.re_centered = -out.re_centered;
    out.im_centered = -out.im_centered;
  }
  return out;
}

template <class Real>
bool try_precision(int n, cplx r, double rel_tol, CoefficientValue& out, int digits) {
  const auto parts = omega_parts<Real>(n, r.real(), r.imag());
  const cplx v(static_cast<double>(parts.re), static_cast<double>(parts.im));
  const cplx vc(static_cast<double>(parts.re_centered), static_cast<double>(parts.im_centered));
  const double err = static_cast<double>(machine_epsilon<Real>() * Real(n + 16) * parts.abs_sum);
  out = {v, vc, err, digits};
  const double scale = std::max(std::abs(v), std::abs(omega_limit(n)));
  return err <= rel_tol * scale;
}

}  // namespace detail

/// Omega_n(r) and Omega'_n(r), escalating the working precision until the
/// rounding estimate eps * sum|terms| meets the tolerance.
inline CoefficientValue omega_n_evaluate(int n, cplx r, const CoefficientOptions& opts = {}) {
  if (n < 0) throw DomainError("omega_n: order must be >= 0");
  if (!(std::abs(r) < 1.0)) throw DomainError("omega_n: |r| must be < 1");
  if (!(opts.rel_tol > 0.0)) throw ConfigError("CoefficientOptions: rel_tol must be > 0");
  if (n % 2 != 0) return {cplx(0.0), cplx(0.0), 0.0, 0};
  CoefficientValue out;
  if (detail::try_precision<double>(n, r, opts.rel_tol, out, 15)) return out;
  if (detail::try_precision<real50>(n, r, opts.rel_tol, out, 50)) return out;
  if (detail::try_precision<real100>(n, r, opts.rel_tol, out, 100)) return out;
  if (detail::try_precision<real200>(n, r, opts.rel_tol, out, 200)) return out;
  throw AccuracyError("omega_n: cancellation exceeds 200-digit arithmetic", out.value.real(),
                      out.error_estimate);
}

inline cplx omega_n_general(int n, cplx r, const CoefficientOptions& opts = {}) {
  return omega_n_evaluate(n, r, opts).value;
}

inline cplx omega_prime(int n, cplx r, const CoefficientOptions& opts = {}) {
  return omega_n_evaluate(n, r, opts).centered;
}

/// Omega_n(tau_k) and Omega'_n(tau_k) for even n <= max_order on a lag grid.
struct CoefficientTable {
  std::vector<int> orders;
  std::vector<double> lags;
  std::vector<cplx> correlation;            // r(tau_k)
  std::vector<std::vector<cplx>> values;    // [order index][lag index]
  std::vector<std::vector<cplx>> centered;  // [order index][lag index]
  std::vector<double> limit_values;         // per order

  std::size_t order_index(int n) const {
    if (n < 0 || n % 2 != 0 || n > orders.back()) throw DomainError("CoefficientTable: order not tabulated");
    return static_cast<std::size_t>(n / 2);
  }

  /// Throws InvariantError if the centering identity or the majorant is violated.
  void check_invariants() const {
    for (std::size_t i = 0; i < orders.size(); ++i) {
      const int n = orders[i];
      for (std::size_t k = 0; k < lags.size(); ++k) {
        const cplx diff = values[i][k] - limit_values[i] - centered[i][k];
        const double scale = std::max(std::abs(values[i][k]), std::abs(limit_values[i]));
        if (std::abs(diff) > 1e-12 * scale + 1e-300) {
          throw InvariantError("CoefficientTable: centered != values - limit at n=" + std::to_string(n));
        }
        if (n >= 2 && !(std::log(std::abs(values[i][k])) < log_omega_bound(n, std::abs(correlation[k])))) {
          throw InvariantError("CoefficientTable: |Omega_n| exceeds the majorant at n=" + std::to_string(n));
        }
      }
    }
  }

  /// Rows ordered by lag, then order.
  void write_csv(std::ostream& os) const {
    os << "tau,n,re_omega,im_omega,re_omega_prime,im_omega_prime\n";
    for (std::size_t k = 0; k < lags.size(); ++k) {
      for (std::size_t i = 0; i < orders.size(); ++i) {
        os << format_number(lags[k]) << ',' << orders[i] << ',' << format_number(values[i][k].real())
           << ',' << format_number(values[i][k].imag()) << ',' << format_number(centered[i][k].real())
           << ',' << format_number(centered[i][k].imag()) << '\n';
      }
    }
  }
};

/// Evaluates every (order, lag) pair independently; lag points run in parallel.
inline CoefficientTable build_table(const CorrelationKernel& kernel, const std::vector<double>& lags,
                                    int max_order, unsigned threads = 0,
                                    const CoefficientOptions& opts = {}) {
  if (max_order < 0 || max_order % 2 != 0) throw DomainError("build_table: max_order must be even and >= 0");
  for (double tau : lags) {
    if (tau == 0.0) {
      throw DomainError("build_table: lag grid contains tau = 0 where |r| = 1; use a midpoint grid");
    }
    if (!std::isfinite(tau)) throw DomainError("build_table: lag grid contains a non-finite value");
  }
  CoefficientTable t;
  for (int n = 0; n <= max_order; n += 2) {
    t.orders.push_back(n);
    t.limit_values.push_back(omega_limit(n));
  }
  t.lags = lags;
  t.correlation.resize(lags.size());
  t.values.assign(t.orders.size(), std::vector<cplx>(lags.size()));
  t.centered.assign(t.orders.size(), std::vector<cplx>(lags.size()));
  for (std::size_t k = 0; k < lags.size(); ++k) t.correlation[k] = evaluate(kernel, lags[k]);
  parallel_for(lags.size(), threads, [&](std::size_t k) {
    for (std::size_t i = 0; i < t.orders.size(); ++i) {
      const auto v = omega_n_evaluate(t.orders[i], t.correlation[k], opts);
      t.values[i][k] = v.value;
      t.centered[i][k] = v.centered;
    }
  });
  return t;
}

}  // namespace invgp
