#pragma once

// Integrability diagnostics for the autocovariance at omega = 0: the L1
// majorant integrand, its Lorentzian closed form and Gaussian numeric value.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coefficients.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "specfun.hpp"

namespace invgp {

/// (4/pi) |r| 3F2(1,1,1; 3/2,3/2; |r|^2).
inline double l1_integrand(double abs_r) {
  if (!(abs_r >= 0.0) || !(abs_r < 1.0)) throw DomainError("l1_integrand: |r| must lie in [0, 1)");
  return 4.0 / std::numbers::pi * abs_r * specfun::hyp3f2_zero_balanced(abs_r * abs_r);
}

/// (28 zeta(3)/pi - 8 C) / a.
inline double lorentzian_l1_bound(double a) {
  if (!(a > 0.0)) throw DomainError("lorentzian_l1_bound: a must be > 0");
  const auto k = specfun::math_constants();
  return (28.0 * k.zeta3 / k.pi - 8.0 * k.catalan) / a;
}

struct SingularIntegralOptions {
  int nodes_per_panel = 32;
  double split = 1e-3;       // below: analytic integral of the fitted c1 + c2 ln tau
  double fit_upper = 1e-2;   // fit window [split, fit_upper]
  double tail_tol = 1e-15;   // stop when a unit panel adds less than this, relative
  double tau_limit = 1e4;
};

/// 2 * int_0^inf f(tau) dtau for an even integrand with an integrable
/// logarithmic singularity at 0. Log-spaced Gauss-Legendre panels on
/// [split, 1], unit panels beyond until the contribution is negligible.
inline double integrate_even_log_singular(const std::function<double(double)>& f,
                                          const SingularIntegralOptions& opt = {}) {
  if (opt.nodes_per_panel < 4 || !(opt.split > 0.0) || !(opt.fit_upper > opt.split)) {
    throw ConfigError("SingularIntegralOptions: invalid panel layout");
  }
  // Least-squares fit of c1 + c2 ln tau on log-spaced samples of [split, fit_upper].
  constexpr int kFit = 9;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < kFit; ++i) {
    const double t = opt.split * std::pow(opt.fit_upper / opt.split, i / (kFit - 1.0));
    const double x = std::log(t), y = f(t);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double c2 = (kFit * sxy - sx * sy) / (kFit * sxx - sx * sx);
  const double c1 = (sy - c2 * sx) / kFit;
  const double h = opt.split;
  double total = h * (c1 + c2 * (std::log(h) - 1.0));

  std::vector<double> x, w;
  auto panel = [&](double lo, double hi) {
    gauss_legendre(opt.nodes_per_panel, lo, hi, x, w);
    double s = 0.0;
    for (int i = 0; i < opt.nodes_per_panel; ++i) s += w[i] * f(x[i]);
    return s;
  };
  double lo = opt.split;
  while (lo < 1.0) {
    const double hi = std::min(1.0, lo * 10.0);
    total += panel(lo, hi);
    lo = hi;
  }
  for (double t = 1.0; t < opt.tau_limit; t += 1.0) {
    const double p = panel(t, t + 1.0);
    total += p;
    if (std::abs(p) <= opt.tail_tol * std::abs(total)) return 2.0 * total;
  }
  throw AccuracyError("integrate_even_log_singular: integrand not decayed by tau_limit", 2.0 * total,
                      std::numeric_limits<double>::infinity());
}

/// int l1_integrand(e^{-a tau^2}) dtau over the real line, by quadrature.
inline double gaussian_l1_bound(double a, const SingularIntegralOptions& opt = {}) {
  if (!(a > 0.0)) throw DomainError("gaussian_l1_bound: a must be > 0");
  const double unit = integrate_even_log_singular([](double t) { return l1_integrand(std::exp(-t * t)); }, opt);
  return unit / std::sqrt(a);
}

/// int l1_integrand(|r(tau)|) dtau for an analytic kernel (diverges for FlatBand).
inline double l1_bound_numeric(const CorrelationKernel& kernel, const SingularIntegralOptions& opt = {}) {
  if (!kernel.is_analytic()) throw DomainError("l1_bound_numeric: analytic kernel required");
  if (kernel.is<FlatBand>()) return std::numeric_limits<double>::infinity();
  return integrate_even_log_singular([&](double t) { return l1_integrand(std::abs(evaluate(kernel, t))); }, opt);
}

struct IntegrabilityReport {
  std::string kernel_id;
  bool certified = false;  // decay faster than 1/|tau|^alpha with alpha > 1
  std::optional<double> l1_bound;    // majorant of int |C_ss| dtau
  std::optional<double> l1_numeric;  // int |Omega'_0(tau)| dtau
  bool satisfied = false;
  std::string note;
};

inline IntegrabilityReport integrability_report(const CorrelationKernel& kernel,
                                                const SingularIntegralOptions& opt = {}) {
  if (!kernel.is_analytic()) throw DomainError("integrability_report: analytic kernel required");
  IntegrabilityReport rep;
  rep.kernel_id = kernel.id();
  if (kernel.is<FlatBand>()) {
    rep.note =
        "sinc correlation decays like 1/|tau|; the L1 condition is sufficient, not necessary, so the "
        "spectrum is still computed";
    return rep;
  }
  rep.certified = true;
  if (const auto* k = std::get_if<Lorentzian>(&kernel.variant())) {
    rep.l1_bound = lorentzian_l1_bound(k->a);
  } else if (const auto* k = std::get_if<DopplerLorentzian>(&kernel.variant())) {
    rep.l1_bound = lorentzian_l1_bound(k->a);  // the majorant depends on |r| only
  } else if (const auto* k = std::get_if<GaussianKernel>(&kernel.variant())) {
    rep.l1_bound = gaussian_l1_bound(k->a, opt);
  }
  rep.l1_numeric = integrate_even_log_singular(
      [&](double t) { return std::abs(omega_n_general(0, evaluate(kernel, t))); }, opt);
  rep.satisfied = *rep.l1_numeric < *rep.l1_bound;
  return rep;
}

inline nlohmann::json to_json(const IntegrabilityReport& r) {
  nlohmann::json j;
  j["kernel"] = r.kernel_id;
  j["certified"] = r.certified;
  j["l1_bound"] = r.l1_bound ? nlohmann::json(*r.l1_bound) : nlohmann::json(nullptr);
  j["l1_numeric"] = r.l1_numeric ? nlohmann::json(*r.l1_numeric) : nlohmann::json(nullptr);
  j["satisfied"] = r.satisfied;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace invgp
