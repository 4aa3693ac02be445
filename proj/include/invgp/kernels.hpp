#pragma once

// Normalized autocorrelation models r(tau) = rho(tau) - i mu(tau) of the
// underlying complex Gaussian process.

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace invgp {

/// e^{-a|tau|}; a in 1/time.
struct Lorentzian {
  double a = 1.0;
};

/// e^{-a tau^2}; a in 1/time^2.
struct GaussianKernel {
  double a = 1.0;
};

/// sin(tau)/tau: unit power spread flat over |f| < 1/(2 pi).
struct FlatBand {};

/// e^{-a|tau|} e^{-i beta tau}. Complex-valued; rho even, mu odd.
struct DopplerLorentzian {
  double a = 1.0;
  double beta = 0.0;
};

/// Samples on tau >= 0 (ascending, starting at 0 with value 1), linearly
/// interpolated and reflected Hermitianly to negative lags.
struct Tabulated {
  std::vector<double> lags;
  std::vector<cplx> values;
};

class CorrelationKernel {
 public:
  using Variant = std::variant<Lorentzian, GaussianKernel, FlatBand, DopplerLorentzian, Tabulated>;

  CorrelationKernel(Lorentzian k) : v_(k) { require_rate(k.a); }
  CorrelationKernel(GaussianKernel k) : v_(k) { require_rate(k.a); }
  CorrelationKernel(FlatBand k) : v_(k) {}
  CorrelationKernel(DopplerLorentzian k) : v_(k) {
    require_rate(k.a);
    if (!std::isfinite(k.beta)) throw ConfigError("DopplerLorentzian: beta must be finite");
  }
  CorrelationKernel(Tabulated k) : v_(std::move(k)) { validate_table(std::get<Tabulated>(v_)); }

  const Variant& variant() const noexcept { return v_; }

  template <class T>
  bool is() const noexcept {
    return std::holds_alternative<T>(v_);
  }

  bool is_analytic() const noexcept { return !is<Tabulated>(); }

  /// Lorentzian and GaussianKernel are real-valued; the others may be complex.
  bool is_real() const noexcept {
    return is<Lorentzian>() || is<GaussianKernel>() || is<FlatBand>() ||
           (is<DopplerLorentzian>() && std::get<DopplerLorentzian>(v_).beta == 0.0);
  }

  /// Canonical text form, parseable by parse_kernel.
  std::string id() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Lorentzian>) {
            return "lorentzian:a=" + format_number(k.a);
          } else if constexpr (std::is_same_v<K, GaussianKernel>) {
            return "gaussian:a=" + format_number(k.a);
          } else if constexpr (std::is_same_v<K, FlatBand>) {
            return "flat";
          } else if constexpr (std::is_same_v<K, DopplerLorentzian>) {
            return "doppler:a=" + format_number(k.a) + ",beta=" + format_number(k.beta);
          } else {
            return "tabulated:" + std::to_string(k.lags.size()) + "pts";
          }
        },
        v_);
  }

 private:
  static void require_rate(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("kernel decay rate a must be > 0");
  }

  static void validate_table(const Tabulated& t) {
    if (t.lags.size() < 2 || t.lags.size() != t.values.size()) {
      throw ConfigError("Tabulated: need at least two (lag, value) pairs of equal length");
    }
    if (t.lags.front() != 0.0) throw ConfigError("Tabulated: first lag must be 0");
    if (std::abs(t.values.front() - cplx(1.0, 0.0)) > 1e-12) {
      throw ConfigError("Tabulated: r(0) must equal 1");
    }
    for (std::size_t i = 1; i < t.lags.size(); ++i) {
      if (!(t.lags[i] > t.lags[i - 1])) throw ConfigError("Tabulated: lags must be strictly ascending");
    }
    for (const auto& v : t.values) {
      if (!(std::abs(v) <= 1.0 + 1e-12)) throw ConfigError("Tabulated: |r| must not exceed 1");
    }
  }

  Variant v_;
};

/// r(tau) for the kernel. Tabulated lags outside the table span raise DomainError.
inline cplx evaluate(const CorrelationKernel& kernel, double tau) {
  return std::visit(
      [tau](const auto& k) -> cplx {
        using K = std::decay_t<decltype(k)>;
        const double at = std::abs(tau);
        if constexpr (std::is_same_v<K, Lorentzian>) {
          return {std::exp(-k.a * at), 0.0};
        } else if constexpr (std::is_same_v<K, GaussianKernel>) {
          return {std::exp(-k.a * tau * tau), 0.0};
        } else if constexpr (std::is_same_v<K, FlatBand>) {
          return {tau == 0.0 ? 1.0 : std::sin(tau) / tau, 0.0};
        } else if constexpr (std::is_same_v<K, DopplerLorentzian>) {
          return std::exp(-k.a * at) * std::polar(1.0, -k.beta * tau);
        } else {
          if (at > k.lags.back()) throw DomainError("Tabulated kernel: lag outside table span");
          auto it = std::upper_bound(k.lags.begin(), k.lags.end(), at);
          const std::size_t hi = std::min<std::size_t>(it - k.lags.begin(), k.lags.size() - 1);
          const std::size_t lo = hi - 1;
          const double w = (at - k.lags[lo]) / (k.lags[hi] - k.lags[lo]);
          const cplx v = (1.0 - w) * k.values[lo] + w * k.values[hi];
          return tau < 0.0 ? std::conj(v) : v;
        }
      },
      kernel.variant());
}

/// Polar form |r| e^{i phase}.
struct PolarCorrelation {
  double magnitude = 0.0;
  double phase = 0.0;
};

/// r = rho - i mu together with its polar form.
struct Decomposition {
  double rho = 0.0;
  double mu = 0.0;
  PolarCorrelation polar;
};

inline Decomposition decompose(cplx r) {
  const double m = std::abs(r);
  if (!(m <= 1.0 + 1e-12)) throw InvariantError("decompose: |r| exceeds 1");
  return {r.real(), -r.imag(), {std::min(m, 1.0), std::arg(r)}};
}

/// Reads "tau,re[,im]" rows after a header row; tau >= 0 ascending.
inline Tabulated load_tabulated_csv(std::istream& in) {
  Tabulated t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("Tabulated CSV: missing header row");
  double probe = 0.0;
  {
    std::string first = line.substr(0, line.find(','));
    if (parse_number(first, probe)) throw ConfigError("Tabulated CSV: header row required");
  }
  std::size_t columns = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      double v = 0.0;
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      if (!parse_number(cell, v)) {
        throw ConfigError("Tabulated CSV: non-numeric field on line " + std::to_string(line_no));
      }
      fields.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 2 && fields.size() != 3) {
      throw ConfigError("Tabulated CSV: expected 2 or 3 columns on line " + std::to_string(line_no));
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      throw ConfigError("Tabulated CSV: inconsistent column count on line " + std::to_string(line_no));
    }
    if (fields[0] < 0.0) throw ConfigError("Tabulated CSV: lags must be >= 0");
    t.lags.push_back(fields[0]);
    t.values.emplace_back(fields[1], columns == 3 ? fields[2] : 0.0);
  }
  return t;
}

inline CorrelationKernel load_tabulated_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tabulated kernel file: " + path);
  return CorrelationKernel(load_tabulated_csv(in));
}

/// Parses "lorentzian:a=1", "gaussian:a=1", "flat", "doppler:a=1,beta=2",
/// "tabulated:path.csv".
inline CorrelationKernel parse_kernel(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (name == "tabulated") {
    if (rest.empty()) throw ConfigError("tabulated kernel needs a CSV path");
    return load_tabulated_csv(rest);
  }
  double a = 1.0, beta = 0.0;
  bool seen_beta = false;
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("kernel parameter must be key=value: " + item);
    const std::string key = item.substr(0, eq);
    double v = 0.0;
    if (!parse_number(std::string_view(item).substr(eq + 1), v)) {
      throw ConfigError("kernel parameter is not a number: " + item);
    }
    if (key == "a") {
      a = v;
    } else if (key == "beta" && name == "doppler") {
      beta = v;
      seen_beta = true;
    } else {
      throw ConfigError("unknown kernel parameter '" + key + "' for " + name);
    }
  }
  if (name == "lorentzian") return Lorentzian{a};
  if (name == "gaussian") return GaussianKernel{a};
  if (name == "doppler") {
    if (!seen_beta) throw ConfigError("doppler kernel needs beta=");
    return DopplerLorentzian{a, beta};
  }
  if (name == "flat") {
    if (!rest.empty()) throw ConfigError("flat kernel takes no parameters");
    return FlatBand{};
  }
  throw ConfigError("unknown kernel: " + name);
}

}  // namespace invgp
