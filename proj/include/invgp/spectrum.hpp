#pragma once

// Covariance power spectra: the theoretical transform of the series
// autocovariance on a midpoint lag grid, and a Welch estimator for samples.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coefficients.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "kernels.hpp"
#include "numeric.hpp"
#include "series.hpp"

namespace invgp {

/// Lags +-(k + 1/2) dtau for k < half_points; tau = 0 is never sampled.
struct TauGrid {
  double dtau = 0.0;
  std::size_t half_points = 0;

  void validate() const {
    if (!(dtau > 0.0) || !std::isfinite(dtau)) throw DomainError("TauGrid: dtau must be finite and > 0");
    if (half_points < 16) throw DomainError("TauGrid: half_points must be >= 16");
  }
  double lag(std::size_t k) const { return (static_cast<double>(k) + 0.5) * dtau; }
  std::vector<double> positive_lags() const {
    std::vector<double> out(half_points);
    for (std::size_t k = 0; k < half_points; ++k) out[k] = lag(k);
    return out;
  }
  std::size_t transform_length() const { return 2 * half_points; }
};

/// Two-sided spectrum on ascending frequencies j / (L dt), j = -L/2 .. L/2 - 1.
struct SpectrumResult {
  std::vector<double> frequencies;
  std::vector<double> psd;
  double dc_line_power = 0.0;  // weight of the delta at f = 0, excluded from psd
  nlohmann::json metadata = nlohmann::json::object();

  double peak() const { return psd.empty() ? 0.0 : *std::max_element(psd.begin(), psd.end()); }

  void write_csv(std::ostream& os) const {
    os << "freq,psd,psd_db\n";
    for (std::size_t j = 0; j < psd.size(); ++j) {
      os << format_number(frequencies[j]) << ',' << format_number(psd[j]) << ','
         << format_number(psd[j] > 0.0 ? 10.0 * std::log10(psd[j]) : -std::numeric_limits<double>::infinity())
         << '\n';
    }
  }
};

namespace detail {

inline std::vector<double> shifted_frequencies(std::size_t L, double dt) {
  std::vector<double> f(L);
  const auto half = static_cast<std::ptrdiff_t>(L / 2);
  for (std::size_t i = 0; i < L; ++i) f[i] = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half) / (L * dt);
  return f;
}

// Index into FFT output for shifted position i.
inline std::size_t unshift(std::size_t i, std::size_t L) { return (i + L - L / 2) % L; }

}  // namespace detail

enum class TruncationPolicy { raise, record };

struct TheoryOptions {
  unsigned threads = 0;
  double coefficient_rel_tol = 1e-8;
  // max_f |transform of terms N+2 and N+4| must stay below this fraction of the peak psd.
  double truncation_ratio = 1e-2;
  TruncationPolicy truncation_policy = TruncationPolicy::raise;
  double hermitian_tol = 1e-10;
};

/// Raised-cosine weights on the outer 10% of the positive lags; 1 elsewhere.
inline std::vector<double> outer_taper(std::size_t M) {
  std::vector<double> w(M, 1.0);
  const std::size_t start = M - M / 10;
  const double width = static_cast<double>(M - start);
  for (std::size_t k = start; k < M; ++k) {
    w[k] = 0.5 * (1.0 + std::cos(std::numbers::pi * (static_cast<double>(k - start) + 0.5) / width));
  }
  return w;
}

/// Spectrum from a table built on grid.positive_lags(); the table may be shared across omega.
inline SpectrumResult theoretical_spectrum(const CoefficientTable& table, const std::string& kernel_id,
                                           bool taper, OmegaRatio omega, int N, const TauGrid& grid,
                                           const TheoryOptions& opts = {}) {
  grid.validate();
  const std::size_t M = grid.half_points;
  if (table.lags.size() != M) throw DomainError("theoretical_spectrum: table does not match the lag grid");
  for (std::size_t k = 0; k < M; ++k) {
    if (std::abs(table.lags[k] - grid.lag(k)) > 1e-12 * grid.lag(k)) {
      throw DomainError("theoretical_spectrum: table lags differ from the midpoint grid");
    }
  }
  if (omega.value() > 0.0 && table.orders.back() < N + 4) {
    throw DomainError("theoretical_spectrum: table must hold orders up to N + 4");
  }
  const std::size_t terms = omega.value() == 0.0 ? 1 : static_cast<std::size_t>(N / 2 + 3);
  std::vector<cplx> cov(M), next(M);
  parallel_for(M, opts.threads, [&](std::size_t k) {
    std::vector<cplx> coeffs(terms);
    for (std::size_t i = 0; i < terms; ++i) coeffs[i] = table.centered[i][k];
    cov[k] = sum_series(coeffs, std::abs(table.correlation[k]), omega, N).value;
    for (std::size_t i = terms > 1 ? terms - 2 : terms; i < terms; ++i) {
      const int n = static_cast<int>(2 * i);
      next[k] += coeffs[i] * (std::pow(omega.value(), n) / specfun::factorial(n));
    }
  });
  const auto weights = taper ? outer_taper(M) : std::vector<double>(M, 1.0);
  const std::size_t L = grid.transform_length();
  const FftPlan plan(L, FftPlan::Direction::forward);
  // dtau e^{-i pi j / L} DFT of the Hermitian extension, at shifted positions.
  auto transform = [&](const std::vector<cplx>& c) {
    std::vector<cplx> x(L), X(L), v(L);
    for (std::size_t k = 0; k < M; ++k) {
      x[k] = c[k] * weights[k];
      x[L - 1 - k] = std::conj(c[k]) * weights[k];  // lag -(k + 1/2) dtau
    }
    plan.execute(x.data(), X.data());
    const auto half = static_cast<std::ptrdiff_t>(L / 2);
    for (std::size_t i = 0; i < L; ++i) {
      const auto j = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half);
      v[i] = grid.dtau * std::polar(1.0, -std::numbers::pi * j / static_cast<double>(L)) * X[detail::unshift(i, L)];
    }
    return v;
  };

  SpectrumResult out;
  out.frequencies = detail::shifted_frequencies(L, grid.dtau);
  out.psd.resize(L);
  const auto v = transform(cov);
  double peak = 0.0, residue = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    out.psd[i] = v[i].real();
    peak = std::max(peak, std::abs(v[i].real()));
    residue = std::max(residue, std::abs(v[i].imag()));
  }
  if (residue > opts.hermitian_tol * peak) {
    throw InvariantError("theoretical_spectrum: imaginary residue exceeds tolerance of the peak");
  }
  double truncation = 0.0;
  if (terms > 1) {
    for (const auto& t : transform(next)) truncation = std::max(truncation, std::abs(t));
  }
  const bool flagged = truncation > opts.truncation_ratio * peak;
  if (flagged && opts.truncation_policy == TruncationPolicy::raise) {
    throw TruncationError("theoretical_spectrum: omitted series terms reach " + format_number(truncation / peak) +
                          " of the peak; raise N");
  }
  out.dc_line_power = asymptotic_floor(omega);
  out.metadata = {{"method", "midpoint-dft"}, {"kernel", kernel_id},        {"omega", omega.value()},
                  {"N", N},                   {"dtau", grid.dtau},          {"half_points", M},
                  {"taper", taper},           {"truncation_estimate", truncation},
                  {"truncation_flagged", flagged}};
  return out;
}

/// Builds the coefficient table for the grid, then transforms. FlatBand lags are tapered.
inline SpectrumResult theoretical_spectrum(const CorrelationKernel& kernel, OmegaRatio omega, int N,
                                           const TauGrid& grid, const TheoryOptions& opts = {}) {
  grid.validate();
  const int top = omega.value() == 0.0 ? 0 : N + 4;
  const auto table = build_table(kernel, grid.positive_lags(), top, opts.threads, {opts.coefficient_rel_tol});
  return theoretical_spectrum(table, kernel.id(), kernel.is<FlatBand>(), omega, N, grid, opts);
}

enum class WindowKind { hann, rectangular };
enum class Averaging { mean, median };

struct WelchOptions {
  std::size_t segment_len = 4096;
  double overlap = 0.5;
  WindowKind window = WindowKind::hann;
  Averaging averaging = Averaging::mean;
  std::size_t min_segments = 16;
  unsigned threads = 0;
};

inline std::vector<double> make_window(WindowKind kind, std::size_t L) {
  std::vector<double> w(L, 1.0);
  if (kind == WindowKind::hann) {
    for (std::size_t i = 0; i < L; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / L);
  }
  return w;
}

inline std::string to_string(WindowKind k) { return k == WindowKind::hann ? "hann" : "rectangular"; }

namespace detail {

// Ratio of the sample median to the mean of n exponential variates (odd n exact).
inline double median_bias(std::size_t n) {
  double b = 1.0;
  for (std::size_t k = 1; 2 * k <= n - 1; ++k) b += 1.0 / (2.0 * k + 1.0) - 1.0 / (2.0 * k);
  return b;
}

}  // namespace detail

/// Two-sided Welch estimate in power per unit frequency, after removing the global mean.
inline SpectrumResult welch_covariance_spectrum(std::span<const cplx> samples, double dt,
                                                const WelchOptions& opt = {}) {
  const std::size_t n = samples.size(), L = opt.segment_len;
  if (!(dt > 0.0)) throw DomainError("welch: dt must be > 0");
  if (L < 2 || L > n) throw DomainError("welch: segment length must lie in [2, sample count]");
  if (!(opt.overlap >= 0.0 && opt.overlap <= 0.9)) throw DomainError("welch: overlap must lie in [0, 0.9]");
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(L * (1.0 - opt.overlap))));
  const std::size_t segments = (n - L) / hop + 1;
  if (segments < opt.min_segments) {
    throw QualityError("welch: " + std::to_string(segments) + " segments is below the minimum of " +
                       std::to_string(opt.min_segments));
  }
  const cplx mean = pairwise_sum(samples) / static_cast<double>(n);
  const auto w = make_window(opt.window, L);
  double U = 0.0;
  for (double v : w) U += v * v;
  const double scale = dt / U;
  const FftPlan plan(L, FftPlan::Direction::forward);

  auto periodogram = [&](std::size_t s, std::vector<cplx>& buf, std::vector<cplx>& X, double* dst) {
    const std::size_t start = s * hop;
    for (std::size_t i = 0; i < L; ++i) buf[i] = (samples[start + i] - mean) * w[i];
    plan.execute(buf.data(), X.data());
    for (std::size_t i = 0; i < L; ++i) dst[i] = std::norm(X[i]) * scale;
  };

  std::vector<double> avg(L, 0.0);
  if (opt.averaging == Averaging::mean) {
    // Fixed blocks summed in segment order keep the result independent of threads.
    constexpr std::size_t kBlock = 16;
    std::vector<double> block(kBlock * L);
    for (std::size_t b0 = 0; b0 < segments; b0 += kBlock) {
      const std::size_t count = std::min(kBlock, segments - b0);
      parallel_for(count, opt.threads, [&](std::size_t j) {
        std::vector<cplx> buf(L), X(L);
        periodogram(b0 + j, buf, X, block.data() + j * L);
      });
      for (std::size_t j = 0; j < count; ++j) {
        for (std::size_t i = 0; i < L; ++i) avg[i] += block[j * L + i];
      }
    }
    for (double& v : avg) v /= static_cast<double>(segments);
  } else {
    std::vector<double> all(segments * L);
    parallel_for(segments, opt.threads, [&](std::size_t s) {
      std::vector<cplx> buf(L), X(L);
      periodogram(s, buf, X, all.data() + s * L);
    });
    const double bias = detail::median_bias(segments);
    parallel_for(L, opt.threads, [&](std::size_t i) {
      std::vector<double> col(segments);
      for (std::size_t s = 0; s < segments; ++s) col[s] = all[s * L + i];
      const std::size_t mid = segments / 2;
      std::nth_element(col.begin(), col.begin() + mid, col.end());
      double med = col[mid];
      if (segments % 2 == 0) med = 0.5 * (med + *std::max_element(col.begin(), col.begin() + mid));
      avg[i] = med / bias;
    });
  }

  SpectrumResult out;
  out.frequencies = detail::shifted_frequencies(L, dt);
  out.psd.resize(L);
  for (std::size_t i = 0; i < L; ++i) out.psd[i] = avg[detail::unshift(i, L)];
  out.dc_line_power = std::norm(mean);
  out.metadata = {{"method", "welch"},
                  {"dt", dt},
                  {"segment_len", L},
                  {"overlap", opt.overlap},
                  {"window", to_string(opt.window)},
                  {"averaging", opt.averaging == Averaging::mean ? "mean" : "median"},
                  {"segments", segments}};
  return out;
}

/// Least-squares slope of log psd against log f over positive f in [f_lo, f_hi].
inline double tail_slope(const SpectrumResult& spec, double f_lo, double f_hi) {
  if (!(f_lo > 0.0) || !(f_hi >= 10.0 * f_lo * (1.0 - 1e-12))) {
    throw DomainError("tail_slope: band must be positive and span at least one decade");
  }
  if (spec.frequencies.empty() || f_hi > spec.frequencies.back() * (1.0 + 1e-12)) {
    throw DomainError("tail_slope: band exceeds the frequency grid");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < spec.psd.size(); ++i) {
    const double f = spec.frequencies[i];
    if (f < f_lo || f > f_hi) continue;
    if (!(spec.psd[i] > 0.0)) throw DomainError("tail_slope: nonpositive psd inside the band");
    const double x = std::log(f), y = std::log(spec.psd[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw DomainError("tail_slope: fewer than two bins inside the band");
  const double dm = static_cast<double>(m);
  return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

}  // namespace invgp
