#pragma once

// Discrete-time realizations of w(t), the inversion s = 1/(w0 + w), empirical
// correlation statistics and the end-to-end simulated-versus-theory experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coefficients.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "kernels.hpp"
#include "numeric.hpp"
#include "random.hpp"
#include "series.hpp"
#include "spectrum.hpp"

namespace invgp {

struct SimulationConfig {
  CorrelationKernel kernel = Lorentzian{1.0};
  OmegaRatio omega;
  double dt = 0.1;
  std::size_t n_samples = std::size_t{1} << 16;
  std::uint64_t seed = 0;
  std::size_t fir_taps = 1025;  // FlatBand only; odd
  std::size_t upsample = 1;     // FlatBand only: the FIR runs at dt * upsample
  unsigned threads = 0;

  double base_dt() const { return dt * static_cast<double>(upsample); }

  void validate() const {
    if (n_samples < (std::size_t{1} << 16)) throw ConfigError("SimulationConfig: n_samples must be >= 65536");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("SimulationConfig: dt must be finite and > 0");
    if (const auto* k = std::get_if<Lorentzian>(&kernel.variant())) {
      if (!(k->a * dt < 0.5)) throw ConfigError("SimulationConfig: Lorentzian requires a*dt < 0.5");
    } else if (kernel.is<FlatBand>()) {
      if (upsample < 1) throw ConfigError("SimulationConfig: upsample must be >= 1");
      if (!(base_dt() <= std::numbers::pi / 2)) {
        throw ConfigError("SimulationConfig: FlatBand requires dt * upsample <= pi/2");
      }
      if (fir_taps < 3 || fir_taps % 2 == 0) throw ConfigError("SimulationConfig: fir_taps must be odd and >= 3");
    } else {
      throw ConfigError("SimulationConfig: only Lorentzian and FlatBand kernels can be simulated");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"kernel", kernel.id()},   {"omega", omega.value()}, {"dt", dt},
                        {"n_samples", n_samples},  {"seed", seed}};
    if (kernel.is<FlatBand>()) {
      j["fir_taps"] = fir_taps;
      j["upsample"] = upsample;
    }
    return j;
  }
};

inline constexpr std::size_t kNoiseBlock = std::size_t{1} << 16;

/// Unit-power circular white noise; block b of kNoiseBlock samples draws from stream (seed, stream0 + b).
inline std::vector<cplx> white_noise(std::size_t n, std::uint64_t seed, std::uint64_t stream0 = 0,
                                     unsigned threads = 0) {
  std::vector<cplx> out(n);
  const std::size_t blocks = (n + kNoiseBlock - 1) / kNoiseBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    auto rng = make_stream(seed, stream0 + b);
    std::normal_distribution<double> nd;
    const std::size_t end = std::min(n, (b + 1) * kNoiseBlock);
    for (std::size_t i = b * kNoiseBlock; i < end; ++i) out[i] = circular_gaussian(rng, nd);
  });
  return out;
}

/// Kaiser window value at normalized position x in [-1, 1].
inline double kaiser(double x, double beta) {
  if (std::abs(x) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

inline double sinc_pi(double x) { return x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x); }

/// Kaiser-windowed sinc lowpass, cutoff in cycles per sample, odd length.
inline std::vector<double> kaiser_lowpass(std::size_t taps, double cutoff, double beta = 8.0) {
  if (taps < 3 || taps % 2 == 0) throw ConfigError("kaiser_lowpass: taps must be odd and >= 3");
  std::vector<double> h(taps);
  const double half = 0.5 * static_cast<double>(taps - 1);
  for (std::size_t i = 0; i < taps; ++i) {
    const double k = static_cast<double>(i) - half;
    h[i] = 2.0 * cutoff * sinc_pi(2.0 * cutoff * k) * kaiser(k / half, beta);
  }
  return h;
}

/// Valid-mode convolution (no warm-up samples) by overlap-save.
inline std::vector<cplx> fir_filter_valid(std::span<const cplx> x, std::span<const double> h, unsigned threads = 0) {
  const std::size_t T = h.size();
  if (x.size() < T) throw DomainError("fir_filter_valid: input shorter than the filter");
  const std::size_t out_len = x.size() - T + 1;
  std::size_t B = 1;
  while (B < 4 * T) B <<= 1;
  const std::size_t step = B - T + 1;
  const FftPlan fwd(B, FftPlan::Direction::forward), inv(B, FftPlan::Direction::backward);
  std::vector<cplx> hb(B, 0.0), H(B);
  for (std::size_t i = 0; i < T; ++i) hb[i] = h[i];
  fwd.execute(hb.data(), H.data());
  std::vector<cplx> y(out_len);
  const std::size_t chunks = (out_len + step - 1) / step;
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<cplx> buf(B, 0.0), X(B), z(B);
    const std::size_t start = c * step;
    const std::size_t avail = std::min(B, x.size() - start);
    std::copy_n(x.begin() + start, avail, buf.begin());
    fwd.execute(buf.data(), X.data());
    for (std::size_t i = 0; i < B; ++i) X[i] *= H[i];
    inv.execute(X.data(), z.data());
    const std::size_t count = std::min(step, out_len - start);
    for (std::size_t i = 0; i < count; ++i) y[start + i] = z[T - 1 + i] / static_cast<double>(B);
  });
  return y;
}

inline constexpr std::size_t kInterpolationTaps = 32;  // base-rate taps per output sample

/// Band-limited interpolation by an integer factor with a Kaiser(8) sinc kernel.
/// Output sample j sits at base position j / factor + kInterpolationTaps / 2.
inline std::vector<cplx> interpolate(std::span<const cplx> x, std::size_t factor, std::size_t n_out,
                                     unsigned threads = 0) {
  constexpr std::size_t K = kInterpolationTaps;
  if (factor == 1) {
    if (x.size() < n_out) throw DomainError("interpolate: input too short");
    return {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n_out)};
  }
  if ((n_out - 1) / factor + K + 1 > x.size()) throw DomainError("interpolate: input too short");
  const double half = 0.5 * static_cast<double>(K);
  std::vector<std::vector<double>> table(factor, std::vector<double>(K));
  for (std::size_t p = 0; p < factor; ++p) {
    double sum = 0.0;
    for (std::size_t m = 0; m < K; ++m) {
      // tap m multiplies x[b - K/2 + 1 + m]; its distance from the output point
      const double u = static_cast<double>(p) / static_cast<double>(factor) + half - 1.0 - static_cast<double>(m);
      table[p][m] = sinc_pi(u) * kaiser(u / half, 8.0);
      sum += table[p][m];
    }
    for (double& v : table[p]) v /= sum;
  }
  std::vector<cplx> y(n_out);
  const std::size_t chunk = 1 << 14;
  parallel_for((n_out + chunk - 1) / chunk, threads, [&](std::size_t c) {
    const std::size_t end = std::min(n_out, (c + 1) * chunk);
    for (std::size_t j = c * chunk; j < end; ++j) {
      const std::size_t b = j / factor + K / 2, p = j % factor;
      const cplx* src = x.data() + (b - K / 2 + 1);
      cplx acc = 0.0;
      for (std::size_t m = 0; m < K; ++m) acc += src[m] * table[p][m];
      y[j] = acc;
    }
  });
  return y;
}

/// Zero-mean unit-variance circular Gaussian sequence with the configured correlation.
inline std::vector<cplx> generate_gaussian(const SimulationConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_samples;
  if (const auto* k = std::get_if<Lorentzian>(&cfg.kernel.variant())) {
    auto w = white_noise(n, cfg.seed, 0, cfg.threads);
    const double rho = std::exp(-k->a * cfg.dt);
    const double gain = std::sqrt(-std::expm1(-2.0 * k->a * cfg.dt));
    // w[0] is already a stationary draw; w[k] holds the innovation until overwritten.
    for (std::size_t i = 1; i < n; ++i) w[i] = rho * w[i - 1] + gain * w[i];
    return w;
  }
  const double cutoff = cfg.base_dt() / (2.0 * std::numbers::pi);
  const auto h = kaiser_lowpass(cfg.fir_taps, cutoff);
  const std::size_t U = cfg.upsample;
  const std::size_t n_base = (n - 1) / U + kInterpolationTaps + 2;
  const auto noise = white_noise(n_base + cfg.fir_taps - 1, cfg.seed, 0, cfg.threads);
  const auto base = fir_filter_valid(noise, h, cfg.threads);
  auto y = interpolate(base, U, n, cfg.threads);
  double power = 0.0;
  for (const auto& v : y) power += std::norm(v);
  const double g = 1.0 / std::sqrt(power / static_cast<double>(n));
  for (auto& v : y) v *= g;
  return y;
}

struct InversionResult {
  std::vector<cplx> samples;
  std::size_t nonfinite = 0;  // exact zero denominators, kept as produced
};

/// s[k] = 1 / (omega sqrt(R_ww0) + w[k]) with w0 taken real.
inline InversionResult invert(std::span<const cplx> w, OmegaRatio omega, double R_ww0 = 1.0) {
  if (!(R_ww0 > 0.0)) throw DomainError("invert: R_ww0 must be > 0");
  const double w0 = omega.value() * std::sqrt(R_ww0);
  InversionResult out;
  out.samples.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const cplx s = 1.0 / (w0 + w[i]);
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) ++out.nonfinite;
    out.samples[i] = s;
  }
  return out;
}

/// (1/n) sum_k (x[k+m] - mean)(x[k] - mean)* for m = 0..max_lag.
inline std::vector<cplx> empirical_acf(std::span<const cplx> x, std::size_t max_lag, unsigned threads = 0) {
  const std::size_t n = x.size();
  if (n == 0 || 10 * max_lag >= n) throw DomainError("empirical_acf: max_lag must be < n/10");
  const cplx mean = pairwise_sum(x) / static_cast<double>(n);
  std::vector<cplx> out(max_lag + 1);
  parallel_for(max_lag + 1, threads, [&](std::size_t m) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k + m < n; ++k) acc += (x[k + m] - mean) * std::conj(x[k] - mean);
    out[m] = acc / static_cast<double>(n);
  });
  return out;
}

/// RMS error of one lag of the biased ACF estimator: sqrt(sum_j |r(j dt)|^2 / n).
inline double acf_standard_error(const CorrelationKernel& kernel, double dt, std::size_t n) {
  double s = 0.0;
  if (const auto* k = std::get_if<Lorentzian>(&kernel.variant())) {
    const double q = std::exp(-2.0 * k->a * dt);
    s = (1.0 + q) / (1.0 - q);
  } else {
    const std::size_t J = std::min<std::size_t>(n - 1, std::size_t{1} << 22);
    s = 1.0;
    for (std::size_t j = 1; j <= J; ++j) s += 2.0 * std::norm(evaluate(kernel, static_cast<double>(j) * dt));
  }
  return std::sqrt(s / static_cast<double>(n));
}

struct GeneratorGate {
  std::vector<std::size_t> lags;  // in samples
  std::vector<cplx> empirical;
  std::vector<cplx> expected;
  double standard_error = 0.0;
  double max_z = 0.0;
  bool passed = false;
};

/// Empirical ACF against the kernel at `count` lags spaced to cover about 5 time units; each within 3 sigma.
inline GeneratorGate generator_gate(std::span<const cplx> w, const CorrelationKernel& kernel, double dt,
                                    std::size_t count = 20, unsigned threads = 0) {
  GeneratorGate g;
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.25 / dt)));
  const cplx mean = pairwise_sum(w) / static_cast<double>(w.size());
  g.lags.resize(count);
  g.empirical.resize(count);
  g.expected.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const std::size_t m = (i + 1) * stride;
    cplx acc = 0.0;
    for (std::size_t k = 0; k + m < w.size(); ++k) acc += (w[k + m] - mean) * std::conj(w[k] - mean);
    g.lags[i] = m;
    g.empirical[i] = acc / static_cast<double>(w.size());
    g.expected[i] = evaluate(kernel, static_cast<double>(m) * dt);
  });
  g.standard_error = acf_standard_error(kernel, dt, w.size());
  for (std::size_t i = 0; i < count; ++i) {
    g.max_z = std::max(g.max_z, std::abs(g.empirical[i] - g.expected[i]) / g.standard_error);
  }
  g.passed = g.max_z <= 3.0;
  return g;
}

struct ComparisonMetrics {
  std::size_t bins = 0;
  double median_abs_db = 0.0;
  double p95_abs_db = 0.0;
  double mean_db = 0.0;  // signed, simulation over theory
  double band_min_f = 0.0;
  double band_max_f = 0.0;
};

struct ExperimentOptions {
  int N = 20;
  double band_db = 40.0;
  double analysis_fmax = 0.0;  // > 0 additionally restricts the band to |f| <= analysis_fmax
  TheoryOptions theory;
};

struct ExperimentResult {
  SpectrumResult empirical;
  SpectrumResult theoretical;
  ComparisonMetrics metrics;
  GeneratorGate gate;
  std::size_t nonfinite = 0;
};

/// Per-bin dB differences where theory >= peak - band_db (and |f| <= fmax when set).
inline ComparisonMetrics compare_spectra(const SpectrumResult& sim, const SpectrumResult& theory, double band_db,
                                         double fmax = 0.0) {
  if (sim.psd.size() != theory.psd.size()) throw DomainError("compare_spectra: grids differ");
  for (std::size_t i = 0; i < sim.psd.size(); ++i) {
    if (std::abs(sim.frequencies[i] - theory.frequencies[i]) > 1e-9 * (1.0 + std::abs(theory.frequencies[i]))) {
      throw DomainError("compare_spectra: frequency grids differ");
    }
  }
  const double floor = theory.peak() * std::pow(10.0, -band_db / 10.0);
  std::vector<double> d;
  ComparisonMetrics m;
  m.band_min_f = std::numeric_limits<double>::infinity();
  m.band_max_f = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < theory.psd.size(); ++i) {
    const double f = theory.frequencies[i];
    if (!(theory.psd[i] >= floor) || (fmax > 0.0 && std::abs(f) > fmax)) continue;
    const double db = sim.psd[i] > 0.0 ? 10.0 * std::log10(sim.psd[i] / theory.psd[i])
                                       : -std::numeric_limits<double>::infinity();
    d.push_back(std::abs(db));
    sum += db;
    m.band_min_f = std::min(m.band_min_f, f);
    m.band_max_f = std::max(m.band_max_f, f);
  }
  if (d.empty()) throw DomainError("compare_spectra: empty comparison band");
  std::sort(d.begin(), d.end());
  m.bins = d.size();
  const std::size_t mid = d.size() / 2;
  m.median_abs_db = d.size() % 2 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
  m.p95_abs_db = d[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size()))) - 1];
  m.mean_db = sum / static_cast<double>(d.size());
  return m;
}

inline nlohmann::json to_json(const ComparisonMetrics& m) {
  return {{"bins", m.bins},         {"median_abs_db", m.median_abs_db}, {"p95_abs_db", m.p95_abs_db},
          {"mean_db", m.mean_db},   {"band_min_f", m.band_min_f},       {"band_max_f", m.band_max_f}};
}

/// Theory lag grid matching a Welch segment of the simulation.
inline TauGrid matching_grid(const SimulationConfig& cfg, const WelchOptions& welch) {
  if (welch.segment_len % 2 != 0) throw DomainError("run_experiment: segment length must be even");
  return {cfg.dt, welch.segment_len / 2};
}

/// generate -> gate -> invert -> Welch, against the theoretical spectrum on the same grid.
/// `table` may carry coefficients prebuilt on matching_grid(cfg, welch).
inline ExperimentResult run_experiment(const SimulationConfig& cfg, const WelchOptions& welch,
                                       const ExperimentOptions& opt = {},
                                       const CoefficientTable* table = nullptr) {
  const auto grid = matching_grid(cfg, welch);
  ExperimentResult out;
  {
    const auto w = generate_gaussian(cfg);
    out.gate = generator_gate(w, cfg.kernel, cfg.dt, 20, cfg.threads);
    if (!out.gate.passed) {
      throw QualityError("run_experiment: generator ACF deviates from the kernel by " +
                         format_number(out.gate.max_z) + " sigma");
    }
    const auto inv = invert(w, cfg.omega);
    out.nonfinite = inv.nonfinite;
    out.empirical = welch_covariance_spectrum(inv.samples, cfg.dt, welch);
  }
  std::optional<CoefficientTable> own;
  if (table == nullptr) {
    const int top = cfg.omega.value() == 0.0 ? 0 : opt.N + 4;
    own = build_table(cfg.kernel, grid.positive_lags(), top, opt.theory.threads, {opt.theory.coefficient_rel_tol});
    table = &*own;
  }
  out.theoretical = theoretical_spectrum(*table, cfg.kernel.id(), cfg.kernel.is<FlatBand>(), cfg.omega, opt.N, grid,
                                         opt.theory);
  out.metrics = compare_spectra(out.empirical, out.theoretical, opt.band_db, opt.analysis_fmax);
  return out;
}

}  // namespace invgp
