#pragma once

// Subcommand bodies shared by the CLI and the validation suite. Each writes its
// artifacts under out_dir and returns a manifest listing them.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "coefficients.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "simulator.hpp"
#include "spectrum.hpp"

namespace invgp {

enum class OutputFormat { csv, json };

struct CommonParams {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::csv;
  unsigned threads = 0;
  std::string resolved_config;  // written as resolved.conf when set; reruns the command via --config
};

namespace detail {

class ManifestBuilder {
 public:
  ManifestBuilder(std::string subcommand, const CommonParams& common, nlohmann::json parameters)
      : common_(common), start_(std::chrono::steady_clock::now()) {
    manifest_.subcommand = std::move(subcommand);
    manifest_.seed = common.seed;
    parameters["format"] = common.format == OutputFormat::csv ? "csv" : "json";
    parameters["threads"] = common.threads;
    manifest_.parameters = std::move(parameters);
    if (!common.resolved_config.empty()) atomic_write(path("resolved.conf"), common.resolved_config);
  }

  std::filesystem::path path(const std::string& name) {
    const auto p = common_.out_dir / name;
    manifest_.artifacts.push_back(p.string());
    return p;
  }

  RunManifest finish() {
    manifest_.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto p = common_.out_dir / "manifest.json";
    manifest_.artifacts.push_back(p.string());
    atomic_write_json(p, manifest_.to_json());
    return manifest_;
  }

  RunManifest& manifest() { return manifest_; }

 private:
  CommonParams common_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

inline nlohmann::json spectrum_arrays(const SpectrumResult& s) {
  return {{"freq", s.frequencies}, {"psd", s.psd}};
}

inline std::string omega_tag(double omega) { return "omega" + format_number(omega); }

}  // namespace detail

struct CoeffsParams {
  std::string kernel = "lorentzian:a=1";
  double tau_min = 0.05;
  double tau_max = 20.0;
  double tau_step = 0.05;
  int max_order = 20;
  double rel_tol = 1e-13;

  /// tau_min + k tau_step for k = 0 .. round((tau_max - tau_min) / tau_step).
  std::vector<double> lags() const {
    if (!(tau_step > 0.0) || !std::isfinite(tau_step)) throw DomainError("coeffs: tau step must be > 0");
    if (!(tau_max >= tau_min) || !std::isfinite(tau_min) || !std::isfinite(tau_max)) {
      throw DomainError("coeffs: need finite tau_min <= tau_max");
    }
    const auto count = static_cast<std::size_t>(std::llround((tau_max - tau_min) / tau_step)) + 1;
    if (count > 10'000'000) throw DomainError("coeffs: lag grid too large");
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
      const double t = tau_min + static_cast<double>(k) * tau_step;
      out[k] = std::abs(t) < 1e-9 * tau_step ? 0.0 : t;
    }
    return out;
  }

  nlohmann::json to_json() const {
    return {{"kernel", kernel},     {"tau_min", tau_min},     {"tau_max", tau_max},
            {"tau_step", tau_step}, {"max_order", max_order}, {"rel_tol", rel_tol}};
  }
};

inline RunManifest cmd_coeffs(const CoeffsParams& p, const CommonParams& common) {
  detail::ManifestBuilder mb("coeffs", common, p.to_json());
  const auto kernel = parse_kernel(p.kernel);
  const auto table = build_table(kernel, p.lags(), p.max_order, common.threads, {p.rel_tol});
  if (common.format == OutputFormat::csv) {
    atomic_write_with(mb.path("coefficients.csv"), [&](std::ostream& os) { table.write_csv(os); });
  } else {
    nlohmann::json j = {{"kernel", kernel.id()}, {"orders", table.orders}, {"tau", table.lags}};
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < table.orders.size(); ++i) {
      std::vector<double> re, im, cre, cim;
      for (std::size_t k = 0; k < table.lags.size(); ++k) {
        re.push_back(table.values[i][k].real());
        im.push_back(table.values[i][k].imag());
        cre.push_back(table.centered[i][k].real());
        cim.push_back(table.centered[i][k].imag());
      }
      rows.push_back({{"n", table.orders[i]},
                      {"re_omega", re},
                      {"im_omega", im},
                      {"re_omega_prime", cre},
                      {"im_omega_prime", cim}});
    }
    j["coefficients"] = rows;
    atomic_write_json(mb.path("coefficients.json"), j);
  }
  return mb.finish();
}

enum class TaperMode { automatic, on, off };

struct SpectrumParams {
  std::string kernel = "lorentzian:a=1";
  std::vector<double> omegas = {0.0};
  int N = 20;
  double dtau = 1.0 / 64;
  std::size_t half_points = 4096;
  TaperMode taper = TaperMode::automatic;
  TruncationPolicy truncation = TruncationPolicy::raise;
  double coefficient_rel_tol = 1e-8;

  nlohmann::json to_json() const {
    return {{"kernel", kernel},
            {"omegas", omegas},
            {"N", N},
            {"dtau", dtau},
            {"half_points", half_points},
            {"taper", taper == TaperMode::automatic ? "auto" : taper == TaperMode::on ? "on" : "off"},
            {"truncation", truncation == TruncationPolicy::raise ? "raise" : "record"},
            {"coefficient_rel_tol", coefficient_rel_tol}};
  }
};

/// One coefficient table serves every omega of the sweep.
inline RunManifest cmd_spectrum(const SpectrumParams& p, const CommonParams& common) {
  detail::ManifestBuilder mb("spectrum", common, p.to_json());
  if (p.omegas.empty()) throw ConfigError("spectrum: at least one omega is required");
  const auto kernel = parse_kernel(p.kernel);
  const TauGrid grid{p.dtau, p.half_points};
  grid.validate();
  bool any_positive = false;
  for (double w : p.omegas) {
    OmegaRatio check(w);
    any_positive = any_positive || check.value() > 0.0;
  }
  const int top = any_positive ? p.N + 4 : 0;
  const auto table = build_table(kernel, grid.positive_lags(), top, common.threads, {p.coefficient_rel_tol});
  const bool taper = p.taper == TaperMode::automatic ? kernel.is<FlatBand>() : p.taper == TaperMode::on;
  TheoryOptions opts;
  opts.threads = common.threads;
  opts.coefficient_rel_tol = p.coefficient_rel_tol;
  opts.truncation_policy = p.truncation;

  nlohmann::json summary = {{"kernel", kernel.id()}, {"spectra", nlohmann::json::array()}};
  for (double w : p.omegas) {
    const auto s = theoretical_spectrum(table, kernel.id(), taper, OmegaRatio(w), p.N, grid, opts);
    nlohmann::json entry = {{"omega", w}, {"dc_line_power", s.dc_line_power}, {"metadata", s.metadata}};
    if (common.format == OutputFormat::csv) {
      const auto path = mb.path("spectrum_" + detail::omega_tag(w) + ".csv");
      atomic_write_with(path, [&](std::ostream& os) { s.write_csv(os); });
      entry["csv"] = path.filename().string();
    } else {
      entry["spectrum"] = detail::spectrum_arrays(s);
    }
    summary["spectra"].push_back(entry);
  }
  atomic_write_json(mb.path("spectrum.json"), summary);
  return mb.finish();
}

enum class DumpMode { none, gaussian, inverted };

struct SimulateParams {
  std::string kernel = "lorentzian:a=1";
  double omega = 0.0;
  double dt = 1.0 / 256;
  std::size_t n_samples = std::size_t{1} << 22;
  std::size_t fir_taps = 1025;
  std::size_t upsample = 1;
  int N = 20;
  WelchOptions welch;
  double band_db = 40.0;
  double analysis_fmax = 0.0;
  TruncationPolicy truncation = TruncationPolicy::raise;
  DumpMode dump = DumpMode::none;

  SimulationConfig config(const CommonParams& common) const {
    SimulationConfig c;
    c.kernel = parse_kernel(kernel);
    c.omega = OmegaRatio(omega);
    c.dt = dt;
    c.n_samples = n_samples;
    c.seed = common.seed;
    c.fir_taps = fir_taps;
    c.upsample = upsample;
    c.threads = common.threads;
    return c;
  }

  nlohmann::json to_json() const {
    return {{"kernel", kernel},
            {"omega", omega},
            {"dt", dt},
            {"n_samples", n_samples},
            {"fir_taps", fir_taps},
            {"upsample", upsample},
            {"N", N},
            {"segment_len", welch.segment_len},
            {"overlap", welch.overlap},
            {"window", welch.window == WindowKind::hann ? "hann" : "rectangular"},
            {"averaging", welch.averaging == Averaging::mean ? "mean" : "median"},
            {"band_db", band_db},
            {"analysis_fmax", analysis_fmax},
            {"truncation", truncation == TruncationPolicy::raise ? "raise" : "record"},
            {"dump", dump == DumpMode::none ? "none" : dump == DumpMode::gaussian ? "gaussian" : "inverted"}};
  }
};

inline RunManifest cmd_simulate(const SimulateParams& p, const CommonParams& common) {
  detail::ManifestBuilder mb("simulate", common, p.to_json());
  const auto cfg = p.config(common);
  cfg.validate();
  WelchOptions welch = p.welch;
  welch.threads = common.threads;
  ExperimentOptions opt;
  opt.N = p.N;
  opt.band_db = p.band_db;
  opt.analysis_fmax = p.analysis_fmax;
  opt.theory.threads = common.threads;
  opt.theory.truncation_policy = p.truncation;
  const auto res = run_experiment(cfg, welch, opt);

  if (common.format == OutputFormat::csv) {
    atomic_write_with(mb.path("simulate_empirical.csv"), [&](std::ostream& os) { res.empirical.write_csv(os); });
    atomic_write_with(mb.path("simulate_theory.csv"), [&](std::ostream& os) { res.theoretical.write_csv(os); });
  } else {
    atomic_write_json(mb.path("simulate_spectra.json"),
                      {{"empirical", detail::spectrum_arrays(res.empirical)},
                       {"theoretical", detail::spectrum_arrays(res.theoretical)}});
  }
  const nlohmann::json gate = {{"lags", res.gate.lags},
                               {"max_z", res.gate.max_z},
                               {"passed", res.gate.passed}};
  atomic_write_json(mb.path("simulate_report.json"),
                    {{"config", cfg.to_json()},
                     {"metrics", to_json(res.metrics)},
                     {"generator_gate", gate},
                     {"nonfinite_samples", res.nonfinite},
                     {"empirical", res.empirical.metadata},
                     {"empirical_dc_line_power", res.empirical.dc_line_power},
                     {"theoretical", res.theoretical.metadata},
                     {"theoretical_dc_line_power", res.theoretical.dc_line_power}});
  if (p.dump != DumpMode::none) {
    auto w = generate_gaussian(cfg);
    nlohmann::json header = cfg.to_json();
    header["stream"] = p.dump == DumpMode::gaussian ? "w" : "s";
    if (p.dump == DumpMode::inverted) w = invert(w, cfg.omega).samples;
    write_sample_dump(mb.path("samples.f64"), w, header);
    mb.manifest().artifacts.push_back((common.out_dir / "samples.f64.json").string());
  }
  return mb.finish();
}

struct BoundsParams {
  std::string kernel = "lorentzian:a=1";
  nlohmann::json to_json() const { return {{"kernel", kernel}}; }
};

inline RunManifest cmd_bounds(const BoundsParams& p, const CommonParams& common) {
  detail::ManifestBuilder mb("bounds", common, p.to_json());
  const auto rep = integrability_report(parse_kernel(p.kernel));
  atomic_write_json(mb.path("bounds.json"), to_json(rep));
  if (common.format == OutputFormat::csv) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    atomic_write_with(mb.path("bounds.csv"), [&](std::ostream& os) {
      os << "kernel,certified,l1_bound,l1_numeric,satisfied\n"
         << '"' << rep.kernel_id << '"' << ',' << rep.certified << ',' << opt(rep.l1_bound) << ','
         << opt(rep.l1_numeric) << ',' << rep.satisfied << '\n';
    });
  }
  return mb.finish();
}

}  // namespace invgp
