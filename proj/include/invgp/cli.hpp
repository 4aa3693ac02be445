#pragma once

// Command-line front end. Exit codes: 0 ok, 1 validation failure, 2 usage or
// domain error, 3 accuracy or truncation flag.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "errors.hpp"
#include "validation.hpp"

namespace invgp::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kUsage = 2, kAccuracy = 3 };

struct CommonFlags {
  CommonParams params;
  std::string format = "csv";
};

inline void add_common(CLI::App* sub, CommonFlags& c) {
  sub->add_option("--config", "key=value file with long option names as keys; flags take precedence");
  sub->add_option("--seed", c.params.seed, "64-bit RNG seed")->capture_default_str();
  sub->add_option("--out-dir", c.params.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--format", c.format, "Data file format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  sub->add_option("--threads", c.params.threads, "Worker threads; 0 uses all cores")->capture_default_str();
}

template <class Enum>
CLI::Option* add_enum(CLI::App* sub, const std::string& name, Enum& target, const std::map<std::string, Enum>& names,
                      const std::string& help) {
  std::string text, current;
  for (const auto& [key, value] : names) {
    text += (text.empty() ? "{" : ",") + key;
    if (value == target) current = key;
  }
  return sub->add_option(name, target, help)
      ->transform(CLI::CheckedTransformer(names, CLI::ignore_case).description(""))
      ->option_text(text + "}")
      ->default_str(current);
}

inline const std::map<std::string, TruncationPolicy> kTruncationNames = {{"raise", TruncationPolicy::raise},
                                                                         {"record", TruncationPolicy::record}};

inline std::string strip(std::string_view v) {
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
  return std::string(v);
}

/// Removes `--config PATH` from args and appends `--key value` for every file entry
/// whose key is absent from the command line. Lists may be written [a, b].
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = strip(line);
    if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = strip(std::string_view(t).substr(0, eq));
    std::string value = strip(std::string_view(t).substr(eq + 1));
    if (key == "config" || given.count(key) != 0) continue;
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
      std::string joined;
      for (char ch : value.substr(1, value.size() - 2)) {
        if (ch != ' ') joined += ch;
      }
      value = joined;
    }
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

/// Parses and runs one subcommand. Diagnostics go to `err`, verdict lines to `out`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Autocorrelation, bounds and covariance spectra of s = 1/(w + w0) for complex Gaussian w"};
  app.set_version_flag("--version", std::string(kPackageVersion));
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  CommonFlags common;

  CoeffsParams coeffs;
  auto* c_cmd = app.add_subcommand("coeffs", "Tabulate Omega_n and Omega'_n on a lag grid");
  add_common(c_cmd, common);
  c_cmd->add_option("--kernel", coeffs.kernel, "lorentzian:a=1 | gaussian:a=1 | flat | doppler:a=1,beta=2 | tabulated:file.csv")
      ->capture_default_str();
  c_cmd->add_option("--tau-min", coeffs.tau_min, "First lag")->capture_default_str();
  c_cmd->add_option("--tau-max", coeffs.tau_max, "Last lag")->capture_default_str();
  c_cmd->add_option("--tau-step", coeffs.tau_step, "Lag step")->capture_default_str();
  c_cmd->add_option("--max-order", coeffs.max_order, "Highest even order")->capture_default_str();
  c_cmd->add_option("--rel-tol", coeffs.rel_tol, "Relative accuracy target per coefficient")->capture_default_str();

  SpectrumParams spectrum;
  auto* s_cmd = app.add_subcommand("spectrum", "Theoretical covariance spectrum, optionally swept over omega");
  add_common(s_cmd, common);
  s_cmd->add_option("--kernel", spectrum.kernel, "Correlation kernel")->capture_default_str();
  s_cmd->add_option("--omega", spectrum.omegas, "Mean-to-deviation ratio; comma list sweeps")
      ->delimiter(',')
      ->capture_default_str();
  s_cmd->add_option("--order", spectrum.N, "Series truncation order N (even)")->capture_default_str();
  s_cmd->add_option("--dtau", spectrum.dtau, "Lag step of the midpoint grid")->capture_default_str();
  s_cmd->add_option("--half-points", spectrum.half_points, "Positive lags on the grid")->capture_default_str();
  add_enum(s_cmd, "--taper", spectrum.taper,
           {{"auto", TaperMode::automatic}, {"on", TaperMode::on}, {"off", TaperMode::off}},
           "Raised-cosine taper on the outer lags");
  add_enum(s_cmd, "--truncation", spectrum.truncation, kTruncationNames, "Truncation diagnostic policy");
  s_cmd->add_option("--rel-tol", spectrum.coefficient_rel_tol, "Coefficient relative accuracy")->capture_default_str();

  SimulateParams sim;
  auto* m_cmd = app.add_subcommand("simulate", "Simulate, invert and compare the Welch spectrum with theory");
  add_common(m_cmd, common);
  m_cmd->add_option("--kernel", sim.kernel, "lorentzian:a=... or flat")->capture_default_str();
  m_cmd->add_option("--omega", sim.omega, "Mean-to-deviation ratio")->capture_default_str();
  m_cmd->add_option("--dt", sim.dt, "Sample interval")->capture_default_str();
  m_cmd->add_option("--samples", sim.n_samples, "Number of samples")->capture_default_str();
  m_cmd->add_option("--fir-taps", sim.fir_taps, "FlatBand FIR length (odd)")->capture_default_str();
  m_cmd->add_option("--upsample", sim.upsample, "FlatBand interpolation factor")->capture_default_str();
  m_cmd->add_option("--order", sim.N, "Series truncation order N for the theory")->capture_default_str();
  m_cmd->add_option("--segment", sim.welch.segment_len, "Welch segment length (even)")->capture_default_str();
  m_cmd->add_option("--overlap", sim.welch.overlap, "Welch segment overlap fraction")->capture_default_str();
  add_enum(m_cmd, "--window", sim.welch.window, {{"hann", WindowKind::hann}, {"rectangular", WindowKind::rectangular}},
           "Welch window");
  add_enum(m_cmd, "--averaging", sim.welch.averaging, {{"mean", Averaging::mean}, {"median", Averaging::median}},
           "Segment averaging");
  m_cmd->add_option("--band-db", sim.band_db, "Comparison band below the theoretical peak")->capture_default_str();
  m_cmd->add_option("--fmax", sim.analysis_fmax, "Also restrict the comparison to |f| <= fmax (0: off)")
      ->capture_default_str();
  add_enum(m_cmd, "--truncation", sim.truncation, kTruncationNames, "Truncation diagnostic policy");
  add_enum(m_cmd, "--dump", sim.dump,
           {{"none", DumpMode::none}, {"gaussian", DumpMode::gaussian}, {"inverted", DumpMode::inverted}},
           "Write the raw w or s stream as float64 pairs");

  std::string profile = "quick";
  std::vector<int> only;
  auto* v_cmd = app.add_subcommand("validate", "Run the acceptance checks");
  add_common(v_cmd, common);
  v_cmd->add_option("profile,--profile", profile, "quick: oracle and closed-form checks; full: adds simulations")
      ->check(CLI::IsMember({"quick", "full"}))
      ->capture_default_str();
  v_cmd->add_option("--criteria", only, "Run only these criterion ids")->delimiter(',');

  BoundsParams bounds;
  auto* b_cmd = app.add_subcommand("bounds", "Integrability report for a kernel");
  add_common(b_cmd, common);
  b_cmd->add_option("--kernel", bounds.kernel, "Correlation kernel")->capture_default_str();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const ConfigError& e) {
    err << "config: " << e.what() << '\n';
    return kUsage;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  common.params.format = common.format == "json" ? OutputFormat::json : OutputFormat::csv;
  common.params.resolved_config = active->config_to_str(true, false);

  try {
    if (active == c_cmd) {
      cmd_coeffs(coeffs, common.params);
    } else if (active == s_cmd) {
      cmd_spectrum(spectrum, common.params);
    } else if (active == m_cmd) {
      cmd_simulate(sim, common.params);
    } else if (active == b_cmd) {
      cmd_bounds(bounds, common.params);
    } else {
      ValidationOptions vo;
      vo.threads = common.params.threads;
      vo.seed = common.params.seed;
      const auto ids = only.empty() ? profile_criteria(profile == "full" ? Profile::full : Profile::quick) : only;
      detail::ManifestBuilder mb("validate", common.params, {{"profile", profile}, {"criteria", ids}});
      nlohmann::json verdict = {{"profile", profile}, {"criteria", nlohmann::json::array()}};
      std::vector<CriterionResult> results;
      bool ok = true;
      for (int id : ids) {
        const auto r = run_criterion(id, vo);
        out << format_line(r) << std::endl;
        ok = ok && r.passed;
        verdict["criteria"].push_back(r.to_json());
        results.push_back(r);
      }
      verdict["passed"] = ok;
      atomic_write_json(mb.path("validation.json"), verdict);
      if (common.params.format == OutputFormat::csv) {
        atomic_write_with(mb.path("validation.csv"), [&](std::ostream& os) {
          os << "id,name,passed,seconds\n";
          for (const auto& r : results) {
            os << r.id << ",\"" << r.name << "\"," << r.passed << ',' << format_number(r.seconds) << '\n';
          }
        });
      }
      mb.finish();
      if (!ok) {
        for (const auto& r : results) {
          if (!r.passed) err << "validation failed: criterion " << r.id << " (" << r.name << ")\n";
        }
        return kValidationFailure;
      }
    }
  } catch (const AccuracyError& e) {
    err << "accuracy: " << e.what() << '\n';
    return kAccuracy;
  } catch (const TruncationError& e) {
    err << "truncation: " << e.what() << '\n';
    return kAccuracy;
  } catch (const QualityError& e) {
    err << "quality: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::invalid_argument& e) {  // ConfigError, UnsupportedOrderError
    err << "config: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "domain: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
  return kOk;
}

}  // namespace invgp::cli
