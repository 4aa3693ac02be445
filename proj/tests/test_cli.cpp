#include "invgp/cli.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace invgp {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("invgp_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "invgp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string out(const std::string& sub) { return (dir_ / sub).string(); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }

  static std::size_t lines(const fs::path& p) {
    const auto s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  }

  static nlohmann::json json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

const std::vector<std::string> kSmallSim = {"simulate", "--omega", "0.8", "--dt", "0.015625", "--samples", "262144",
                                            "--segment", "1024"};

TEST_F(CliTest, CoeffsDefaultGrid) {
  ASSERT_EQ(run({"coeffs", "--out-dir", out("c")}), 0) << err_.str();
  EXPECT_EQ(lines(dir_ / "c" / "coefficients.csv"), 1u + 400u * 11u);
  const auto m = json(dir_ / "c" / "manifest.json");
  EXPECT_EQ(m["subcommand"], "coeffs");
  EXPECT_EQ(m["schema"], kManifestSchema);
  EXPECT_EQ(m["package_version"], kPackageVersion);
  for (const auto& a : m["artifacts"]) EXPECT_TRUE(fs::exists(a.get<std::string>())) << a;
  EXPECT_EQ(m["artifacts"].size(), 3u);  // resolved.conf, coefficients.csv, manifest.json
  for (const auto& e : fs::directory_iterator(dir_ / "c")) {
    EXPECT_EQ(e.path().string().find(".tmp."), std::string::npos) << e.path();
  }
}

TEST_F(CliTest, CoeffsOrderZeroAndJson) {
  ASSERT_EQ(run({"coeffs", "--max-order", "0", "--out-dir", out("c")}), 0);
  const auto csv = slurp(dir_ / "c" / "coefficients.csv");
  EXPECT_EQ(lines(dir_ / "c" / "coefficients.csv"), 401u);
  EXPECT_EQ(csv.find(",2,"), std::string::npos);
  ASSERT_EQ(run({"coeffs", "--format", "json", "--tau-max", "1", "--out-dir", out("j")}), 0);
  const auto j = json(dir_ / "j" / "coefficients.json");
  EXPECT_EQ(j["coefficients"].size(), 11u);
  EXPECT_EQ(j["tau"].size(), 20u);
  EXPECT_NEAR(j["coefficients"][1]["re_omega"][9].get<double>(), omega_n_closed_real(2, std::exp(-0.5)), 1e-12);
  EXPECT_FALSE(fs::exists(dir_ / "j" / "coefficients.csv"));
}

TEST_F(CliTest, CoeffsZeroLagIsDomainError) {
  EXPECT_EQ(run({"coeffs", "--tau-min", "-1", "--tau-max", "1", "--tau-step", "0.5", "--out-dir", out("c")}), 2);
  EXPECT_NE(err_.str().find("tau = 0"), std::string::npos);
}

TEST_F(CliTest, SpectrumSweep) {
  ASSERT_EQ(run({"spectrum", "--omega", "0,0.4,0.8,1.2", "--half-points", "1024", "--out-dir", out("s")}), 0)
      << err_.str();
  std::size_t csv = 0, manifests = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "s")) {
    csv += e.path().extension() == ".csv";
    manifests += e.path().filename() == "manifest.json";
  }
  EXPECT_EQ(csv, 4u);
  EXPECT_EQ(manifests, 1u);
  const auto j = json(dir_ / "s" / "spectrum.json");
  EXPECT_EQ(j["spectra"][0]["dc_line_power"].get<double>(), 0.0);
  EXPECT_NEAR(j["spectra"][3]["dc_line_power"].get<double>(), asymptotic_floor(OmegaRatio(1.2)), 1e-15);
  const auto text = slurp(dir_ / "s" / "spectrum_omega1.2.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "freq,psd,psd_db");
  EXPECT_EQ(lines(dir_ / "s" / "spectrum_omega1.2.csv"), 2049u);
}

TEST_F(CliTest, SpectrumTruncationExitCodeAndRecord) {
  EXPECT_EQ(run({"spectrum", "--omega", "1.2", "--order", "2", "--half-points", "256", "--out-dir", out("a")}), 3);
  ASSERT_EQ(run({"spectrum", "--omega", "1.2", "--order", "2", "--half-points", "256", "--truncation", "record",
                 "--format", "json", "--out-dir", out("b")}),
            0);
  const auto j = json(dir_ / "b" / "spectrum.json");
  EXPECT_TRUE(j["spectra"][0]["metadata"]["truncation_flagged"].get<bool>());
  EXPECT_EQ(j["spectra"][0]["spectrum"]["psd"].size(), 512u);
}

TEST_F(CliTest, SimulateInvalidDt) {
  EXPECT_EQ(run({"simulate", "--dt", "1", "--out-dir", out("x")}), 2);
  EXPECT_EQ(run({"simulate", "--kernel", "gaussian:a=1", "--out-dir", out("x")}), 2);
}

TEST_F(CliTest, SimulateRepeatsByteForByte) {
  auto a = kSmallSim, b = kSmallSim, c = kSmallSim;
  a.insert(a.end(), {"--out-dir", out("a"), "--threads", "1"});
  b.insert(b.end(), {"--out-dir", out("b"), "--threads", "1"});
  c.insert(c.end(), {"--out-dir", out("c"), "--threads", "2"});
  ASSERT_EQ(run(a), 0) << err_.str();
  ASSERT_EQ(run(b), 0);
  ASSERT_EQ(run(c), 0);
  for (const char* f : {"simulate_empirical.csv", "simulate_theory.csv"}) {
    const auto ref = slurp(dir_ / "a" / f);
    EXPECT_FALSE(ref.empty());
    EXPECT_EQ(ref, slurp(dir_ / "b" / f)) << f;
    EXPECT_EQ(ref, slurp(dir_ / "c" / f)) << f;
  }
  const auto rep = json(dir_ / "a" / "simulate_report.json");
  EXPECT_TRUE(rep["generator_gate"]["passed"].get<bool>());
  EXPECT_GT(rep["metrics"]["bins"].get<int>(), 0);
  auto d = kSmallSim;
  d.insert(d.end(), {"--out-dir", out("d"), "--seed", "2"});
  ASSERT_EQ(run(d), 0);
  EXPECT_NE(slurp(dir_ / "a" / "simulate_empirical.csv"), slurp(dir_ / "d" / "simulate_empirical.csv"));
}

TEST_F(CliTest, SampleDumpRoundTrip) {
  auto a = kSmallSim;
  a.insert(a.end(), {"--out-dir", out("a"), "--dump", "inverted", "--format", "json"});
  ASSERT_EQ(run(a), 0) << err_.str();
  const auto samples = read_sample_dump(dir_ / "a" / "samples.f64");
  SimulateParams p;
  p.omega = 0.8;
  p.dt = 1.0 / 64;
  p.n_samples = 262144;
  const auto expected = invert(generate_gaussian(p.config(CommonParams{})), OmegaRatio(0.8)).samples;
  ASSERT_EQ(samples.size(), expected.size());
  EXPECT_TRUE(samples == expected);
  const auto side = json(dir_ / "a" / "samples.f64.json");
  EXPECT_EQ(side["count"], 262144u);
  EXPECT_EQ(side["stream"], "s");
  EXPECT_EQ(side["format"], "float64-le-interleaved");
  EXPECT_EQ(fs::file_size(dir_ / "a" / "samples.f64"), 262144u * 16u);
  const auto m = json(dir_ / "a" / "manifest.json");
  for (const auto& a : m["artifacts"]) EXPECT_TRUE(fs::exists(a.get<std::string>())) << a;
  EXPECT_TRUE(fs::exists(dir_ / "a" / "simulate_spectra.json"));
}

TEST_F(CliTest, ConfigFileFlagsWin) {
  fs::create_directories(dir_);
  {
    std::ofstream cfg(dir_ / "run.conf");
    cfg << "# comment\nmax-order=4\ntau-max=2\nformat=json\n";
  }
  ASSERT_EQ(run({"coeffs", "--config", (dir_ / "run.conf").string(), "--max-order", "2", "--out-dir", out("c")}), 0)
      << err_.str();
  const auto j = json(dir_ / "c" / "coefficients.json");
  EXPECT_EQ(j["orders"].size(), 2u);  // flag wins over the file
  EXPECT_EQ(j["tau"].size(), 40u);    // file value applies
  EXPECT_EQ(run({"coeffs", "--config", (dir_ / "missing.conf").string()}), 2);
}

TEST_F(CliTest, ResolvedConfigReproducesRun) {
  auto a = kSmallSim;
  a.insert(a.end(), {"--out-dir", out("a"), "--averaging", "median", "--fmax", "2"});
  ASSERT_EQ(run(a), 0) << err_.str();
  ASSERT_EQ(run({"simulate", "--config", out("a/resolved.conf"), "--out-dir", out("b")}), 0) << err_.str();
  EXPECT_EQ(slurp(dir_ / "a" / "simulate_empirical.csv"), slurp(dir_ / "b" / "simulate_empirical.csv"));
  auto ma = json(dir_ / "a" / "manifest.json"), mb = json(dir_ / "b" / "manifest.json");
  EXPECT_EQ(ma["parameters"], mb["parameters"]);
  EXPECT_EQ(ma["parameters"]["averaging"], "median");
}

TEST_F(CliTest, Bounds) {
  ASSERT_EQ(run({"bounds", "--kernel", "lorentzian:a=1", "--out-dir", out("l")}), 0);
  EXPECT_NEAR(json(dir_ / "l" / "bounds.json")["l1_bound"].get<double>(), 3.3856, 1e-3);
  ASSERT_EQ(run({"bounds", "--kernel", "gaussian:a=1", "--out-dir", out("g")}), 0);
  EXPECT_NEAR(json(dir_ / "g" / "bounds.json")["l1_bound"].get<double>(), 4.53, 0.01);
  ASSERT_EQ(run({"bounds", "--kernel", "flat", "--out-dir", out("f")}), 0);
  EXPECT_FALSE(json(dir_ / "f" / "bounds.json")["certified"].get<bool>());
  EXPECT_NE(slurp(dir_ / "f" / "bounds.csv").find("\"flat\",0,,,0"), std::string::npos);
  EXPECT_EQ(run({"bounds", "--kernel", "nonsense", "--out-dir", out("n")}), 2);
}

TEST_F(CliTest, ValidateSelectedCriteria) {
  ASSERT_EQ(run({"validate", "quick", "--criteria", "1,2,5", "--out-dir", out("v")}), 0) << err_.str();
  EXPECT_NE(out_.str().find("PASS  criterion 1 "), std::string::npos);
  EXPECT_NE(out_.str().find("PASS  criterion 5 "), std::string::npos);
  const auto j = json(dir_ / "v" / "validation.json");
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["criteria"].size(), 3u);
  EXPECT_EQ(run({"validate", "--criteria", "99", "--out-dir", out("w")}), 2);
  EXPECT_EQ(run({"validate", "everything"}), 2);
}

TEST(ValidationProfiles, Membership) {
  EXPECT_EQ(profile_criteria(Profile::quick), (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 10}));
  EXPECT_EQ(profile_criteria(Profile::full).size(), 11u);
  CriterionResult r(9, "spectrum reproduction");
  r.summary = "worst median 0.7 dB";
  EXPECT_EQ(format_line(r).rfind("FAIL  criterion 9 spectrum reproduction: worst median 0.7 dB", 0), 0u);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"coeffs", "--max-order", "x"}), 2);
  EXPECT_EQ(run({"coeffs", "--format", "xml"}), 2);
  EXPECT_EQ(run({"coeffs", "--help"}), 0);
  EXPECT_EQ(run({"--version"}), 0);
  EXPECT_NE(out_.str().find(kPackageVersion), std::string::npos);
}

}  // namespace
}  // namespace invgp
