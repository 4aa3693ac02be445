#include "invgp/spectrum.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "invgp/simulator.hpp"

namespace invgp {
namespace {

// Continuum spectrum at omega = 0 for r = e^{-|tau|}: tests/oracles/spectrum_oracles.py.
struct ContinuumPoint {
  double f, psd;
};
constexpr ContinuumPoint kContinuum[] = {
    {0.0, 2.77258872223978124}, {0.25, 1.25947059493659254}, {1.0, 0.402780563512196076}, {4.0, 0.114977231329848143}};

std::size_t bin_of(const SpectrumResult& s, double f) {
  const std::size_t L = s.psd.size();
  const double df = s.frequencies[1] - s.frequencies[0];
  return L / 2 + static_cast<std::size_t>(std::llround(f / df));
}

TEST(TauGrid, MidpointLags) {
  const TauGrid g{0.5, 16};
  EXPECT_DOUBLE_EQ(g.lag(0), 0.25);
  EXPECT_DOUBLE_EQ(g.lag(15), 7.75);
  EXPECT_EQ(g.positive_lags().size(), 16u);
  EXPECT_EQ(g.transform_length(), 32u);
  EXPECT_THROW((TauGrid{0.0, 16}.validate()), DomainError);
  EXPECT_THROW((TauGrid{0.1, 15}.validate()), DomainError);
}

TEST(TheoreticalSpectrum, OmegaZeroLorentzianShape) {
  const TauGrid g{1.0 / 64, 2048};
  const auto s = theoretical_spectrum(Lorentzian{1.0}, OmegaRatio(0.0), 0, g);
  const std::size_t L = s.psd.size(), mid = L / 2;
  EXPECT_EQ(s.dc_line_power, 0.0);
  EXPECT_EQ(std::max_element(s.psd.begin(), s.psd.end()) - s.psd.begin(), static_cast<std::ptrdiff_t>(mid));
  for (std::size_t j = 1; j < mid; ++j) EXPECT_NEAR(s.psd[mid + j], s.psd[mid - j], 1e-12 * s.peak());
  EXPECT_DOUBLE_EQ(s.frequencies[mid], 0.0);
  EXPECT_DOUBLE_EQ(s.frequencies[mid + 1], 1.0 / (L * g.dtau));
  EXPECT_FALSE(s.metadata["taper"].get<bool>());
}

TEST(TheoreticalSpectrum, MatchesContinuumUpToMidpointOffset) {
  // The midpoint rule at the logarithmic singularity shifts every bin by -ln 2 dtau;
  // the remainder is second order, dtau^2 ln(1/dtau).
  for (double inv : {256.0, 1024.0}) {
    const TauGrid g{1.0 / inv, static_cast<std::size_t>(32 * inv)};
    const auto s = theoretical_spectrum(Lorentzian{1.0}, OmegaRatio(0.0), 0, g);
    const double tol = 0.3 * g.dtau * g.dtau * std::log(inv);
    for (const auto& p : kContinuum) {
      EXPECT_NEAR(s.psd[bin_of(s, p.f)], p.psd - std::numbers::ln2 * g.dtau, tol) << p.f << " " << inv;
    }
  }
}

TEST(TheoreticalSpectrum, FftMatchesDirectMidpointSum) {
  const TauGrid g{0.125, 64};
  const double omega = 0.8;
  const auto s = theoretical_spectrum(Lorentzian{1.0}, OmegaRatio(omega), 20, g);
  for (std::size_t j : {std::size_t{64}, std::size_t{65}, std::size_t{80}, std::size_t{3}}) {
    const double f = s.frequencies[j];
    double direct = 0.0;
    for (std::size_t k = 0; k < g.half_points; ++k) {
      const double c = autocovariance(std::exp(-g.lag(k)), OmegaRatio(omega), 20).value.real();
      direct += 2.0 * g.dtau * c * std::cos(2.0 * std::numbers::pi * f * g.lag(k));
    }
    EXPECT_NEAR(s.psd[j], direct, 1e-6 * s.peak()) << j;
  }
}

TEST(TheoreticalSpectrum, DcLineIsFloor) {
  const TauGrid g{1.0 / 16, 512};
  const auto s = theoretical_spectrum(Lorentzian{1.0}, OmegaRatio(1.0), 20, g);
  EXPECT_NEAR(s.dc_line_power, 0.39957640089372805, 1e-15);
  EXPECT_FALSE(s.metadata["truncation_flagged"].get<bool>());
}

TEST(TheoreticalSpectrum, TruncationGuard) {
  const TauGrid g{1.0 / 16, 512};
  EXPECT_THROW(theoretical_spectrum(Lorentzian{1.0}, OmegaRatio(1.2), 2, g), TruncationError);
  TheoryOptions rec;
  rec.truncation_policy = TruncationPolicy::record;
  const auto s = theoretical_spectrum(Lorentzian{1.0}, OmegaRatio(1.2), 2, g, rec);
  EXPECT_TRUE(s.metadata["truncation_flagged"].get<bool>());
  EXPECT_GT(s.metadata["truncation_estimate"].get<double>(), 1e-2 * s.peak());
}

TEST(TheoreticalSpectrum, TableMustMatchGrid) {
  const TauGrid g{0.1, 32};
  const auto table = build_table(Lorentzian{1.0}, TauGrid{0.2, 32}.positive_lags(), 4);
  EXPECT_THROW(theoretical_spectrum(table, "lorentzian:a=1", false, OmegaRatio(0.0), 0, g), DomainError);
  const auto ok = build_table(Lorentzian{1.0}, g.positive_lags(), 4);
  EXPECT_THROW(theoretical_spectrum(ok, "lorentzian:a=1", false, OmegaRatio(0.5), 2, g), DomainError);
  EXPECT_NO_THROW(theoretical_spectrum(ok, "lorentzian:a=1", false, OmegaRatio(0.0), 2, g));
}

TEST(TheoreticalSpectrum, FlatBandIsTapered) {
  const TauGrid g{0.25, 1024};
  const auto s = theoretical_spectrum(FlatBand{}, OmegaRatio(0.5), 10, g);
  EXPECT_TRUE(s.metadata["taper"].get<bool>());
  EXPECT_GT(s.psd[bin_of(s, 0.0)], 3.0 * s.psd[bin_of(s, 0.4)]);
  EXPECT_EQ(s.dc_line_power, asymptotic_floor(OmegaRatio(0.5)));
}

TEST(TheoreticalSpectrum, InversionMirrorsDopplerShift) {
  // w peaks at -beta/(2 pi); 1/w = w*/|w|^2 conjugates the phase.
  const double beta = 2.0;
  const TauGrid g{1.0 / 32, 1024};
  const auto s = theoretical_spectrum(DopplerLorentzian{1.0, beta}, OmegaRatio(0.0), 0, g);
  const auto peak = std::max_element(s.psd.begin(), s.psd.end()) - s.psd.begin();
  const double df = s.frequencies[1] - s.frequencies[0];
  EXPECT_NEAR(s.frequencies[peak], beta / (2.0 * std::numbers::pi), df);
}

TEST(TheoreticalSpectrum, ParsevalGrowsLogarithmically) {
  // Fixed lag span 32; each halving of dtau adds about the same power.
  std::vector<double> total;
  for (double inv : {16.0, 32.0, 64.0}) {
    const TauGrid g{1.0 / inv, static_cast<std::size_t>(32 * inv)};
    const auto s = theoretical_spectrum(Lorentzian{1.0}, OmegaRatio(0.0), 0, g);
    const double df = s.frequencies[1] - s.frequencies[0];
    total.push_back(pairwise_sum(std::span<const double>(s.psd)) * df);
  }
  const double ratio = (total[2] - total[1]) / (total[1] - total[0]);
  EXPECT_NEAR(ratio, 1.0, 0.3);
  EXPECT_GT(total[1] - total[0], 0.0);
}

TEST(TailSlope, PowerLaws) {
  SpectrumResult s;
  for (int j = -1000; j < 1000; ++j) {
    const double f = j * 0.01;
    s.frequencies.push_back(f);
    s.psd.push_back(f == 0.0 ? 1.0 : 1.0 / std::abs(f));
  }
  EXPECT_NEAR(tail_slope(s, 0.5, 5.0), -1.0, 1e-12);
  for (std::size_t i = 0; i < s.psd.size(); ++i) s.psd[i] = std::pow(s.psd[i], 2.0);
  EXPECT_NEAR(tail_slope(s, 0.5, 5.0), -2.0, 1e-12);
  EXPECT_THROW(tail_slope(s, 0.5, 4.0), DomainError);
  EXPECT_THROW(tail_slope(s, 1.0, 20.0), DomainError);
  EXPECT_THROW(tail_slope(s, 0.0, 5.0), DomainError);
}

TEST(Welch, ConstantInputVanishes) {
  std::vector<cplx> x(1 << 16, cplx(2.0, -1.0));
  const auto s = welch_covariance_spectrum(x, 0.1);
  for (double v : s.psd) EXPECT_LT(std::abs(v), 1e-25);
  EXPECT_NEAR(s.dc_line_power, 5.0, 1e-12);
  EXPECT_EQ(s.metadata["segment_len"], 4096);
  EXPECT_EQ(s.metadata["window"], "hann");
}

TEST(Welch, WhiteNoiseLevel) {
  const double dt = 0.5;
  const auto x = white_noise(std::size_t{1} << 20, 42);
  WelchOptions opt;
  opt.segment_len = 1024;
  const auto s = welch_covariance_spectrum(x, dt, opt);
  const auto K = s.metadata["segments"].get<double>();
  // Hann at 50% overlap: variance factor 1 + 2 c^2 with c = 1/6.
  const double sigma = std::sqrt((1.0 + 2.0 / 36.0) / K);
  double mean = 0.0;
  std::size_t outside = 0;
  for (double v : s.psd) {
    mean += v / dt;
    if (std::abs(v / dt - 1.0) > 3.0 * sigma) ++outside;
  }
  mean /= static_cast<double>(s.psd.size());
  // Adjacent Hann bins are correlated; count a quarter of them as independent.
  EXPECT_NEAR(mean, 1.0, 3.0 * sigma / std::sqrt(s.psd.size() / 4.0));
  EXPECT_LT(outside, s.psd.size() / 100);
}

TEST(Welch, MedianAveragingWhiteNoise) {
  const auto x = white_noise(std::size_t{1} << 19, 7);
  WelchOptions opt;
  opt.segment_len = 512;
  opt.averaging = Averaging::median;
  const auto s = welch_covariance_spectrum(x, 1.0, opt);
  double mean = 0.0;
  for (double v : s.psd) mean += v;
  mean /= static_cast<double>(s.psd.size());
  EXPECT_NEAR(mean, 1.0, 0.02);
  EXPECT_EQ(s.metadata["averaging"], "median");
}

TEST(Welch, Ar1MatchesDiscreteLorentzian) {
  SimulationConfig cfg;
  cfg.kernel = Lorentzian{1.0};
  cfg.dt = 0.1;
  cfg.n_samples = std::size_t{1} << 21;
  cfg.seed = 99;
  const auto w = generate_gaussian(cfg);
  WelchOptions opt;
  opt.segment_len = 1024;
  const auto s = welch_covariance_spectrum(w, cfg.dt, opt);
  const double rho = std::exp(-cfg.dt);
  const double sigma = std::sqrt((1.0 + 2.0 / 36.0) / s.metadata["segments"].get<double>());
  std::size_t outside = 0, bins = 0;
  for (std::size_t j = 0; j < s.psd.size(); ++j) {
    const double f = s.frequencies[j];
    if (std::abs(f) > 2.0) continue;
    const double expect = cfg.dt * (1.0 - rho * rho) / std::norm(1.0 - rho * std::polar(1.0, -2.0 * std::numbers::pi * f * cfg.dt));
    if (std::abs(s.psd[j] / expect - 1.0) > 3.0 * sigma) ++outside;
    ++bins;
  }
  EXPECT_LT(outside, bins / 50 + 1);
}

TEST(Welch, PhaseRotationInvariant) {
  auto x = white_noise(std::size_t{1} << 16, 3);
  const auto a = welch_covariance_spectrum(x, 1.0);
  for (auto& v : x) v *= std::polar(1.0, 0.7);
  const auto b = welch_covariance_spectrum(x, 1.0);
  for (std::size_t j = 0; j < a.psd.size(); ++j) EXPECT_NEAR(a.psd[j], b.psd[j], 1e-12 * a.peak());
}

TEST(Welch, ThreadCountDoesNotChangeBits) {
  const auto x = white_noise(std::size_t{1} << 17, 5);
  WelchOptions one, four;
  one.threads = 1;
  four.threads = 4;
  EXPECT_EQ(welch_covariance_spectrum(x, 1.0, one).psd, welch_covariance_spectrum(x, 1.0, four).psd);
}

TEST(Welch, Errors) {
  const auto x = white_noise(std::size_t{1} << 16, 1);
  WelchOptions opt;
  opt.segment_len = 8192;
  EXPECT_THROW(welch_covariance_spectrum(x, 1.0, opt), QualityError);  // 15 segments
  opt.segment_len = 1 << 17;
  EXPECT_THROW(welch_covariance_spectrum(x, 1.0, opt), DomainError);
  opt.segment_len = 1024;
  opt.overlap = 0.95;
  EXPECT_THROW(welch_covariance_spectrum(x, 1.0, opt), DomainError);
  EXPECT_THROW(welch_covariance_spectrum(x, 0.0), DomainError);
}

TEST(SpectrumResult, CsvColumns) {
  SpectrumResult s;
  s.frequencies = {-0.5, 0.0};
  s.psd = {0.1, 0.0};
  std::ostringstream os;
  s.write_csv(os);
  EXPECT_EQ(os.str(), "freq,psd,psd_db\n-0.5,0.1,-10\n0,0,-inf\n");
}

}  // namespace
}  // namespace invgp
