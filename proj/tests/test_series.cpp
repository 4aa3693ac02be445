#include "invgp/series.hpp"

#include <gtest/gtest.h>

namespace invgp {
namespace {

// Quadrature references: tests/oracles/series_oracles.py.
constexpr double kQuad_05_05 = 0.604879925345610;
constexpr double kQuad_05_10 = 0.577147374998089;
constexpr double kQuad_03_12 = 0.462669675523802;

TEST(OmegaRatio, Construction) {
  EXPECT_EQ(OmegaRatio().value(), 0.0);
  EXPECT_DOUBLE_EQ(OmegaRatio::from_mean(3.0, 4.0).value(), 1.5);
  EXPECT_DOUBLE_EQ(OmegaRatio::from_mean(-3.0, 4.0).value(), 1.5);
  EXPECT_THROW(OmegaRatio(-0.1), DomainError);
  EXPECT_THROW(OmegaRatio(NAN), DomainError);
  EXPECT_THROW(OmegaRatio::from_mean(1.0, 0.0), DomainError);
}

TEST(AsymptoticFloor, Values) {
  EXPECT_EQ(asymptotic_floor(OmegaRatio(0.0)), 0.0);
  EXPECT_NEAR(asymptotic_floor(OmegaRatio(1.0)), 0.39957640089372805, 1e-16);
  EXPECT_NEAR(asymptotic_floor(OmegaRatio(1.2)), 0.40436058713186812, 1e-16);
  EXPECT_NEAR(asymptotic_floor(OmegaRatio(1e-8)), 1e-16, 1e-30);
}

TEST(AsymptoticFloor, PartialSumConverges) {
  for (double w : {0.25, 0.5, 1.0, 1.2}) {
    const double f = asymptotic_floor(OmegaRatio(w));
    EXPECT_LT(std::abs(asymptotic_floor_partial(OmegaRatio(w), 40) - f) / f, 1e-8) << w;
  }
}

TEST(Autocorrelation, OmegaZeroKeepsOnlyLeadingOrder) {
  for (int N : {0, 2, 20}) {
    const auto s = autocorrelation(0.5, OmegaRatio(0.0), N);
    EXPECT_NEAR(s.value.real(), 0.5753641449035618, 1e-15);
    EXPECT_FALSE(s.flagged);
  }
}

TEST(Autocorrelation, VanishingCorrelationGivesFloor) {
  const auto s = autocorrelation(0.0, OmegaRatio(1.0), 40);
  EXPECT_NEAR(s.value.real(), 0.39957640089372805, 1e-12);
  const auto t = autocorrelation(1e-12, OmegaRatio(1.0), 40);
  EXPECT_NEAR(t.value.real(), 0.3995764, 1e-7);
}

TEST(Autocorrelation, MatchesQuadrature) {
  EXPECT_NEAR(autocorrelation(0.5, OmegaRatio(0.5), 20).value.real(), kQuad_05_05, 1e-4);
  EXPECT_NEAR(autocorrelation(0.5, OmegaRatio(1.0), 20).value.real(), kQuad_05_10, 1e-4);
  EXPECT_NEAR(autocorrelation(0.3, OmegaRatio(1.2), 20).value.real(), kQuad_03_12, 1e-4);
  // Converged sums agree far below the acceptance tolerance.
  EXPECT_NEAR(autocorrelation(0.5, OmegaRatio(0.5), 30).value.real(), kQuad_05_05, 1e-12);
}

TEST(Autocovariance, Examples) {
  EXPECT_NEAR(autocovariance(0.5, OmegaRatio(0.0), 10).value.real(), 0.5753641449035618, 1e-15);
  const auto zero = autocovariance(0.0, OmegaRatio(0.7), 20);
  EXPECT_LE(std::abs(zero.value), zero.tail_bound);
  EXPECT_EQ(zero.value, cplx(0.0));
  const double floor = asymptotic_floor(OmegaRatio(1.0));
  EXPECT_NEAR(autocovariance(0.5, OmegaRatio(1.0), 20).value.real(), kQuad_05_10 - floor, 1e-4);
}

TEST(Autocovariance, FloorIdentity) {
  for (cplx r : {cplx(0.3), cplx(-0.8), std::exp(-1.0) * std::polar(1.0, -2.0)}) {
    for (double w : {0.3, 1.2}) {
      for (int N : {0, 10, 20}) {
        const OmegaRatio om(w);
        const cplx lhs = autocovariance(r, om, N).value + asymptotic_floor_partial(om, N);
        const cplx rhs = autocorrelation(r, om, N).value;
        EXPECT_LT(std::abs(lhs - rhs), 1e-13 * std::max(1.0, std::abs(rhs))) << r << " " << w << " " << N;
      }
    }
  }
}

TEST(SeriesEvaluation, TailBookkeeping) {
  const auto s = autocorrelation(0.5, OmegaRatio(0.5), 20);
  EXPECT_EQ(s.truncation_order, 20);
  EXPECT_GT(s.last_term_magnitude, 0.0);
  EXPECT_LE(s.last_term_magnitude, s.tail_bound);
  EXPECT_LT(s.tail_estimate, 1e-12);
  EXPECT_FALSE(s.flagged);
}

TEST(SeriesEvaluation, LastTermBelowMajorant) {
  for (double m : {0.1, 0.5, 0.9, 0.99}) {
    for (double w : {0.0, 0.5, 1.2}) {
      for (int N : {0, 2, 10, 20}) {
        const auto s = autocorrelation(m, OmegaRatio(w), N);
        if (std::isfinite(s.tail_bound)) {
          EXPECT_LE(s.last_term_magnitude, s.tail_bound) << m << " " << w << " " << N;
        }
      }
    }
  }
}

TEST(SeriesEvaluation, FlagsShortTruncation) {
  const auto s = autocorrelation(0.9, OmegaRatio(1.2), 2);
  EXPECT_TRUE(s.flagged);
  const auto t = autocorrelation(0.9, OmegaRatio(1.2), 20);
  EXPECT_FALSE(t.flagged);
}

TEST(SeriesEvaluation, TermsEventuallyDecrease) {
  // |Omega_n omega^n / n!| at omega = 1.2, |r| = 0.9: monotone decrease from some order on.
  std::vector<double> mags;
  for (int n = 0; n <= 40; n += 2) {
    mags.push_back(std::abs(omega_n_general(n, 0.9)) * std::pow(1.2, n) / specfun::factorial(n));
  }
  std::size_t start = mags.size() - 1;
  while (start > 0 && mags[start - 1] > mags[start]) --start;
  EXPECT_LE(start, 5u);
  EXPECT_LT(mags.back(), 1e-12);
}

TEST(SeriesEvaluation, RequiresCoefficients) {
  std::vector<cplx> c{cplx(1.0), cplx(2.0)};
  EXPECT_THROW(sum_series(c, 0.5, OmegaRatio(1.0), 2), DomainError);
  EXPECT_NO_THROW(sum_series(c, 0.5, OmegaRatio(0.0), 2));
  EXPECT_THROW(autocorrelation(1.0, OmegaRatio(1.0), 2), DomainError);
  EXPECT_THROW(autocorrelation(0.5, OmegaRatio(1.0), 3), DomainError);
}

TEST(Denormalize, Scaling) {
  EXPECT_EQ(denormalize(cplx(0.575), 1.0), cplx(0.575));
  EXPECT_EQ(denormalize(cplx(0.575), 2.0), cplx(0.2875));
  const cplx x(0.3, -0.2);
  EXPECT_EQ(denormalize(x, 4.0) * 4.0, x);
  EXPECT_THROW(denormalize(x, 0.0), DomainError);
}

}  // namespace
}  // namespace invgp
