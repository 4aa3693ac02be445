#pragma once

// Independent evaluations of the normalized autocorrelation: tensor-product
// quadrature of its 4D integral representation and direct Monte Carlo
// sampling of the bivariate complex Gaussian.

#include <Eigen/Dense>

#include <boost/math/special_functions/binomial.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "kernels.hpp"
#include "numeric.hpp"
#include "random.hpp"

namespace invgp {

/// Covariance of (a(t), b(t), a(t+tau), b(t+tau)) with w = a + i b.
class JointCovariance {
 public:
  JointCovariance(cplx r, double R_ww0 = 1.0) {
    if (!(R_ww0 > 0.0)) throw DomainError("JointCovariance: R_ww(0) must be > 0");
    const auto d = decompose(r);
    const double s = 0.5 * R_ww0;
    m_ << 1, 0, d.rho, -d.mu,  //
        0, 1, d.mu, d.rho,     //
        d.rho, d.mu, 1, 0,     //
        -d.mu, d.rho, 0, 1;
    m_ *= s;
  }

  const Eigen::Matrix4d& matrix() const noexcept { return m_; }

  Eigen::Vector4d eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(m_, Eigen::EigenvaluesOnly).eigenvalues();
  }

  bool is_positive_semidefinite(double tol = 1e-12) const {
    return eigenvalues().minCoeff() >= -tol * m_.diagonal().maxCoeff();
  }

 private:
  Eigen::Matrix4d m_;
};

struct QuadratureSpec {
  int radial_nodes = 64;    // Gauss-Legendre nodes per radius on [0, v_max]
  double v_max = 12.0;
  int angular_nodes = 96;   // periodic trapezoid nodes per angle
  double target_abs_tol = 1e-7;

  void validate() const {
    if (radial_nodes < 8 || angular_nodes < 8) throw ConfigError("QuadratureSpec: node counts must be >= 8");
    if (!(v_max >= 8.0)) throw ConfigError("QuadratureSpec: v_max must be >= 8");
    if (!(target_abs_tol > 0.0)) throw ConfigError("QuadratureSpec: target_abs_tol must be > 0");
  }

  QuadratureSpec doubled() const {
    QuadratureSpec s = *this;
    s.radial_nodes *= 2;
    s.angular_nodes *= 2;
    return s;
  }

  /// Node counts scaled to |r|: the Gaussian weight along v1 = v2 decays like
  /// e^{-(1-|r|) v^2 / 2} and the angular factor peaks with width ~ (|r| v^2)^{-1/2}.
  /// polynomial_order widens the radial range for the order-n integrand.
  static QuadratureSpec adapted(double abs_r, int polynomial_order = 0) {
    if (!(abs_r >= 0.0) || !(abs_r < 1.0)) throw DomainError("QuadratureSpec: |r| must lie in [0, 1)");
    QuadratureSpec s;
    const double gap = 1.0 - abs_r;
    s.v_max = std::max(12.0, std::sqrt(80.0 / gap)) + 2.0 * std::sqrt(static_cast<double>(polynomial_order));
    const auto round8 = [](double x) { return static_cast<int>(std::ceil(x / 8.0) * 8.0); };
    s.radial_nodes = std::max(64, round8(3.5 * s.v_max));
    const double x_relevant = abs_r * 36.0 / gap;
    s.angular_nodes = std::max(96, round8(std::sqrt(72.0 * x_relevant)));
    return s;
  }
};

struct QuadratureResult {
  cplx value;
  double error_estimate = 0.0;  // |I(doubled nodes) - I(nodes)|
  QuadratureSpec spec;
};

namespace detail {

// -(1/4pi^2) sum_ab w_a w_b h^2 sum_{q1,q2} E_ab(q1 - q2) f1[m]_a(q1) f2[m]_b(q2) coeff[m],
// with E_ab(d) = exp(-(v_a^2 + v_b^2)/4 - |r| v_a v_b/2 cos(d + phi)).
// The double angular sum is a circular correlation, evaluated exactly through DFTs.
// f1(m, v, q) and f2(m, v, q) supply the separable angular factors for m = 0..terms-1.
template <class F1, class F2>
cplx tensor_quadrature(cplx r, const QuadratureSpec& spec, int terms, const std::vector<double>& coeff,
                       F1&& f1, F2&& f2, unsigned threads) {
  spec.validate();
  const double abs_r = std::abs(r);
  const double phi = std::arg(r);
  const int nr = spec.radial_nodes, M = spec.angular_nodes;
  std::vector<double> v, wt;
  gauss_legendre(nr, 0.0, spec.v_max, v, wt);
  const double h = 2.0 * std::numbers::pi / M;
  const FftPlan fwd(M, FftPlan::Direction::forward);

  // Spectra of the angular factors: A[m][a][k] = DFT f1, B[m][b][k] = DFT f2 at -k.
  std::vector<std::vector<std::vector<cplx>>> A(terms, std::vector<std::vector<cplx>>(nr)),
      B(terms, std::vector<std::vector<cplx>>(nr));
  parallel_for(static_cast<std::size_t>(nr), threads, [&](std::size_t a) {
    std::vector<cplx> buf(M), out(M);
    for (int m = 0; m < terms; ++m) {
      for (int j = 0; j < M; ++j) buf[j] = f1(m, v[a], j * h);
      fwd.execute(buf.data(), out.data());
      A[m][a] = out;
      for (int j = 0; j < M; ++j) buf[j] = f2(m, v[a], j * h);
      fwd.execute(buf.data(), out.data());
      B[m][a].resize(M);
      for (int k = 0; k < M; ++k) B[m][a][k] = out[(M - k) % M];
    }
  });

  std::vector<cplx> rows(nr);
  parallel_for(static_cast<std::size_t>(nr), threads, [&](std::size_t a) {
    std::vector<cplx> e(M), ehat(M);
    std::vector<cplx> row(nr);
    for (int b = 0; b < nr; ++b) {
      const double base = -(v[a] * v[a] + v[b] * v[b]) / 4.0;
      const double x = abs_r * v[a] * v[b] / 2.0;
      for (int d = 0; d < M; ++d) e[d] = std::exp(base - x * std::cos(d * h + phi));
      fwd.execute(e.data(), ehat.data());
      cplx acc = 0.0;
      for (int m = 0; m < terms; ++m) {
        cplx s = 0.0;
        for (int k = 0; k < M; ++k) s += A[m][a][k] * ehat[(M - k) % M] * B[m][b][k];
        acc += coeff[m] * s;
      }
      row[b] = wt[b] * acc / static_cast<double>(M);
    }
    rows[a] = wt[a] * pairwise_sum(std::span<const cplx>(row));
  });
  const cplx total = pairwise_sum(std::span<const cplx>(rows));
  return -total * h * h / (4.0 * std::numbers::pi * std::numbers::pi);
}

template <class Eval>
QuadratureResult with_doubling(const QuadratureSpec& spec, Eval&& eval) {
  const cplx coarse = eval(spec);
  const cplx fine = eval(spec.doubled());
  QuadratureResult res{fine, std::abs(fine - coarse), spec};
  if (!(res.error_estimate <= spec.target_abs_tol)) {
    throw AccuracyError("quadrature: node doubling changed the value by more than target_abs_tol",
                        fine.real(), res.error_estimate);
  }
  return res;
}

}  // namespace detail

/// Normalized autocorrelation from its 4D integral representation, with a
/// node-doubling accuracy estimate.
inline QuadratureResult rss_quadrature(cplx r, double omega, const QuadratureSpec& spec,
                                       unsigned threads = 0) {
  if (!(std::abs(r) < 1.0)) throw DomainError("rss_quadrature: |r| must be < 1");
  if (!(omega >= 0.0)) throw DomainError("rss_quadrature: omega must be >= 0");
  return detail::with_doubling(spec, [&](const QuadratureSpec& s) {
    return detail::tensor_quadrature(
        r, s, 1, {1.0},
        [omega](int, double v, double q) { return std::polar(1.0, omega * v * std::cos(q) + q); },
        [omega](int, double v, double q) { return std::polar(1.0, omega * v * std::cos(q) - q); }, threads);
  });
}

inline QuadratureResult rss_quadrature(cplx r, double omega, unsigned threads = 0) {
  return rss_quadrature(r, omega, QuadratureSpec::adapted(std::abs(r)), threads);
}

/// Omega_n from the order-n derivative of the integrand at omega = 0:
/// i^n (v1 cos q1 + v2 cos q2)^n, expanded binomially into separable factors.
inline QuadratureResult omega_n_quadrature(int n, cplx r, const QuadratureSpec& spec, unsigned threads = 0) {
  if (n < 0 || n > 8) throw DomainError("omega_n_quadrature: order must lie in [0, 8]");
  if (!(std::abs(r) < 1.0)) throw DomainError("omega_n_quadrature: |r| must be < 1");
  std::vector<double> coeff;
  for (int m = 0; m <= n; ++m) coeff.push_back(boost::math::binomial_coefficient<double>(n, m));
  const cplx in = std::pow(cplx(0.0, 1.0), n);
  auto res = detail::with_doubling(spec, [&](const QuadratureSpec& s) {
    return detail::tensor_quadrature(
        r, s, n + 1, coeff,
        [](int m, double v, double q) { return std::pow(v * std::cos(q), m) * std::polar(1.0, q); },
        [n](int m, double v, double q) { return std::pow(v * std::cos(q), n - m) * std::polar(1.0, -q); },
        threads);
  });
  res.value *= in;
  return res;
}

inline QuadratureResult omega_n_quadrature(int n, cplx r, unsigned threads = 0) {
  return omega_n_quadrature(n, r, QuadratureSpec::adapted(std::abs(r), n), threads);
}

struct MonteCarloResult {
  cplx estimate;
  double standard_error = 0.0;  // from batch means
  int batches = 0;
};

/// Pair (w(t + tau), w(t)) with E[w1 w2*] = r and unit powers.
inline std::pair<cplx, cplx> correlated_pair(cplx r, std::mt19937_64& rng, std::normal_distribution<double>& nd) {
  const cplx w2 = circular_gaussian(rng, nd);
  const cplx z = circular_gaussian(rng, nd);
  return {r * w2 + std::sqrt(1.0 - std::norm(r)) * z, w2};
}

/// E[1/(omega + w1) conj(1/(omega + w2))] by direct sampling. Batch b draws
/// from its own engine seeded by (seed, b).
inline MonteCarloResult rss_montecarlo(cplx r, double omega, std::int64_t n_samples, std::uint64_t seed,
                                       int batches = 200, unsigned threads = 0) {
  if (!(std::abs(r) < 1.0)) throw DomainError("rss_montecarlo: |r| must be < 1");
  if (batches < 100) throw ConfigError("rss_montecarlo: at least 100 batches are required");
  if (n_samples < batches) throw ConfigError("rss_montecarlo: fewer samples than batches");
  std::vector<cplx> means(batches);
  parallel_for(static_cast<std::size_t>(batches), threads, [&](std::size_t b) {
    std::mt19937_64 rng = make_stream(seed, b);
    std::normal_distribution<double> nd;
    const std::int64_t count = n_samples / batches + (static_cast<std::int64_t>(b) < n_samples % batches ? 1 : 0);
    cplx acc = 0.0;
    for (std::int64_t i = 0; i < count; ++i) {
      const auto [w1, w2] = correlated_pair(r, rng, nd);
      acc += (1.0 / (omega + w1)) * std::conj(1.0 / (omega + w2));
    }
    means[b] = acc / static_cast<double>(count);
  });
  cplx mean = pairwise_sum(std::span<const cplx>(means)) / static_cast<double>(batches);
  double ss = 0.0;
  for (const auto& m : means) ss += std::norm(m - mean);
  const double se = std::sqrt(ss / (batches - 1.0) / batches);
  return {mean, se, batches};
}

/// (1/4pi^2) times the 2D periodic-trapezoid value of the double angular
/// integral of |e^{-x cos(q1 - q2)} - 1|. The integrand depends on q1 - q2
/// only, so the M x M tensor sum equals M times a 1D sum; kinks at
/// cos = 0 sit on nodes (M divisible by 4) and one Richardson step removes
/// the resulting h^2 error.
inline double angular_struve_check(double x, int angular_nodes = 1 << 14) {
  if (!(x >= 0.0)) throw DomainError("angular_struve_check: x must be >= 0");
  if (angular_nodes < 8 || angular_nodes % 4 != 0) throw ConfigError("angular_struve_check: nodes must be a multiple of 4");
  auto trapezoid = [x](int M) {
    const double h = 2.0 * std::numbers::pi / M;
    std::vector<double> g(M);
    for (int d = 0; d < M; ++d) g[d] = std::abs(std::expm1(-x * std::cos(d * h)));
    // M * sum_d g * h^2 / (4 pi^2) = sum_d g / M
    return pairwise_sum(std::span<const double>(g)) / M;
  };
  const double coarse = trapezoid(angular_nodes);
  const double fine = trapezoid(2 * angular_nodes);
  return (4.0 * fine - coarse) / 3.0;
}

struct AbsConvergence {
  double lhs = 0.0;  // numeric integral of the absolute integrand
  double rhs = 0.0;  // closed majorant
};

/// Absolute-value integral of the autocorrelation integrand versus its closed
/// majorant 4pi^2 (1-|r|^2)^{-1/2} (pi + 2 atan(|r| / sqrt(1-|r|^2))).
inline AbsConvergence abs_convergence_check(double abs_r, const QuadratureSpec& spec) {
  if (!(abs_r >= 0.0) || !(abs_r < 1.0)) throw DomainError("abs_convergence_check: |r| must lie in [0, 1)");
  spec.validate();
  const int nr = spec.radial_nodes, M = spec.angular_nodes;
  std::vector<double> v, wt;
  gauss_legendre(nr, 0.0, spec.v_max, v, wt);
  const double h = 2.0 * std::numbers::pi / M;
  std::vector<double> cosd(M);
  for (int d = 0; d < M; ++d) cosd[d] = std::cos(d * h);
  std::vector<double> rows(nr);
  for (int a = 0; a < nr; ++a) {
    std::vector<double> row(nr);
    for (int b = 0; b < nr; ++b) {
      const double base = -(v[a] * v[a] + v[b] * v[b]) / 4.0;
      const double x = abs_r * v[a] * v[b] / 2.0;
      std::vector<double> g(M);
      for (int d = 0; d < M; ++d) g[d] = std::exp(base - x * cosd[d]);
      // Tensor sum over (q1, q2) = M * sum over q1 - q2.
      row[b] = wt[b] * M * pairwise_sum(std::span<const double>(g)) * h * h;
    }
    rows[a] = wt[a] * pairwise_sum(std::span<const double>(row));
  }
  AbsConvergence out;
  out.lhs = pairwise_sum(std::span<const double>(rows));
  const double s = std::sqrt(1.0 - abs_r * abs_r);
  out.rhs = 4.0 * std::numbers::pi * std::numbers::pi / s * (std::numbers::pi + 2.0 * std::atan(abs_r / s));
  return out;
}

inline AbsConvergence abs_convergence_check(double abs_r) {
  return abs_convergence_check(abs_r, QuadratureSpec::adapted(abs_r));
}

}  // namespace invgp
