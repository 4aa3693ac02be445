#pragma once

// Thin FFTW wrapper: plans are created under a global lock and executed with
// the new-array interface, so one plan may serve many threads.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace invgp {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  enum class Direction { forward, backward };

  /// Unnormalized DFT of length n: forward uses e^{-2 pi i jk/n}.
  FftPlan(std::size_t n, Direction dir) : n_(n) {
    if (n == 0) throw std::invalid_argument("FftPlan: length must be positive");
    std::lock_guard lock(fftw_planner_mutex());
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in, out,
                             dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (!plan_) throw std::runtime_error("FftPlan: FFTW planning failed");
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  ~FftPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }

  std::size_t size() const noexcept { return n_; }

  /// in and out each hold size() elements and must not overlap.
  void execute(const std::complex<double>* in, std::complex<double>* out) const {
    fftw_execute_dft(plan_, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

 private:
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

}  // namespace invgp
