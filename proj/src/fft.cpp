#include "qclab/fft.hpp"

#include <cstring>
#include <mutex>

#include <fftw3.h>

namespace qclab {

namespace {
// Planner calls are not thread safe in FFTW.
std::mutex planner_mutex;
}  // namespace

struct FFT2::Impl {
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

FFT2::FFT2(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  const std::size_t total = static_cast<std::size_t>(n) * n;
  std::lock_guard<std::mutex> lock(planner_mutex);
  impl_->buf = fftw_alloc_complex(total);
  impl_->fwd = fftw_plan_dft_2d(n, n, impl_->buf, impl_->buf, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_2d(n, n, impl_->buf, impl_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FFT2::~FFT2() {
  std::lock_guard<std::mutex> lock(planner_mutex);
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->inv);
  fftw_free(impl_->buf);
}

void FFT2::forward(std::vector<Complex>& data) {
  static_assert(sizeof(Complex) == sizeof(fftw_complex));
  std::memcpy(impl_->buf, data.data(), data.size() * sizeof(Complex));
  fftw_execute(impl_->fwd);
  std::memcpy(static_cast<void*>(data.data()), impl_->buf, data.size() * sizeof(Complex));
}

void FFT2::inverse(std::vector<Complex>& data) {
  std::memcpy(impl_->buf, data.data(), data.size() * sizeof(Complex));
  fftw_execute(impl_->inv);
  std::memcpy(static_cast<void*>(data.data()), impl_->buf, data.size() * sizeof(Complex));
  const double scale = 1.0 / (static_cast<double>(n_) * n_);
  for (auto& v : data) v *= scale;
}

double wavenumber(int m, int n, double side) {
  const int s = m < n / 2 ? m : m - n;
  return 2.0 * kPi * s / side;
}

}  // namespace qclab
