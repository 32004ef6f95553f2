#include "fiberpinn/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>

#include "fiberpinn/error.hpp"
#include "fiberpinn/physical_model.hpp"

namespace fiberpinn {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct FftPlan::Impl {
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

FftPlan::FftPlan(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n == 0) throw Error(ErrorCode::kInvalidConfig, "FFT length must be > 0");
  impl_->buffer = fftw_alloc_complex(n);
  const int len = static_cast<int>(n);
  impl_->forward =
      fftw_plan_dft_1d(len, impl_->buffer, impl_->buffer, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->backward =
      fftw_plan_dft_1d(len, impl_->buffer, impl_->buffer, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (impl_->forward == nullptr || impl_->backward == nullptr) {
    throw Error(ErrorCode::kInvalidConfig, "FFTW could not create a plan");
  }
}

FftPlan::~FftPlan() {
  if (impl_->forward) fftw_destroy_plan(impl_->forward);
  if (impl_->backward) fftw_destroy_plan(impl_->backward);
  fftw_free(impl_->buffer);
}

void FftPlan::forward(std::span<std::complex<double>> data) const { run(data, false); }

void FftPlan::inverse(std::span<std::complex<double>> data) const {
  run(data, true);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& x : data) x *= scale;
}

void FftPlan::run(std::span<std::complex<double>> data, bool inverse) const {
  if (data.size() != n_) throw Error(ErrorCode::kInvalidConfig, "FFT input length mismatch");
  // std::complex<double> and fftw_complex share a layout.
  std::memcpy(impl_->buffer, data.data(), n_ * sizeof(fftw_complex));
  fftw_execute(inverse ? impl_->backward : impl_->forward);
  std::memcpy(static_cast<void*>(data.data()), impl_->buffer, n_ * sizeof(fftw_complex));
}

std::vector<double> angular_frequencies(std::size_t n, double dt) {
  std::vector<double> w(n);
  const double base = 2.0 * kPi / (static_cast<double>(n) * dt);
  for (std::size_t k = 0; k < n; ++k) {
    const auto signed_k = k < n / 2 ? static_cast<double>(k)
                                    : static_cast<double>(k) - static_cast<double>(n);
    w[k] = base * signed_k;
  }
  return w;
}

}  // namespace fiberpinn
