#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace fiberpinn {

bool is_power_of_two(std::size_t n);

/// Fixed-length complex DFT backed by FFTW (estimate-mode plans, so results
/// do not depend on planner timing).
/// forward: X_k = sum_j x_j exp(-2 pi i j k / n); inverse includes the 1/n.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const { return n_; }
  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  struct Impl;
  void run(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

/// Angular frequencies (rad per unit of the sample spacing's unit) matching
/// the FFT bin order: 0, 1, ..., n/2-1, -n/2, ..., -1 times 2 pi / (n dt).
std::vector<double> angular_frequencies(std::size_t n, double dt);

}  // namespace fiberpinn
