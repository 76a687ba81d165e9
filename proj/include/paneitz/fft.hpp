#pragma once

// Thin RAII wrapper over FFTW real-to-complex transforms on a fixed shape.

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <span>
#include <vector>

namespace paneitz::detail {

// FFTW's planner is not reentrant; plan execution with the new-array
// interface is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(const std::vector<std::size_t>& sizes) {
    std::vector<int> n(sizes.begin(), sizes.end());
    real_count_ = 1;
    for (auto s : sizes) real_count_ *= s;
    complex_count_ = real_count_ / sizes.back() * (sizes.back() / 2 + 1);

    std::vector<double> real(real_count_);
    std::vector<std::complex<double>> spec(complex_count_);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c(static_cast<int>(n.size()), n.data(), real.data(),
                                 as_fftw(spec.data()), flags);
    inverse_ = fftw_plan_dft_c2r(static_cast<int>(n.size()), n.data(), as_fftw(spec.data()),
                                 real.data(), flags | FFTW_DESTROY_INPUT);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  std::size_t real_count() const noexcept { return real_count_; }
  std::size_t complex_count() const noexcept { return complex_count_; }

  /// Unnormalized forward transform.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    std::vector<double> scratch(in.begin(), in.end());
    fftw_execute_dft_r2c(forward_, scratch.data(), as_fftw(out.data()));
  }

  /// Inverse transform scaled by 1/N so that inverse(forward(u)) == u.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    std::vector<std::complex<double>> scratch(in.begin(), in.end());
    fftw_execute_dft_c2r(inverse_, as_fftw(scratch.data()), out.data());
    const double scale = 1.0 / static_cast<double>(real_count_);
    for (auto& v : out) v *= scale;
  }

 private:
  static fftw_complex* as_fftw(std::complex<double>* p) {
    return reinterpret_cast<fftw_complex*>(p);
  }

  std::size_t real_count_ = 0;
  std::size_t complex_count_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace paneitz::detail
