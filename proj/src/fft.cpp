#include "fdntune/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

namespace fdntune {

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("RealFft: size must be >= 2");
  real_buf_ = fftw_alloc_real(n_);
  cpx_buf_ = reinterpret_cast<cdouble*>(fftw_alloc_complex(bins()));
  std::lock_guard<std::mutex> lock(plan_mutex());
  plan_fw_ = fftw_plan_dft_r2c_1d(
      n_, real_buf_, reinterpret_cast<fftw_complex*>(cpx_buf_),
      FFTW_ESTIMATE);
  plan_bw_ = fftw_plan_dft_c2r_1d(
      n_, reinterpret_cast<fftw_complex*>(cpx_buf_), real_buf_,
      FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fw_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bw_));
  fftw_free(real_buf_);
  fftw_free(cpx_buf_);
}

void RealFft::forward(std::span<const double> in, std::span<cdouble> out) {
  const int m = std::min<int>(n_, static_cast<int>(in.size()));
  std::memcpy(real_buf_, in.data(), sizeof(double) * m);
  if (m < n_) std::memset(real_buf_ + m, 0, sizeof(double) * (n_ - m));
  fftw_execute(static_cast<fftw_plan>(plan_fw_));
  std::memcpy(out.data(), cpx_buf_, sizeof(cdouble) * bins());
}

void RealFft::inverse(std::span<const cdouble> in, std::span<double> out) {
  std::memcpy(cpx_buf_, in.data(), sizeof(cdouble) * bins());
  fftw_execute(static_cast<fftw_plan>(plan_bw_));
  std::memcpy(out.data(), real_buf_, sizeof(double) * n_);
}

int next_fast_fft_size(int n) {
  if (n <= 2) return 2;
  for (int cand = n;; ++cand) {
    int r = cand;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return cand;
  }
}

}  // namespace fdntune
