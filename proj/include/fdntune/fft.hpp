#pragma once

#include <span>
#include <vector>

#include "fdntune/common.hpp"

namespace fdntune {

// Real transform pair of fixed size backed by FFTW. Plans use FFTW_ESTIMATE so
// planning is reproducible; plan creation is serialized internally. Each
// instance owns its buffers and is not thread-safe: use one per thread.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  // out has n/2+1 bins.
  void forward(std::span<const double> in, std::span<cdouble> out);
  // Unnormalized inverse of a half spectrum; out has n samples.
  void inverse(std::span<const cdouble> in, std::span<double> out);

 private:
  int n_;
  void* plan_fw_;
  void* plan_bw_;
  double* real_buf_;
  cdouble* cpx_buf_;
};

// Smallest 2^a 3^b 5^c 7^d >= n.
int next_fast_fft_size(int n);

}  // namespace fdntune
