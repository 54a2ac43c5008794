#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately naive (direct recursions, O(n^2) transforms) and must not
// share code with the library paths they check.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "fdntune/common.hpp"

namespace oracles {

// Direct time-domain FDN recursion with one constant gain per delay line:
// delay-line buffers, per-sample update, impulse input.
inline std::vector<double> fdn_impulse_response_time_domain(
    const std::vector<int>& delays, const Eigen::MatrixXd& feedback,
    const Eigen::VectorXd& input_gains, const Eigen::VectorXd& output_gains,
    const std::vector<double>& line_gains, int num_samples) {
  const int n = static_cast<int>(delays.size());
  std::vector<std::vector<double>> buffers(n);
  for (int i = 0; i < n; ++i) buffers[i].assign(delays[i], 0.0);
  std::vector<double> out(num_samples, 0.0);
  std::vector<double> line_out(n), line_in(n);
  for (int t = 0; t < num_samples; ++t) {
    const double x = t == 0 ? 1.0 : 0.0;
    for (int i = 0; i < n; ++i) line_out[i] = buffers[i][t % delays[i]];
    double y = 0.0;
    for (int i = 0; i < n; ++i) y += output_gains(i) * line_out[i];
    out[t] = y;
    for (int i = 0; i < n; ++i) {
      double acc = input_gains(i) * x;
      for (int j = 0; j < n; ++j)
        acc += feedback(i, j) * line_gains[j] * line_out[j];
      line_in[i] = acc;
    }
    for (int i = 0; i < n; ++i) buffers[i][t % delays[i]] = line_in[i];
  }
  return out;
}

// Quadratic-time inverse DFT of a conjugate-symmetric half spectrum.
inline std::vector<double> naive_inverse_half_spectrum(
    const std::vector<fdntune::cdouble>& half) {
  const int m = static_cast<int>(half.size());
  const int length = 2 * (m - 1);
  std::vector<double> out(length, 0.0);
  for (int t = 0; t < length; ++t) {
    double acc = half[0].real();
    acc += half[m - 1].real() * (t % 2 == 0 ? 1.0 : -1.0);
    for (int k = 1; k < m - 1; ++k) {
      const double a = 2.0 * fdntune::kPi * k * t / length;
      acc += 2.0 * (half[k].real() * std::cos(a) - half[k].imag() * std::sin(a));
    }
    out[t] = acc / length;
  }
  return out;
}

// Quadratic-time Schroeder backward integration.
inline std::vector<double> naive_edc(const std::vector<double>& signal) {
  const int n = static_cast<int>(signal.size());
  std::vector<double> out(n, 0.0);
  for (int t = 0; t < n; ++t)
    for (int tau = t; tau < n; ++tau) out[t] += signal[tau] * signal[tau];
  return out;
}

}  // namespace oracles
