#pragma once

#include <span>
#include <vector>

#include "fdntune/types.hpp"

namespace fdntune {

// Per-sample attenuation in dB for a given decay time: -60 / (fs * t60).
double per_sample_gain_db(double t60_s, double sample_rate);

// The tan(2*pi*fc/fs) warp is monotone only below fs/4; designs clamp the
// crossover to this fraction of fs.
inline constexpr double kCrossoverMaxFsFraction = 0.245;

double clamp_crossover(double crossover_hz, double sample_rate);

// Linear endpoint gains for one delay line.
struct LineGains {
  double dc = 1.0;
  double ny = 1.0;
};
LineGains line_endpoint_gains(const AttenuationParams& atten, int delay,
                              double sample_rate);

// First-order low shelf hitting gamma_dc at z=1 and gamma_ny at z=-1, with
// the shelf transition set by the crossover frequency.
ShelvingCoeffs design_shelving(const AttenuationParams& atten, int delay,
                               double sample_rate);

cdouble eval_filter_at(const ShelvingCoeffs& coeffs, cdouble z);
std::vector<cdouble> eval_filter(const ShelvingCoeffs& coeffs,
                                 const FrequencyGrid& grid);

// Decay time per bin implied by a magnitude response and its delay length.
// Magnitudes must lie strictly inside (0, 1).
std::vector<double> gain_to_t60_curve(std::span<const double> magnitude,
                                      int delay, double sample_rate);

}  // namespace fdntune
