#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fdntune/common.hpp"

namespace fdntune {

// Linearly spaced points on the upper half of the unit circle, dc and Nyquist
// included. The full real spectrum derived from it has 2*(M-1) samples.
struct FrequencyGrid {
  int num_bins = 0;  // M
  std::vector<cdouble> points;

  double angle(int k) const { return kPi * k / (num_bins - 1); }
  int full_length() const { return 2 * (num_bins - 1); }
};

FrequencyGrid make_frequency_grid(int num_bins);

struct ImpulseResponse {
  std::vector<double> samples;
  double sample_rate = 0.0;

  int length() const { return static_cast<int>(samples.size()); }
  double duration_s() const { return length() / sample_rate; }
  double energy() const;
  bool all_finite() const;
};

// Frequency-independent FDN state: delays, orthogonal mixing matrix and the
// input/output gain vectors.
struct FdnParams {
  std::vector<int> delays;
  Eigen::MatrixXd feedback;
  Eigen::VectorXd input_gains;
  Eigen::VectorXd output_gains;
  double sample_rate = 0.0;

  int size() const { return static_cast<int>(delays.size()); }
  // Throws std::invalid_argument on dimension mismatch, non-positive or
  // duplicate delays, or a feedback matrix farther than 1e-10 from orthogonal.
  void validate() const;
};

double orthogonality_error(const Eigen::MatrixXd& u);

// Tunable attenuation state: reverberation time at dc and shelf crossover.
// The Nyquist reverberation time is fixed per experiment.
struct AttenuationParams {
  double t60_dc_s = 0.0;
  double crossover_hz = 0.0;
  double t60_ny_s = 0.5;

  void validate(double sample_rate) const;
};

// One first-order section, Gamma(z) = (b0 + b1 z^-1) / (a0 + a1 z^-1).
struct ShelvingCoeffs {
  double b0 = 1.0, b1 = 0.0, a0 = 1.0, a1 = 0.0;
  double pole_magnitude() const { return std::abs(a1 / a0); }
};

struct Spectrogram {
  int frames = 0;
  int bins = 0;
  int window = 0;
  int hop = 0;
  std::vector<double> mag;  // frame-major: mag[t * bins + f]

  double& at(int t, int f) { return mag[static_cast<size_t>(t) * bins + f]; }
  double at(int t, int f) const {
    return mag[static_cast<size_t>(t) * bins + f];
  }
};

enum class EdcScale { Linear, Db };

inline constexpr double kEdcDbFloor = -200.0;        // dB
inline constexpr double kEdcLinearFloor = 1e-20;     // 10^(floor/10)

struct EnergyDecayCurve {
  std::vector<double> band_centers_hz;  // empty = broadband
  int length = 0;
  EdcScale scale = EdcScale::Linear;
  std::vector<double> values;  // band-major: values[b * length + t]

  double at(int band, int t) const {
    return values[static_cast<size_t>(band) * length + t];
  }
};

}  // namespace fdntune
