#pragma once

#include <span>
#include <vector>

#include "fdntune/fdn.hpp"
#include "fdntune/types.hpp"

namespace fdntune {

// Periodic Hann window.
std::vector<double> hann_window(int n);

// Hann-windowed magnitude STFT. Frames start at multiples of hop and trailing
// frames are zero-padded, so every sample of the signal is covered.
Spectrogram stft_magnitude(const ImpulseResponse& ir, int window_size,
                           int hop);

int stft_num_frames(int signal_length, int hop);

// One-octave band splitter built from linear-phase FIR filters applied with
// delay compensation. Band powers crossfade in log-frequency so they sum to
// one; the lowest band extends to dc and the highest to Nyquist.
class OctaveFilterBank {
 public:
  OctaveFilterBank(std::vector<double> centers_hz, double sample_rate,
                   int taps = 2049);

  static std::vector<double> default_centers(double sample_rate);

  const std::vector<double>& centers() const { return centers_; }
  double sample_rate() const { return sample_rate_; }
  int taps() const { return taps_; }
  int delay() const { return (taps_ - 1) / 2; }
  const std::vector<double>& kernel(int band) const { return kernels_[band]; }

  std::vector<std::vector<double>> apply(const ImpulseResponse& ir) const;

 private:
  std::vector<double> centers_;
  double sample_rate_;
  int taps_;
  std::vector<std::vector<double>> kernels_;
};

// Schroeder backward integration of one band signal.
std::vector<double> schroeder_edc(std::span<const double> band_signal,
                                  EdcScale scale);

EnergyDecayCurve edc_in_bands(const ImpulseResponse& ir,
                              const OctaveFilterBank& bank, EdcScale scale);

// Adds seeded white Gaussian noise rescaled so the realized energy ratio
// hits the requested SNR exactly.
ImpulseResponse add_noise_at_snr(const ImpulseResponse& ir, double snr_db,
                                 std::uint64_t seed);

// White Gaussian vector scaled to an exact total energy.
std::vector<double> gaussian_noise_with_energy(int length, double energy,
                                               std::uint64_t seed);

// Scales input and output gains by (reference/current)^(1/4) so the rendered
// energy at the given attenuation state matches the reference.
FdnParams match_energy(const FdnParams& model,
                       const AttenuationParams& atten_target,
                       double reference_energy, const FrequencyGrid& grid);

ImpulseResponse truncate_to_mixing_time(const ImpulseResponse& ir,
                                        double t_mix_s);

}  // namespace fdntune
