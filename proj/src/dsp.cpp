#include "fdntune/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "fdntune/attenuation.hpp"
#include "fdntune/fft.hpp"
#include "fdntune/rng.hpp"

namespace fdntune {

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
  return w;
}

int stft_num_frames(int signal_length, int hop) {
  return (signal_length + hop - 1) / hop;
}

Spectrogram stft_magnitude(const ImpulseResponse& ir, int window_size,
                           int hop) {
  if (window_size < 8)
    throw std::invalid_argument("stft_magnitude: window must be >= 8");
  if (hop < 1 || hop > window_size)
    throw std::invalid_argument("stft_magnitude: hop must be in (0, window]");
  const int length = ir.length();
  if (length < window_size)
    throw std::invalid_argument("stft_magnitude: signal shorter than window");

  Spectrogram spec;
  spec.window = window_size;
  spec.hop = hop;
  spec.frames = stft_num_frames(length, hop);
  spec.bins = window_size / 2 + 1;
  spec.mag.resize(static_cast<size_t>(spec.frames) * spec.bins);

  const std::vector<double> win = hann_window(window_size);
  RealFft fft(window_size);
  std::vector<double> frame(window_size);
  std::vector<cdouble> bins(spec.bins);
  for (int t = 0; t < spec.frames; ++t) {
    const int start = t * hop;
    for (int i = 0; i < window_size; ++i) {
      const int idx = start + i;
      frame[i] = idx < length ? ir.samples[idx] * win[i] : 0.0;
    }
    fft.forward(frame, bins);
    double* out = spec.mag.data() + static_cast<size_t>(t) * spec.bins;
    for (int f = 0; f < spec.bins; ++f) out[f] = std::abs(bins[f]);
  }
  return spec;
}

namespace {

// Power crossfade across a band edge, 1/3 octave wide in log2 frequency.
constexpr double kEdgeWidthOctaves = 1.0 / 3.0;

double rising_power(double f, double edge) {
  if (f <= 0.0) return 0.0;
  const double x = std::clamp(
      (std::log2(f / edge)) / kEdgeWidthOctaves + 0.5, 0.0, 1.0);
  const double s = std::sin(0.5 * kPi * x);
  return s * s;
}

}  // namespace

std::vector<double> OctaveFilterBank::default_centers(double sample_rate) {
  static const std::vector<double> nominal = {31.5, 63.0,   125.0,  250.0,
                                              500.0, 1000.0, 2000.0, 4000.0,
                                              8000.0, 16000.0};
  std::vector<double> centers;
  for (double c : nominal)
    if (c * std::sqrt(2.0) <= sample_rate / 2.0) centers.push_back(c);
  return centers;
}

OctaveFilterBank::OctaveFilterBank(std::vector<double> centers_hz,
                                   double sample_rate, int taps)
    : centers_(std::move(centers_hz)), sample_rate_(sample_rate), taps_(taps) {
  if (centers_.empty())
    throw std::invalid_argument("OctaveFilterBank: no bands");
  if (taps_ % 2 == 0 || taps_ < 9)
    throw std::invalid_argument("OctaveFilterBank: taps must be odd and >= 9");
  for (double c : centers_)
    if (!(c > 0.0) || !(c < sample_rate_ / 2.0))
      throw std::invalid_argument(
          "OctaveFilterBank: band center outside (0, fs/2)");
  if (!std::is_sorted(centers_.begin(), centers_.end()))
    throw std::invalid_argument("OctaveFilterBank: centers must be ascending");

  const int nbands = static_cast<int>(centers_.size());
  const int design_n = std::max(8192, 4 * next_fast_fft_size(taps_));
  const int design_bins = design_n / 2 + 1;
  RealFft fft(design_n);
  kernels_.assign(nbands, std::vector<double>(taps_));
  std::vector<cdouble> amp(design_bins);
  std::vector<double> kernel(design_n);
  const std::vector<double> win = [&] {
    // Symmetric Hann for FIR truncation.
    std::vector<double> w(taps_);
    for (int i = 0; i < taps_; ++i)
      w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (taps_ - 1)));
    return w;
  }();

  for (int b = 0; b < nbands; ++b) {
    const double lower_edge = centers_[b] / std::sqrt(2.0);
    const double upper_edge = centers_[b] * std::sqrt(2.0);
    for (int j = 0; j < design_bins; ++j) {
      const double f = j * sample_rate_ / design_n;
      double p = 1.0;
      if (b > 0) p *= rising_power(f, lower_edge);
      if (b + 1 < nbands) p *= 1.0 - rising_power(f, upper_edge);
      amp[j] = std::sqrt(std::max(p, 0.0));
    }
    fft.inverse(amp, kernel);
    const int half = (taps_ - 1) / 2;
    for (int t = 0; t < taps_; ++t) {
      const int lag = t - half;
      const int idx = lag >= 0 ? lag : design_n + lag;
      kernels_[b][t] = kernel[idx] / design_n * win[t];
    }
  }
}

std::vector<std::vector<double>> OctaveFilterBank::apply(
    const ImpulseResponse& ir) const {
  if (ir.sample_rate != sample_rate_)
    throw std::invalid_argument("OctaveFilterBank: sample rate mismatch");
  const int length = ir.length();
  const int nfft = next_fast_fft_size(length + taps_ - 1);
  RealFft fft(nfft);
  std::vector<cdouble> sig_spec(fft.bins());
  fft.forward(ir.samples, sig_spec);

  std::vector<std::vector<double>> out;
  out.reserve(centers_.size());
  std::vector<cdouble> kern_spec(fft.bins());
  std::vector<cdouble> prod(fft.bins());
  std::vector<double> conv(nfft);
  for (size_t b = 0; b < centers_.size(); ++b) {
    fft.forward(kernels_[b], kern_spec);
    for (int j = 0; j < fft.bins(); ++j) prod[j] = sig_spec[j] * kern_spec[j];
    fft.inverse(prod, conv);
    std::vector<double> band(length);
    const double scale = 1.0 / nfft;
    for (int i = 0; i < length; ++i) band[i] = conv[i + delay()] * scale;
    out.push_back(std::move(band));
  }
  return out;
}

std::vector<double> schroeder_edc(std::span<const double> band_signal,
                                  EdcScale scale) {
  const int n = static_cast<int>(band_signal.size());
  std::vector<double> edc(n);
  double acc = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    acc += band_signal[t] * band_signal[t];
    edc[t] = acc;
  }
  if (scale == EdcScale::Db)
    for (double& v : edc) v = 10.0 * std::log10(std::max(v, kEdcLinearFloor));
  return edc;
}

EnergyDecayCurve edc_in_bands(const ImpulseResponse& ir,
                              const OctaveFilterBank& bank, EdcScale scale) {
  EnergyDecayCurve curve;
  curve.band_centers_hz = bank.centers();
  curve.length = ir.length();
  curve.scale = scale;
  const auto bands = bank.apply(ir);
  curve.values.reserve(bands.size() * ir.length());
  for (const auto& band : bands) {
    const auto edc = schroeder_edc(band, scale);
    curve.values.insert(curve.values.end(), edc.begin(), edc.end());
  }
  return curve;
}

std::vector<double> gaussian_noise_with_energy(int length, double energy,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(length);
  double e = 0.0;
  for (double& v : w) {
    v = rng.normal();
    e += v * v;
  }
  const double scale = std::sqrt(energy / e);
  for (double& v : w) v *= scale;
  return w;
}

ImpulseResponse add_noise_at_snr(const ImpulseResponse& ir, double snr_db,
                                 std::uint64_t seed) {
  const double signal_energy = ir.energy();
  if (!(signal_energy > 0.0))
    throw std::invalid_argument("add_noise_at_snr: zero-energy signal");
  const double noise_energy = signal_energy * std::pow(10.0, -snr_db / 10.0);
  const auto w =
      gaussian_noise_with_energy(ir.length(), noise_energy, seed);
  ImpulseResponse out = ir;
  for (int i = 0; i < out.length(); ++i) out.samples[i] += w[i];
  return out;
}

FdnParams match_energy(const FdnParams& model,
                       const AttenuationParams& atten_target,
                       double reference_energy, const FrequencyGrid& grid) {
  if (!(reference_energy > 0.0))
    throw std::invalid_argument("match_energy: reference energy must be > 0");
  std::vector<ShelvingCoeffs> sections;
  sections.reserve(model.delays.size());
  for (int d : model.delays)
    sections.push_back(design_shelving(atten_target, d, model.sample_rate));
  std::vector<cdouble> h(grid.num_bins);
  fdn_frequency_response(model, AttenuationSource::shelving(sections), grid,
                         h);
  const double current = response_to_ir(h, model.sample_rate).energy();
  if (!(current > 0.0))
    throw std::invalid_argument("match_energy: model response has no energy");
  const double scale = std::pow(reference_energy / current, 0.25);
  FdnParams out = model;
  out.input_gains *= scale;
  out.output_gains *= scale;
  return out;
}

ImpulseResponse truncate_to_mixing_time(const ImpulseResponse& ir,
                                        double t_mix_s) {
  if (t_mix_s < 0.0)
    throw std::invalid_argument("truncate_to_mixing_time: negative time");
  const int drop = static_cast<int>(std::lround(t_mix_s * ir.sample_rate));
  if (drop >= ir.length())
    throw std::invalid_argument(
        "truncate_to_mixing_time: mixing time exceeds duration");
  ImpulseResponse out;
  out.sample_rate = ir.sample_rate;
  out.samples.assign(ir.samples.begin() + drop, ir.samples.end());
  return out;
}

}  // namespace fdntune
