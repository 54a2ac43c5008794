#include "fdntune/losses.hpp"

#include <cmath>
#include <cstdio>

namespace fdntune {

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::EdcLin:
      return "edc_lin";
    case LossKind::EdcLog:
      return "edc_log";
    case LossKind::Mss:
      return "mss";
    case LossKind::MssSc:
      return "mss_sc";
    case LossKind::MssSm:
      return "mss_sm";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "edc_lin") return LossKind::EdcLin;
  if (name == "edc_log") return LossKind::EdcLog;
  if (name == "mss") return LossKind::Mss;
  if (name == "mss_sc") return LossKind::MssSc;
  if (name == "mss_sm") return LossKind::MssSm;
  throw std::invalid_argument("unknown loss kind: " + name);
}

MssConfig MssConfig::defaults() {
  return MssConfig{{{512, 256}, {1024, 512}, {2048, 1024}}};
}

void MssConfig::validate() const {
  if (resolutions.empty())
    throw std::invalid_argument("MssConfig: need at least one resolution");
  int prev = 0;
  for (const auto& [w, h] : resolutions) {
    if (w < 8 || h < 1 || h > w)
      throw std::invalid_argument("MssConfig: bad window/hop");
    if (w <= prev)
      throw std::invalid_argument("MssConfig: windows must be ascending");
    prev = w;
  }
}

namespace {

void require_equal_lengths(const ImpulseResponse& a, const ImpulseResponse& b) {
  if (a.length() != b.length())
    throw std::invalid_argument("loss: signals must have equal length");
}

std::string format_band_label(double center_hz) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", center_hz);
  return buf;
}

}  // namespace

double spectral_convergence(const ImpulseResponse& target,
                            const ImpulseResponse& model, int window_size,
                            int hop) {
  require_equal_lengths(target, model);
  const Spectrogram st = stft_magnitude(target, window_size, hop);
  const Spectrogram sm = stft_magnitude(model, window_size, hop);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < st.mag.size(); ++i) {
    const double d = st.mag[i] - sm.mag[i];
    num += d * d;
    den += st.mag[i] * st.mag[i];
  }
  if (!(den > 0.0))
    throw std::invalid_argument("spectral_convergence: zero target spectrum");
  return std::sqrt(num) / std::sqrt(den);
}

double spectral_log_magnitude(const ImpulseResponse& target,
                              const ImpulseResponse& model, int window_size,
                              int hop) {
  require_equal_lengths(target, model);
  const Spectrogram st = stft_magnitude(target, window_size, hop);
  const Spectrogram sm = stft_magnitude(model, window_size, hop);
  double sum = 0.0;
  for (size_t i = 0; i < st.mag.size(); ++i)
    sum += std::abs(std::log(std::max(st.mag[i], kLogMagClamp)) -
                    std::log(std::max(sm.mag[i], kLogMagClamp)));
  return sum / st.frames;
}

LossValue mss_loss(const ImpulseResponse& target, const ImpulseResponse& model,
                   const MssConfig& cfg) {
  cfg.validate();
  LossValue out;
  double total = 0.0;
  for (const auto& [w, h] : cfg.resolutions) {
    const double sc = spectral_convergence(target, model, w, h);
    const double sm = spectral_log_magnitude(target, model, w, h);
    out.components["sc_" + std::to_string(w)] = sc;
    out.components["sm_" + std::to_string(w)] = sm;
    total += sc + sm;
  }
  out.value = total / cfg.resolutions.size();
  return out;
}

LossValue edc_loss(const ImpulseResponse& target, const ImpulseResponse& model,
                   const std::vector<double>& bands_hz, EdcScale scale,
                   int fir_taps) {
  require_equal_lengths(target, model);
  if (!(target.energy() > 0.0) || !(model.energy() > 0.0))
    throw std::invalid_argument("edc_loss: signals must carry energy");

  std::vector<std::vector<double>> target_bands, model_bands;
  if (bands_hz.empty()) {
    target_bands.push_back(target.samples);
    model_bands.push_back(model.samples);
  } else {
    const OctaveFilterBank bank(bands_hz, target.sample_rate, fir_taps);
    target_bands = bank.apply(target);
    model_bands = bank.apply(model);
  }
  // Both curves are normalized by the target's total energy so the loss is
  // invariant under a common rescaling of the pair. The linear-scale value is
  // unchanged by this; on the decibel scale it only rescales the denominator.
  const double inv_sqrt_energy = 1.0 / std::sqrt(target.energy());
  for (auto& band : target_bands)
    for (double& v : band) v *= inv_sqrt_energy;
  for (auto& band : model_bands)
    for (double& v : band) v *= inv_sqrt_energy;

  LossValue out;
  double num = 0.0, den = 0.0;
  for (size_t b = 0; b < target_bands.size(); ++b) {
    const auto et = schroeder_edc(target_bands[b], scale);
    const auto em = schroeder_edc(model_bands[b], scale);
    double band_num = 0.0;
    for (size_t t = 0; t < et.size(); ++t) {
      const double d = et[t] - em[t];
      band_num += d * d;
      den += et[t] * et[t];
    }
    num += band_num;
    const std::string label =
        bands_hz.empty() ? std::string("broadband")
                         : format_band_label(bands_hz[b]);
    out.components["num_" + label] = band_num;
  }
  if (!(den > 0.0)) throw std::invalid_argument("edc_loss: zero denominator");
  out.value = num / den;
  return out;
}

double sparsity_loss(const Eigen::MatrixXd& u) {
  if (u.rows() != u.cols())
    throw std::invalid_argument("sparsity_loss: matrix must be square");
  const int n = static_cast<int>(u.rows());
  if (n < 2) throw std::invalid_argument("sparsity_loss: need N >= 2");
  const double root = std::sqrt(static_cast<double>(n));
  const double sum = u.cwiseAbs().sum();
  return (n * root - sum) / (n * (root - 1.0));
}

DistanceMaps stft_distance_maps(const ImpulseResponse& target,
                                const ImpulseResponse& model, int window_size,
                                int hop) {
  require_equal_lengths(target, model);
  const Spectrogram st = stft_magnitude(target, window_size, hop);
  const Spectrogram sm = stft_magnitude(model, window_size, hop);
  DistanceMaps maps;
  maps.log_map = st;
  maps.linear_map = st;
  for (size_t i = 0; i < st.mag.size(); ++i) {
    maps.log_map.mag[i] =
        std::abs(std::log(std::max(st.mag[i], kLogMagClamp)) -
                 std::log(std::max(sm.mag[i], kLogMagClamp)));
    maps.linear_map.mag[i] = std::abs(st.mag[i] - sm.mag[i]);
  }
  return maps;
}

LossValue composite_objective(const LossValue& primary,
                              const Eigen::MatrixXd& u,
                              const CompositeWeights& weights) {
  if (weights.primary < 0.0 || weights.sparsity < 0.0)
    throw std::invalid_argument("composite_objective: negative weight");
  LossValue out;
  const double lu = weights.sparsity > 0.0 ? sparsity_loss(u) : 0.0;
  out.components["primary"] = weights.primary * primary.value;
  out.components["sparsity"] = weights.sparsity * lu;
  out.value = weights.primary * primary.value + weights.sparsity * lu;
  return out;
}

}  // namespace fdntune
