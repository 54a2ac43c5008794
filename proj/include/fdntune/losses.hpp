#pragma once

#include <map>
#include <string>
#include <vector>

#include "fdntune/dsp.hpp"
#include "fdntune/types.hpp"

namespace fdntune {

// Magnitudes below this are clamped before any log.
inline constexpr double kLogMagClamp = 1e-10;

enum class LossKind { EdcLin, EdcLog, Mss, MssSc, MssSm };

std::string loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct MssConfig {
  std::vector<std::pair<int, int>> resolutions;  // (window, hop), ascending

  static MssConfig defaults();  // {512, 1024, 2048} with 50% hop
  void validate() const;
};

struct LossValue {
  double value = 0.0;
  std::map<std::string, double> components;
};

double spectral_convergence(const ImpulseResponse& target,
                            const ImpulseResponse& model, int window_size,
                            int hop);
double spectral_log_magnitude(const ImpulseResponse& target,
                              const ImpulseResponse& model, int window_size,
                              int hop);
LossValue mss_loss(const ImpulseResponse& target, const ImpulseResponse& model,
                   const MssConfig& cfg);

// Normalized quadratic distance between band EDCs; the denominator uses the
// target curve only. Empty band list means broadband (no filtering).
LossValue edc_loss(const ImpulseResponse& target, const ImpulseResponse& model,
                   const std::vector<double>& bands_hz, EdcScale scale,
                   int fir_taps = 2049);

double sparsity_loss(const Eigen::MatrixXd& u);

struct DistanceMaps {
  Spectrogram log_map;     // |log|H| - log|Hhat||
  Spectrogram linear_map;  // ||H| - |Hhat||
};
DistanceMaps stft_distance_maps(const ImpulseResponse& target,
                                const ImpulseResponse& model, int window_size,
                                int hop);

struct CompositeWeights {
  double primary = 1.0;
  double sparsity = 1.0;
};

LossValue composite_objective(const LossValue& primary,
                              const Eigen::MatrixXd& u,
                              const CompositeWeights& weights);

}  // namespace fdntune
