#pragma once

#include <map>
#include <span>
#include <vector>

#include "fdntune/grad.hpp"

namespace fdntune {

enum class NoiseCondition { None, TargetOnly, NoiseAware };
enum class PerturbParam { None, InputGains, OutputGains, Feedback, Delays };

std::string noise_condition_name(NoiseCondition c);
NoiseCondition parse_noise_condition(const std::string& name);
std::string perturb_param_name(PerturbParam p);
PerturbParam parse_perturb_param(const std::string& name);

// Loss machinery shared by the profile runners.
struct AnalysisConfig {
  int num_bins = 0;
  MssConfig mss = MssConfig::defaults();
  std::vector<double> bands_hz;
  int fir_taps = 2049;
  double t60_ny_s = 0.5;
};

// Path between two attenuation states bracketing the target. The decay-time
// component interpolates linearly and the crossover geometrically.
struct ProfileSpec {
  AttenuationParams theta_start;
  AttenuationParams theta_end;
  AttenuationParams target;
  int num_steps = 200;
  NoiseCondition noise = NoiseCondition::None;
  double snr_db = 70.0;
  std::uint64_t noise_seed = 1;
  double mixing_time_s = 0.0;

  void validate() const;
};

struct PerturbationSpec {
  PerturbParam parameter = PerturbParam::None;
  int num_instances = 1;
  std::uint64_t seed = 1;
};

struct StepTheta {
  double t60_s = 0.0;
  double crossover_hz = 0.0;
};

std::vector<StepTheta> interpolate_path(const ProfileSpec& spec);

struct ProfileCurve {
  // Median over instances (the raw values when there is one instance).
  std::vector<double> median;
  std::vector<double> q1, q3;  // empty for a single instance
  int argmin_index = 0;
  // Per-instance argmin locations.
  std::vector<double> instance_argmin_t60;
  std::vector<double> instance_argmin_fc;
};

struct LossProfile {
  std::vector<StepTheta> steps;
  int num_instances = 1;
  std::map<LossKind, ProfileCurve> curves;
};

LossProfile compute_profile(const FdnParams& model,
                            const ImpulseResponse& target_clean,
                            const ProfileSpec& spec,
                            std::span<const LossKind> kinds,
                            const AnalysisConfig& analysis);

// Re-evaluates each step for several seeded instances of one perturbed
// frequency-independent parameter. Gains draw from a normal law with the
// base vector's mean and deviation; the feedback matrix redraws as a fresh
// random orthogonal matrix; delays resample as co-prime sets in the base
// min/max range.
LossProfile compute_perturbed_profile(const FdnParams& model,
                                      const ImpulseResponse& target_clean,
                                      const ProfileSpec& spec,
                                      const PerturbationSpec& pert,
                                      std::span<const LossKind> kinds,
                                      const AnalysisConfig& analysis);

// Mean of |estimate - target| / target in percent.
double relative_mae(std::span<const double> estimates, double target);

// Zero-mean unit-variance copy for plot export; flat curves map to zeros.
std::vector<double> standardize(const std::vector<double>& values);

}  // namespace fdntune
