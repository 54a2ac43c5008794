#pragma once

#include <map>
#include <memory>
#include <span>

#include "fdntune/losses.hpp"
#include "fdntune/types.hpp"

namespace fdntune {

inline constexpr double kCrossoverRawLoHz = 100.0;

// Unconstrained <-> constrained transforms for the tunable attenuation pair.
double t60_from_raw(double raw);
double raw_from_t60(double t60_s);
double fc_from_raw(double raw, double sample_rate);
double raw_from_fc(double crossover_hz, double sample_rate);

struct TrainMask {
  bool t60 = true;
  bool fc = true;
  bool feedback = false;
  bool input_gains = false;
  bool output_gains = false;
};

// Unconstrained optimization state. The realized feedback matrix is
// expm(W - W^T) of the raw square matrix, so it stays orthogonal under any
// update; gains map through unchanged.
struct ParamVector {
  double raw_t60 = 0.0;
  double raw_fc = 0.0;
  Eigen::MatrixXd skew_raw;
  Eigen::VectorXd input_gains;
  Eigen::VectorXd output_gains;
  TrainMask mask;
};

struct RealizedParams {
  double t60_dc_s = 1.0;
  double crossover_hz = 1000.0;
  Eigen::MatrixXd feedback;
  Eigen::VectorXd input_gains;
  Eigen::VectorXd output_gains;
};

struct Gradient {
  double raw_t60 = 0.0;
  double raw_fc = 0.0;
  Eigen::MatrixXd skew_raw;
  Eigen::VectorXd input_gains;
  Eigen::VectorXd output_gains;
};

RealizedParams reparameterize(const ParamVector& raw, double sample_rate);

// Adjoint of the Frechet derivative of expm at S applied to G, computed from
// the exponential of the augmented block [[S^T, G], [0, S^T]].
Eigen::MatrixXd expm_frechet_adjoint(const Eigen::MatrixXd& s,
                                     const Eigen::MatrixXd& grad_u);

struct ObjectiveConfig {
  LossKind primary = LossKind::Mss;
  MssConfig mss = MssConfig::defaults();
  std::vector<double> bands_hz;  // EDC losses; empty = broadband
  int fir_taps = 2049;
  double sparsity_weight = 0.0;
};

struct EvaluatorSetup {
  std::vector<int> delays;
  double sample_rate = 48000.0;
  int num_bins = 0;
  double t60_ny_s = 0.5;
  ObjectiveConfig objective;
  ImpulseResponse target;           // compared as given (noise already in it)
  std::vector<double> model_noise;  // added to the model response; may be empty
  double mixing_time_s = 0.0;       // drop leading samples from both sides
};

// Renders the FDN response for a parameter state and evaluates losses against
// the fixed target, with reverse-mode gradients through the whole chain:
// filter design, per-bin solves, inverse transform, STFT/EDC and reduction.
class LossEvaluator {
 public:
  explicit LossEvaluator(EvaluatorSetup setup);
  ~LossEvaluator();
  LossEvaluator(const LossEvaluator&) = delete;
  LossEvaluator& operator=(const LossEvaluator&) = delete;

  // Forward-only; all requested kinds share a single render.
  std::map<LossKind, LossValue> eval(const RealizedParams& params,
                                     std::span<const LossKind> kinds);

  // Composite objective (primary + weighted sparsity) for the configured
  // primary kind.
  LossValue objective_value(const RealizedParams& params);

  std::pair<LossValue, Gradient> loss_and_gradient(const ParamVector& params);

  // Replaces the fixed model-side noise (full response length, or empty).
  void set_model_noise(std::vector<double> w2);

  const EvaluatorSetup& setup() const;
  // Model response (noise included, truncation applied) from the last call.
  const ImpulseResponse& last_model_response() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct GradCheckEntry {
  std::string group;
  int index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
};

// Central finite differences over every unmasked raw entry.
GradCheckReport gradient_check(LossEvaluator& evaluator,
                               const ParamVector& params,
                               double rel_step = 1e-4);

}  // namespace fdntune
