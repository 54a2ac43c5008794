#include "fdntune/landscape.hpp"

#include <algorithm>
#include <cmath>

#include "fdntune/dsp.hpp"
#include "fdntune/rng.hpp"

namespace fdntune {

std::string noise_condition_name(NoiseCondition c) {
  switch (c) {
    case NoiseCondition::None:
      return "none";
    case NoiseCondition::TargetOnly:
      return "target";
    case NoiseCondition::NoiseAware:
      return "aware";
  }
  return "?";
}

NoiseCondition parse_noise_condition(const std::string& name) {
  if (name == "none") return NoiseCondition::None;
  if (name == "target") return NoiseCondition::TargetOnly;
  if (name == "aware") return NoiseCondition::NoiseAware;
  throw std::invalid_argument("unknown noise condition: " + name);
}

std::string perturb_param_name(PerturbParam p) {
  switch (p) {
    case PerturbParam::None:
      return "none";
    case PerturbParam::InputGains:
      return "b";
    case PerturbParam::OutputGains:
      return "c";
    case PerturbParam::Feedback:
      return "U";
    case PerturbParam::Delays:
      return "m";
  }
  return "?";
}

PerturbParam parse_perturb_param(const std::string& name) {
  if (name == "none") return PerturbParam::None;
  if (name == "b") return PerturbParam::InputGains;
  if (name == "c") return PerturbParam::OutputGains;
  if (name == "U" || name == "u") return PerturbParam::Feedback;
  if (name == "m") return PerturbParam::Delays;
  throw std::invalid_argument("unknown perturbation parameter: " + name);
}

void ProfileSpec::validate() const {
  if (num_steps < 3)
    throw std::invalid_argument("ProfileSpec: need at least 3 steps");
  const auto within = [](double v, double lo, double hi) {
    return v >= std::min(lo, hi) - 1e-12 && v <= std::max(lo, hi) + 1e-12;
  };
  if (!within(target.t60_dc_s, theta_start.t60_dc_s, theta_end.t60_dc_s) ||
      !within(target.crossover_hz, theta_start.crossover_hz,
              theta_end.crossover_hz))
    throw std::invalid_argument("ProfileSpec: target outside bracket");
}

std::vector<StepTheta> interpolate_path(const ProfileSpec& spec) {
  spec.validate();
  std::vector<StepTheta> steps(spec.num_steps);
  const int last = spec.num_steps - 1;
  for (int i = 0; i <= last; ++i) {
    const double u = static_cast<double>(i) / last;
    steps[i].t60_s = spec.theta_start.t60_dc_s +
                     (spec.theta_end.t60_dc_s - spec.theta_start.t60_dc_s) * u;
    steps[i].crossover_hz =
        spec.theta_start.crossover_hz *
        std::pow(spec.theta_end.crossover_hz / spec.theta_start.crossover_hz,
                 u);
  }
  return steps;
}

double relative_mae(std::span<const double> estimates, double target) {
  if (estimates.empty())
    throw std::invalid_argument("relative_mae: empty estimate list");
  if (!(target > 0.0))
    throw std::invalid_argument("relative_mae: target must be positive");
  double acc = 0.0;
  for (double e : estimates) acc += std::abs(e - target) / target;
  return acc / estimates.size() * 100.0;
}

std::vector<double> standardize(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= values.size();
  if (var <= 0.0) return out;
  const double inv = 1.0 / std::sqrt(var);
  for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) * inv;
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * (n - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

FdnParams perturb_instance(const FdnParams& base, PerturbParam param,
                           std::uint64_t seed) {
  if (param == PerturbParam::None) return base;
  Rng rng(seed);
  FdnParams out = base;
  const int n = base.size();
  switch (param) {
    case PerturbParam::InputGains:
    case PerturbParam::OutputGains: {
      const Eigen::VectorXd& src = param == PerturbParam::InputGains
                                       ? base.input_gains
                                       : base.output_gains;
      const double mean = src.mean();
      const double sd =
          std::sqrt((src.array() - mean).square().sum() / src.size());
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = rng.normal(mean, sd);
      if (param == PerturbParam::InputGains)
        out.input_gains = v;
      else
        out.output_gains = v;
      break;
    }
    case PerturbParam::Feedback:
      out.feedback = random_orthogonal(n, rng);
      break;
    case PerturbParam::Delays: {
      const auto [lo, hi] =
          std::minmax_element(base.delays.begin(), base.delays.end());
      out.delays = sample_coprime_delays(n, *lo, *hi, rng);
      break;
    }
    default:
      break;
  }
  return out;
}

}  // namespace

LossProfile compute_perturbed_profile(const FdnParams& model,
                                      const ImpulseResponse& target_clean,
                                      const ProfileSpec& spec,
                                      const PerturbationSpec& pert,
                                      std::span<const LossKind> kinds,
                                      const AnalysisConfig& analysis) {
  spec.validate();
  model.validate();
  if (pert.num_instances < 1)
    throw std::invalid_argument("PerturbationSpec: need at least one instance");
  const auto steps = interpolate_path(spec);
  const int num_steps = spec.num_steps;
  const int num_inst = pert.num_instances;

  // Fixed noise realizations shared by every instance and step.
  ImpulseResponse target_in = target_clean;
  std::vector<double> w2;
  if (spec.noise != NoiseCondition::None) {
    target_in = add_noise_at_snr(target_clean, spec.snr_db,
                                 Rng::derive(spec.noise_seed, 1));
    if (spec.noise == NoiseCondition::NoiseAware) {
      const double w1_energy =
          target_clean.energy() * std::pow(10.0, -spec.snr_db / 10.0);
      w2 = gaussian_noise_with_energy(target_clean.length(), w1_energy,
                                      Rng::derive(spec.noise_seed, 2));
    }
  }
  const ImpulseResponse target_work =
      spec.mixing_time_s > 0.0
          ? truncate_to_mixing_time(target_in, spec.mixing_time_s)
          : target_in;

  const std::vector<LossKind> kind_list(kinds.begin(), kinds.end());
  const int num_kinds = static_cast<int>(kind_list.size());
  std::vector<double> values(
      static_cast<size_t>(num_inst) * num_steps * num_kinds);

#pragma omp parallel for schedule(dynamic)
  for (int inst = 0; inst < num_inst; ++inst) {
    const FdnParams fdn = perturb_instance(
        model, pert.parameter, Rng::derive(pert.seed, inst));
    EvaluatorSetup setup;
    setup.delays = fdn.delays;
    setup.sample_rate = fdn.sample_rate;
    setup.num_bins = analysis.num_bins;
    setup.t60_ny_s = analysis.t60_ny_s;
    setup.objective.mss = analysis.mss;
    setup.objective.bands_hz = analysis.bands_hz;
    setup.objective.fir_taps = analysis.fir_taps;
    setup.target = target_work;
    setup.model_noise = w2;
    setup.mixing_time_s = spec.mixing_time_s;
    LossEvaluator evaluator(std::move(setup));

    RealizedParams p;
    p.feedback = fdn.feedback;
    p.input_gains = fdn.input_gains;
    p.output_gains = fdn.output_gains;
    for (int s = 0; s < num_steps; ++s) {
      p.t60_dc_s = steps[s].t60_s;
      p.crossover_hz = steps[s].crossover_hz;
      auto losses = evaluator.eval(p, kind_list);
      for (int k = 0; k < num_kinds; ++k)
        values[(static_cast<size_t>(inst) * num_steps + s) * num_kinds + k] =
            losses[kind_list[k]].value;
    }
  }

  LossProfile profile;
  profile.steps = steps;
  profile.num_instances = num_inst;
  for (int k = 0; k < num_kinds; ++k) {
    ProfileCurve curve;
    curve.median.resize(num_steps);
    if (num_inst > 1) {
      curve.q1.resize(num_steps);
      curve.q3.resize(num_steps);
    }
    std::vector<double> column(num_inst);
    for (int s = 0; s < num_steps; ++s) {
      for (int inst = 0; inst < num_inst; ++inst)
        column[inst] =
            values[(static_cast<size_t>(inst) * num_steps + s) * num_kinds + k];
      std::sort(column.begin(), column.end());
      curve.median[s] = quantile_sorted(column, 0.5);
      if (num_inst > 1) {
        curve.q1[s] = quantile_sorted(column, 0.25);
        curve.q3[s] = quantile_sorted(column, 0.75);
      }
    }
    curve.argmin_index = static_cast<int>(
        std::min_element(curve.median.begin(), curve.median.end()) -
        curve.median.begin());
    curve.instance_argmin_t60.resize(num_inst);
    curve.instance_argmin_fc.resize(num_inst);
    for (int inst = 0; inst < num_inst; ++inst) {
      int best = 0;
      double best_v = values[(static_cast<size_t>(inst) * num_steps) * num_kinds + k];
      for (int s = 1; s < num_steps; ++s) {
        const double v =
            values[(static_cast<size_t>(inst) * num_steps + s) * num_kinds + k];
        if (v < best_v) {
          best_v = v;
          best = s;
        }
      }
      curve.instance_argmin_t60[inst] = steps[best].t60_s;
      curve.instance_argmin_fc[inst] = steps[best].crossover_hz;
    }
    profile.curves[kind_list[k]] = std::move(curve);
  }
  return profile;
}

LossProfile compute_profile(const FdnParams& model,
                            const ImpulseResponse& target_clean,
                            const ProfileSpec& spec,
                            std::span<const LossKind> kinds,
                            const AnalysisConfig& analysis) {
  PerturbationSpec none;
  none.parameter = PerturbParam::None;
  none.num_instances = 1;
  return compute_perturbed_profile(model, target_clean, spec, none, kinds,
                                   analysis);
}

}  // namespace fdntune
