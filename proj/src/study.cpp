#include "fdntune/study.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "fdntune/attenuation.hpp"
#include "fdntune/dsp.hpp"
#include "fdntune/rng.hpp"

namespace fdntune {

std::vector<double> default_bands_for_rate(double sample_rate) {
  return OctaveFilterBank::default_centers(sample_rate);
}

namespace {

std::pair<int, int> delay_sample_range(const TrialConfig& cfg) {
  const int lo =
      static_cast<int>(std::lround(cfg.delay_ms_lo * 1e-3 * cfg.sample_rate));
  const int hi =
      static_cast<int>(std::lround(cfg.delay_ms_hi * 1e-3 * cfg.sample_rate));
  return {lo, hi};
}

AttenuationParams sample_theta(Rng& rng, const TrialConfig& cfg) {
  AttenuationParams theta;
  theta.t60_dc_s = rng.uniform(cfg.t60_prior_lo_s, cfg.t60_prior_hi_s);
  theta.crossover_hz = rng.uniform(cfg.fc_prior_lo_frac * cfg.sample_rate,
                                   cfg.fc_prior_hi_frac * cfg.sample_rate);
  theta.t60_ny_s = cfg.t60_ny_s;
  return theta;
}

ImpulseResponse render_fdn(const FdnParams& fdn, const AttenuationParams& atten,
                           const FrequencyGrid& grid) {
  std::vector<ShelvingCoeffs> sections;
  sections.reserve(fdn.delays.size());
  for (int d : fdn.delays)
    sections.push_back(design_shelving(atten, d, fdn.sample_rate));
  std::vector<cdouble> h(grid.num_bins);
  fdn_frequency_response(fdn, AttenuationSource::shelving(sections), grid, h);
  return response_to_ir(h, fdn.sample_rate);
}

}  // namespace

TargetBundle synthesize_target(std::uint64_t seed, const TrialConfig& cfg) {
  Rng rng(Rng::derive(seed, 0));
  TargetBundle out;
  out.theta = sample_theta(rng, cfg);

  const auto [dlo, dhi] = delay_sample_range(cfg);
  FdnParams fdn;
  fdn.sample_rate = cfg.sample_rate;
  fdn.delays = sample_coprime_delays(cfg.n_target, dlo, dhi, rng);
  fdn.feedback = random_orthogonal(cfg.n_target, rng);
  fdn.input_gains = Eigen::VectorXd(cfg.n_target);
  for (int i = 0; i < cfg.n_target; ++i)
    fdn.input_gains(i) = (i % 2 == 0) ? 1.0 : -1.0;
  fdn.output_gains = Eigen::VectorXd::Ones(cfg.n_target);
  out.fdn = fdn;

  const FrequencyGrid grid = make_frequency_grid(cfg.num_bins);
  out.clean = render_fdn(fdn, out.theta, grid);
  out.clean_energy = out.clean.energy();
  out.noise_energy = out.clean_energy * std::pow(10.0, -cfg.snr_db / 10.0);
  out.noisy = add_noise_at_snr(out.clean, cfg.snr_db, Rng::derive(seed, 1));
  return out;
}

LearnableInit init_learnable(std::uint64_t seed, double target_energy,
                             const AttenuationParams& theta_star,
                             const TrialConfig& cfg) {
  Rng rng(Rng::derive(seed, 0));
  const auto [dlo, dhi] = delay_sample_range(cfg);

  LearnableInit out;
  out.params.skew_raw = Eigen::MatrixXd(cfg.n_model, cfg.n_model);
  for (int j = 0; j < cfg.n_model; ++j)
    for (int i = 0; i < cfg.n_model; ++i)
      out.params.skew_raw(i, j) = rng.normal();
  out.params.input_gains = Eigen::VectorXd(cfg.n_model);
  out.params.output_gains = Eigen::VectorXd(cfg.n_model);
  for (int i = 0; i < cfg.n_model; ++i) {
    out.params.input_gains(i) = rng.normal();
    out.params.output_gains(i) = rng.normal();
  }

  FdnParams fdn;
  fdn.sample_rate = cfg.sample_rate;
  fdn.delays = sample_coprime_delays(cfg.n_model, dlo, dhi, rng);
  fdn.feedback = orthogonal_from_skew(out.params.skew_raw);
  fdn.input_gains = out.params.input_gains;
  fdn.output_gains = out.params.output_gains;

  const FrequencyGrid grid = make_frequency_grid(cfg.num_bins);
  fdn = match_energy(fdn, theta_star, target_energy, grid);
  out.params.input_gains = fdn.input_gains;
  out.params.output_gains = fdn.output_gains;
  out.fdn = fdn;

  const AttenuationParams theta0 = sample_theta(rng, cfg);
  out.params.raw_t60 = raw_from_t60(theta0.t60_dc_s);
  out.params.raw_fc = raw_from_fc(theta0.crossover_hz, cfg.sample_rate);
  return out;
}

AdamOptimizer::AdamOptimizer(double lr_attenuation,
                             double lr_frequency_independent, double beta1,
                             double beta2, double eps)
    : lr_gamma_(lr_attenuation),
      lr_fi_(lr_frequency_independent),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void AdamOptimizer::step(ParamVector& params, const Gradient& grad) {
  const int n = static_cast<int>(params.input_gains.size());
  const int total = 2 + n * n + 2 * n;
  if (!init_) {
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
    init_ = true;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

  int idx = 0;
  auto update = [&](double& value, double g, double lr, bool active) {
    double& m = m_[idx];
    double& v = v_[idx];
    ++idx;
    if (!active) return;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g * g;
    value -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
  };

  update(params.raw_t60, grad.raw_t60, lr_gamma_, params.mask.t60);
  update(params.raw_fc, grad.raw_fc, lr_gamma_, params.mask.fc);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      update(params.skew_raw(i, j), grad.skew_raw(i, j), lr_fi_,
             params.mask.feedback);
  for (int i = 0; i < n; ++i)
    update(params.input_gains(i), grad.input_gains(i), lr_fi_,
           params.mask.input_gains);
  for (int i = 0; i < n; ++i)
    update(params.output_gains(i), grad.output_gains(i), lr_fi_,
           params.mask.output_gains);
}

TrialRecord run_trial(const TrialConfig& cfg) {
  if (cfg.test_id < 1 || cfg.test_id > 4)
    throw std::invalid_argument("run_trial: test id must be 1..4");
  if (cfg.epochs < 1 || cfg.iters_per_epoch < 1)
    throw std::invalid_argument("run_trial: iteration counts must be positive");
  if (cfg.patience < 1 || cfg.patience > cfg.epochs)
    throw std::invalid_argument("run_trial: patience must lie in [1, epochs]");
  TrialRecord rec;
  rec.trial_id = cfg.trial_id;
  rec.test_id = cfg.test_id;
  rec.loss = cfg.loss;

  const double t0 = omp_get_wtime();
  try {
    const TargetBundle target = synthesize_target(Rng::derive(cfg.seed, 1), cfg);
    rec.target_t60_s = target.theta.t60_dc_s;
    rec.target_fc_hz = target.theta.crossover_hz;

    LearnableInit learn = init_learnable(Rng::derive(cfg.seed, 2),
                                         target.clean_energy, target.theta,
                                         cfg);
    const bool joint = cfg.test_id == 2 || cfg.test_id == 4;
    learn.params.mask.t60 = true;
    learn.params.mask.fc = true;
    learn.params.mask.feedback = joint;
    learn.params.mask.input_gains = joint;
    learn.params.mask.output_gains = joint;

    EvaluatorSetup setup;
    setup.delays = learn.fdn.delays;
    setup.sample_rate = cfg.sample_rate;
    setup.num_bins = cfg.num_bins;
    setup.t60_ny_s = cfg.t60_ny_s;
    setup.objective.primary = cfg.loss;
    setup.objective.mss = cfg.mss;
    setup.objective.bands_hz =
        cfg.bands_hz.empty() ? default_bands_for_rate(cfg.sample_rate)
                             : cfg.bands_hz;
    setup.objective.fir_taps = cfg.fir_taps;
    setup.objective.sparsity_weight = cfg.sparsity_weight;
    setup.target = target.noisy;
    const bool noise_aware = cfg.test_id == 3 || cfg.test_id == 4;
    const int full_len = 2 * (cfg.num_bins - 1);
    if (noise_aware)
      setup.model_noise = gaussian_noise_with_energy(
          full_len, target.noise_energy, Rng::derive(cfg.seed, 3));
    LossEvaluator evaluator(std::move(setup));

    AdamOptimizer adam(cfg.lr_attenuation, cfg.lr_frequency_independent);
    double best = std::numeric_limits<double>::infinity();
    int stall = 0;
    long iter = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      double acc = 0.0;
      for (int it = 0; it < cfg.iters_per_epoch; ++it, ++iter) {
        if (noise_aware && cfg.redraw_noise_each_iter && iter > 0)
          evaluator.set_model_noise(gaussian_noise_with_energy(
              full_len, target.noise_energy,
              Rng::derive(cfg.seed, 1000 + iter)));
        auto [value, grad] = evaluator.loss_and_gradient(learn.params);
        adam.step(learn.params, grad);
        acc += value.value;
      }
      rec.epoch_loss.push_back(acc / cfg.iters_per_epoch);
      rec.epochs_run = epoch + 1;
      const double current = rec.epoch_loss.back();
      if (current < best - cfg.min_delta) {
        best = current;
        stall = 0;
      } else {
        ++stall;
        if (stall >= cfg.patience) break;
      }
    }

    rec.final_t60_s = t60_from_raw(learn.params.raw_t60);
    rec.final_fc_hz = fc_from_raw(learn.params.raw_fc, cfg.sample_rate);
    rec.err_t60_pct = std::abs(rec.final_t60_s - rec.target_t60_s) /
                      rec.target_t60_s * 100.0;
    rec.err_fc_pct = std::abs(rec.final_fc_hz - rec.target_fc_hz) /
                     rec.target_fc_hz * 100.0;
  } catch (const NumericError&) {
    rec.failed = true;
  }
  rec.wall_time_s = omp_get_wtime() - t0;
  return rec;
}

StudyReport run_study(const StudyConfig& cfg) {
  if (cfg.trials_per_cell < 1)
    throw std::invalid_argument("run_study: need at least one trial per cell");
  struct Job {
    int test_id;
    LossKind loss;
    int trial;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (size_t ci = 0; ci < cfg.tests.size() * cfg.losses.size(); ++ci) {
    const int test = cfg.tests[ci / cfg.losses.size()];
    const LossKind loss = cfg.losses[ci % cfg.losses.size()];
    for (int j = 0; j < cfg.trials_per_cell; ++j)
      jobs.push_back(
          {test, loss, j, Rng::derive(cfg.base_seed, ci * 100003 + j)});
  }

  std::vector<TrialRecord> records(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < jobs.size(); ++i) {
    TrialConfig tc = cfg.base;
    tc.trial_id = static_cast<int>(i);
    tc.test_id = jobs[i].test_id;
    tc.loss = jobs[i].loss;
    tc.seed = jobs[i].seed;
    records[i] = run_trial(tc);
  }

  StudyReport report;
  report.records = records;
  for (int test : cfg.tests)
    for (LossKind loss : cfg.losses) {
      StudyCell cell;
      cell.test_id = test;
      cell.loss = loss;
      double t60 = 0.0, fc = 0.0, epochs = 0.0;
      int ok = 0;
      for (const TrialRecord& r : records) {
        if (r.test_id != test || r.loss != loss) continue;
        ++cell.trials;
        if (r.failed) {
          ++cell.failures;
          continue;
        }
        ++ok;
        t60 += r.err_t60_pct;
        fc += r.err_fc_pct;
        epochs += r.epochs_run;
      }
      if (ok > 0) {
        cell.mae_t60_pct = t60 / ok;
        cell.mae_fc_pct = fc / ok;
        cell.mean_epochs = epochs / ok;
      }
      report.cells.push_back(cell);
    }
  return report;
}

}  // namespace fdntune
