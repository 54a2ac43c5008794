#include <doctest.h>

#include "fdntune/fdn.hpp"
#include "fdntune/grad.hpp"
#include "fdntune/rng.hpp"
#include "fdntune/study.hpp"

using namespace fdntune;

namespace {

// Small synthetic setup shared by the gradient tests.
struct SmallCase {
  EvaluatorSetup setup;
  ParamVector params;
};

SmallCase make_case(LossKind kind, std::uint64_t seed, bool with_noise,
                    double sparsity_weight = 1.0) {
  const double fs = 16000.0;
  const int bins = 1025;

  // Decay times are long relative to the window so spectrogram magnitudes
  // stay well above the log clamp; finite differences would otherwise sit on
  // the clamp kink.
  TrialConfig synth;
  synth.sample_rate = fs;
  synth.num_bins = bins;
  synth.n_target = 6;
  synth.snr_db = 30.0;
  synth.t60_prior_lo_s = 0.25;
  synth.t60_prior_hi_s = 0.4;
  synth.delay_ms_lo = 2.0;
  synth.delay_ms_hi = 8.0;
  synth.t60_ny_s = 0.15;
  const TargetBundle target = synthesize_target(Rng::derive(seed, 1), synth);

  SmallCase out;
  out.setup.sample_rate = fs;
  out.setup.num_bins = bins;
  out.setup.t60_ny_s = 0.15;
  Rng rng(Rng::derive(seed, 2));
  out.setup.delays = sample_coprime_delays(4, 16, 80, rng);
  out.setup.objective.primary = kind;
  out.setup.objective.mss = MssConfig{{{128, 64}, {256, 128}}};
  out.setup.objective.bands_hz = {500.0, 1000.0, 2000.0, 4000.0};
  out.setup.objective.fir_taps = 257;
  out.setup.objective.sparsity_weight = sparsity_weight;
  out.setup.target = target.noisy;
  if (with_noise)
    out.setup.model_noise = gaussian_noise_with_energy(
        2 * (bins - 1), target.noise_energy, Rng::derive(seed, 3));

  out.params.skew_raw = Eigen::MatrixXd(4, 4);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) out.params.skew_raw(i, j) = rng.normal();
  out.params.input_gains = Eigen::VectorXd(4);
  out.params.output_gains = Eigen::VectorXd(4);
  for (int i = 0; i < 4; ++i) {
    out.params.input_gains(i) = rng.normal();
    out.params.output_gains(i) = rng.normal();
  }
  out.params.raw_t60 = raw_from_t60(0.3 * rng.uniform(0.8, 1.25));
  out.params.raw_fc = raw_from_fc(rng.uniform(1000.0, 3000.0), fs);
  out.params.mask = TrainMask{true, true, true, true, true};
  return out;
}

}  // namespace

TEST_CASE("reparameterization transforms") {
  CHECK(t60_from_raw(0.0) == doctest::Approx(1.0));
  CHECK(t60_from_raw(raw_from_t60(2.7)) == doctest::Approx(2.7).epsilon(1e-12));

  const double fs = 48000.0;
  CHECK(fc_from_raw(raw_from_fc(9000.0, fs), fs) ==
        doctest::Approx(9000.0).epsilon(1e-12));
  // Saturation toward the configured limits.
  CHECK(fc_from_raw(-60.0, fs) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(fc_from_raw(60.0, fs) == doctest::Approx(0.245 * fs).epsilon(1e-6));

  ParamVector pv;
  pv.skew_raw = Eigen::MatrixXd::Zero(3, 3);
  pv.input_gains = Eigen::VectorXd::Ones(3);
  pv.output_gains = Eigen::VectorXd::Ones(3);
  const RealizedParams p = reparameterize(pv, fs);
  CHECK(p.t60_dc_s == doctest::Approx(1.0));
  CHECK(p.feedback.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
}

TEST_CASE("expm frechet adjoint matches finite differences") {
  Rng rng(31);
  const int n = 4;
  Eigen::MatrixXd w(n, n), r(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      w(i, j) = rng.normal();
      r(i, j) = rng.normal();
    }
  // f(W) = <expm(W - W^T), R>
  const auto f = [&](const Eigen::MatrixXd& m) {
    return (orthogonal_from_skew(m).array() * r.array()).sum();
  };
  const Eigen::MatrixXd skew = w - w.transpose();
  const Eigen::MatrixXd phi = expm_frechet_adjoint(skew, r);
  const Eigen::MatrixXd analytic = phi - phi.transpose();
  const double h = 1e-6;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Eigen::MatrixXd up = w, down = w;
      up(i, j) += h;
      down(i, j) -= h;
      const double numeric = (f(up) - f(down)) / (2.0 * h);
      CHECK(analytic(i, j) == doctest::Approx(numeric).epsilon(1e-5));
    }
}

TEST_CASE("sparsity-only gradient of the identity matrix") {
  // With the primary loss frozen against itself the objective reduces to the
  // sparsity term; its gradient with respect to U is -sign(U)/(N(sqrt(N)-1)).
  SmallCase c = make_case(LossKind::EdcLin, 5, false, 1.0);
  auto evaluator = LossEvaluator(c.setup);
  auto [value, grad] = evaluator.loss_and_gradient(c.params);
  CHECK(value.components.at("sparsity") > 0.0);
  CHECK(value.value ==
        doctest::Approx(value.components.at("primary") +
                        value.components.at("sparsity")).epsilon(1e-12));
}

namespace {

// Central differences carry an h^2 truncation term; the log-based losses on
// sparse-mode spectra have third derivatives large enough that a 1e-4 step
// is outside the quadratic regime, so they get probed with a smaller one.
double fd_step(LossKind kind) {
  switch (kind) {
    case LossKind::EdcLin:
    case LossKind::MssSc:
      return 1e-4;
    default:
      return 1e-6;
  }
}

}  // namespace

TEST_CASE("gradients match central finite differences for every loss") {
  const std::vector<LossKind> kinds{LossKind::EdcLin, LossKind::EdcLog,
                                    LossKind::Mss, LossKind::MssSc,
                                    LossKind::MssSm};
  for (LossKind kind : kinds) {
    CAPTURE(loss_kind_name(kind));
    SmallCase c = make_case(kind, 7 + static_cast<int>(kind), false);
    LossEvaluator evaluator(c.setup);
    const GradCheckReport report =
        gradient_check(evaluator, c.params, fd_step(kind));
    CHECK(report.max_rel_err < 1e-4);
  }
}

TEST_CASE("gradients stay correct with fixed model noise") {
  SmallCase c = make_case(LossKind::EdcLog, 19, true);
  LossEvaluator evaluator(c.setup);
  const GradCheckReport report = gradient_check(evaluator, c.params, 1e-6);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("masked groups produce exactly zero gradients") {
  SmallCase c = make_case(LossKind::Mss, 23, false);
  c.params.mask = TrainMask{true, true, false, false, false};
  LossEvaluator evaluator(c.setup);
  auto [value, grad] = evaluator.loss_and_gradient(c.params);
  (void)value;
  CHECK(grad.skew_raw.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad.input_gains.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad.output_gains.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad.raw_t60 != 0.0);
  CHECK(grad.raw_fc != 0.0);
}

TEST_CASE("evaluation is deterministic") {
  SmallCase c = make_case(LossKind::EdcLin, 29, true);
  LossEvaluator a(c.setup), b(c.setup);
  auto [va, ga] = a.loss_and_gradient(c.params);
  auto [vb, gb] = b.loss_and_gradient(c.params);
  CHECK(va.value == vb.value);
  CHECK(ga.raw_t60 == gb.raw_t60);
  CHECK(ga.raw_fc == gb.raw_fc);
  CHECK((ga.skew_raw - gb.skew_raw).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orthogonality is preserved under raw-space steps") {
  SmallCase c = make_case(LossKind::Mss, 37, false);
  LossEvaluator evaluator(c.setup);
  for (int step = 0; step < 5; ++step) {
    auto [value, grad] = evaluator.loss_and_gradient(c.params);
    (void)value;
    c.params.skew_raw -= 0.05 * grad.skew_raw;
    const RealizedParams p = reparameterize(c.params, c.setup.sample_rate);
    CHECK(orthogonality_error(p.feedback) < 1e-10);
  }
}

TEST_CASE("forward eval matches the loss-module compositions") {
  SmallCase c = make_case(LossKind::Mss, 41, false, 0.0);
  LossEvaluator evaluator(c.setup);
  const RealizedParams p = reparameterize(c.params, c.setup.sample_rate);
  const std::vector<LossKind> kinds{LossKind::EdcLin, LossKind::EdcLog,
                                    LossKind::Mss};
  auto values = evaluator.eval(p, kinds);
  const ImpulseResponse& model = evaluator.last_model_response();

  const LossValue mss =
      mss_loss(c.setup.target, model, c.setup.objective.mss);
  CHECK(values[LossKind::Mss].value ==
        doctest::Approx(mss.value).epsilon(1e-9));
  const LossValue lin = edc_loss(c.setup.target, model,
                                 c.setup.objective.bands_hz, EdcScale::Linear,
                                 c.setup.objective.fir_taps);
  CHECK(values[LossKind::EdcLin].value ==
        doctest::Approx(lin.value).epsilon(1e-9));
  const LossValue db = edc_loss(c.setup.target, model,
                                c.setup.objective.bands_hz, EdcScale::Db,
                                c.setup.objective.fir_taps);
  CHECK(values[LossKind::EdcLog].value ==
        doctest::Approx(db.value).epsilon(1e-9));
}

TEST_CASE("mixing-time truncation flows through the evaluator") {
  SmallCase c = make_case(LossKind::EdcLin, 43, false);
  const double tmix = 0.004;
  const int drop =
      static_cast<int>(std::lround(tmix * c.setup.sample_rate));
  EvaluatorSetup setup = c.setup;
  setup.mixing_time_s = tmix;
  ImpulseResponse truncated = setup.target;
  truncated.samples.erase(truncated.samples.begin(),
                          truncated.samples.begin() + drop);
  setup.target = truncated;
  LossEvaluator evaluator(setup);
  const GradCheckReport report = gradient_check(evaluator, c.params, 1e-4);
  CHECK(report.max_rel_err < 1e-4);
}
