// Timing harness comparing the serial reference kernels with the
// OpenMP-parallel ones, plus an end-to-end gradient iteration.

#include <omp.h>

#include <cstdio>
#include <vector>

#include "fdntune/attenuation.hpp"
#include "fdntune/fdn.hpp"
#include "fdntune/grad.hpp"
#include "fdntune/rng.hpp"
#include "fdntune/study.hpp"

using namespace fdntune;

namespace {

double time_once(const char* label, int repeats, auto&& fn) {
  fn();  // warm-up
  const double t0 = omp_get_wtime();
  for (int r = 0; r < repeats; ++r) fn();
  const double dt = (omp_get_wtime() - t0) / repeats;
  std::printf("%-44s %9.3f ms\n", label, dt * 1e3);
  return dt;
}

void bench_response(int n, int bins) {
  Rng rng(7);
  FdnParams p;
  p.sample_rate = 48000.0;
  p.delays = sample_coprime_delays(n, 720, 2160, rng);
  p.feedback = random_orthogonal(n, rng);
  p.input_gains = Eigen::VectorXd::Ones(n);
  p.output_gains = Eigen::VectorXd::Ones(n);
  const AttenuationParams atten{2.0, 10000.0, 0.5};
  std::vector<ShelvingCoeffs> sections;
  for (int d : p.delays) sections.push_back(design_shelving(atten, d, 48000.0));
  const AttenuationSource src = AttenuationSource::shelving(sections);
  const FrequencyGrid grid = make_frequency_grid(bins);
  const DelayPhaseTable phases = DelayPhaseTable::build(p.delays, grid);
  std::vector<cdouble> out(bins);

  char label[96];
  std::snprintf(label, sizeof(label), "response serial     N=%-2d M=%d", n,
                bins);
  const double serial = time_once(label, 3, [&] {
    fdn_frequency_response_serial(p, src, grid, phases, out);
  });
  std::snprintf(label, sizeof(label), "response openmp     N=%-2d M=%d", n,
                bins);
  const double parallel = time_once(label, 3, [&] {
    fdn_frequency_response(p, src, grid, phases, out);
  });
  std::printf("%-44s %9.2fx\n", "  speedup", serial / parallel);
}

void bench_gradient_iteration() {
  TrialConfig cfg;
  cfg.sample_rate = 16000.0;
  cfg.num_bins = 32001;
  cfg.seed = 11;
  const TargetBundle target = synthesize_target(Rng::derive(cfg.seed, 1), cfg);
  LearnableInit learn = init_learnable(Rng::derive(cfg.seed, 2),
                                       target.clean_energy, target.theta, cfg);
  learn.params.mask = TrainMask{true, true, true, true, true};

  for (LossKind kind : {LossKind::EdcLin, LossKind::Mss}) {
    EvaluatorSetup setup;
    setup.delays = learn.fdn.delays;
    setup.sample_rate = cfg.sample_rate;
    setup.num_bins = cfg.num_bins;
    setup.t60_ny_s = cfg.t60_ny_s;
    setup.objective.primary = kind;
    setup.objective.bands_hz = default_bands_for_rate(cfg.sample_rate);
    setup.objective.sparsity_weight = 1.0;
    setup.target = target.noisy;
    LossEvaluator evaluator(std::move(setup));
    char label[96];
    std::snprintf(label, sizeof(label),
                  "loss+gradient %-8s N=6  M=%d", loss_kind_name(kind).c_str(),
                  cfg.num_bins);
    time_once(label, 5, [&] {
      auto result = evaluator.loss_and_gradient(learn.params);
      (void)result;
    });
  }
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  bench_response(6, 96001);
  bench_response(32, 96001);
  bench_gradient_iteration();
  return 0;
}
