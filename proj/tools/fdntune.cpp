#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>

#include "fdntune/commands.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O failure.
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CliOptions {
  std::string preset = "desk";
  std::uint64_t seed = 1234;
  std::string out_dir = "out";
  int jobs = 0;

  std::string sweep = "t60";
  std::string noise = "none";
  double snr_db = 70.0;
  double tmix_ms = 0.0;
  int steps = 0;

  std::string perturb_params = "all";
  int instances = 0;
  double perturb_snr_db = 10.0;

  std::vector<int> tests = {1, 2, 3, 4};
  std::vector<std::string> losses = {"edc_lin", "edc_log", "mss"};
  int trials = 0;
  double lr_attenuation = 0.0;
  double lr_fi = 0.0;
  double sparsity_weight = -1.0;
  bool redraw_noise = false;

  double t60 = 2.0;
  double fc = 10000.0;
  double t60_ny = 0.5;
  double render_snr_db = 0.0;

  int gradcheck_lines = 4;
  int gradcheck_bins = 4096;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--preset", opt.preset, "Scale preset: paper, desk or ci")
      ->check(CLI::IsMember({"paper", "desk", "ci"}));
  cmd->add_option("--seed", opt.seed, "Root seed for all randomness");
  cmd->add_option("--out", opt.out_dir, "Output directory");
  cmd->add_option("--jobs", opt.jobs, "Max worker threads (0 = library default)");
}

fdntune::RunConfig to_run_config(const std::string& command,
                                 const CliOptions& opt) {
  fdntune::RunConfig cfg = fdntune::make_preset(opt.preset, command);
  cfg.seed = opt.seed;
  cfg.out_dir = opt.out_dir;
  cfg.jobs = opt.jobs;
  cfg.sweep = opt.sweep;
  cfg.noise = opt.noise;
  cfg.snr_db = opt.snr_db;
  cfg.tmix_ms = opt.tmix_ms;
  if (opt.steps > 0) cfg.landscape_steps = opt.steps;
  cfg.perturb_params = opt.perturb_params;
  if (opt.instances > 0) cfg.perturb_instances = opt.instances;
  if (opt.steps > 0) cfg.perturb_steps = opt.steps;
  cfg.perturb_snr_db = opt.perturb_snr_db;
  cfg.target_t60_s = opt.t60;
  cfg.target_fc_hz = opt.fc;
  cfg.t60_ny_s = opt.t60_ny;
  cfg.render_snr_db = opt.render_snr_db;
  cfg.study.tests = opt.tests;
  cfg.study.losses.clear();
  for (const std::string& name : opt.losses)
    cfg.study.losses.push_back(fdntune::parse_loss_kind(name));
  if (opt.trials > 0) cfg.study.trials_per_cell = opt.trials;
  if (opt.lr_attenuation > 0.0)
    cfg.study.base.lr_attenuation = opt.lr_attenuation;
  if (opt.lr_fi > 0.0) cfg.study.base.lr_frequency_independent = opt.lr_fi;
  if (opt.sparsity_weight >= 0.0)
    cfg.study.base.sparsity_weight = opt.sparsity_weight;
  cfg.study.base.redraw_noise_each_iter = opt.redraw_noise;
  cfg.gradcheck_lines = opt.gradcheck_lines;
  cfg.gradcheck_bins = opt.gradcheck_bins;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable FDN attenuation tuning toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");
  app.allow_config_extras(false);

  CliOptions opt;

  CLI::App* render = app.add_subcommand(
      "render", "Render target/model responses, filter curves and decay data");
  add_common(render, opt);
  render->add_option("--t60", opt.t60, "Target decay time at dc [s]");
  render->add_option("--fc", opt.fc, "Target crossover [Hz]");
  render->add_option("--t60-ny", opt.t60_ny, "Decay time at Nyquist [s]");
  render->add_option("--noise-snr", opt.render_snr_db,
                     "Add noise to the rendered target at this SNR [dB]");

  CLI::App* landscape = app.add_subcommand(
      "landscape", "Loss profile along an attenuation-parameter path");
  add_common(landscape, opt);
  landscape->add_option("--sweep", opt.sweep, "Swept parameter: t60 or fc")
      ->check(CLI::IsMember({"t60", "fc"}));
  landscape
      ->add_option("--noise", opt.noise, "Noise condition: none, target, aware")
      ->check(CLI::IsMember({"none", "target", "aware"}));
  landscape->add_option("--snr-db", opt.snr_db, "Noise SNR [dB]");
  landscape->add_option("--tmix-ms", opt.tmix_ms,
                        "Drop this many milliseconds before the losses");
  landscape->add_option("--steps", opt.steps, "Number of path steps");
  landscape->add_option("--t60", opt.t60, "Target decay time at dc [s]");
  landscape->add_option("--fc", opt.fc, "Target crossover [Hz]");

  CLI::App* perturb = app.add_subcommand(
      "perturb", "Perturbation study over frequency-independent parameters");
  add_common(perturb, opt);
  perturb->add_option("--params", opt.perturb_params,
                      "Comma list of none,b,c,U,m or 'all'");
  perturb->add_option("--instances", opt.instances,
                      "Perturbation instances per step");
  perturb->add_option("--steps", opt.steps, "Number of path steps");
  perturb->add_option("--snr-db", opt.perturb_snr_db,
                      "Noise-aware SNR [dB]");

  CLI::App* study = app.add_subcommand(
      "study", "Gradient-descent study across the four noise/trainability tests");
  add_common(study, opt);
  study->add_option("--tests", opt.tests, "Test ids to run (1-4)");
  study->add_option("--losses", opt.losses,
                    "Losses: edc_lin, edc_log, mss");
  study->add_option("--trials", opt.trials, "Trials per (test, loss) cell");
  study->add_option("--lr-attenuation", opt.lr_attenuation,
                    "Adam rate for the attenuation pair");
  study->add_option("--lr-fi", opt.lr_fi,
                    "Adam rate for the frequency-independent block");
  study->add_option("--sparsity-weight", opt.sparsity_weight,
                    "Weight of the sparsity term in the objective");
  study->add_flag("--redraw-noise", opt.redraw_noise,
                  "Redraw the model-side noise every iteration");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference verification of every loss gradient");
  add_common(gradcheck, opt);
  gradcheck->add_option("--lines", opt.gradcheck_lines, "Model delay lines");
  gradcheck->add_option("--bins", opt.gradcheck_bins, "Frequency bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (opt.jobs > 0) omp_set_num_threads(opt.jobs);
    const std::string command = app.get_subcommands().front()->get_name();
    const fdntune::RunConfig cfg = to_run_config(command, opt);
    return fdntune::run_command(cfg);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const fdntune::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const fdntune::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
