#include "fdntune/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "fdntune/attenuation.hpp"
#include "fdntune/io.hpp"
#include "fdntune/rng.hpp"

namespace fdntune {

using nlohmann::json;

namespace {

// Model delay lengths used throughout the 48 kHz analysis experiments.
const std::vector<int> kModelDelays48k = {997, 1153, 1327, 1559, 1801, 2099};

ImpulseResponse render_scene_fdn(const FdnParams& fdn,
                                 const AttenuationParams& atten,
                                 const FrequencyGrid& grid) {
  std::vector<ShelvingCoeffs> sections;
  sections.reserve(fdn.delays.size());
  for (int d : fdn.delays)
    sections.push_back(design_shelving(atten, d, fdn.sample_rate));
  std::vector<cdouble> h(grid.num_bins);
  fdn_frequency_response(fdn, AttenuationSource::shelving(sections), grid, h);
  return response_to_ir(h, fdn.sample_rate);
}

std::vector<PerturbParam> expand_perturb_params(const std::string& names) {
  if (names == "all")
    return {PerturbParam::None, PerturbParam::InputGains,
            PerturbParam::OutputGains, PerturbParam::Feedback,
            PerturbParam::Delays};
  std::vector<PerturbParam> out;
  std::string token;
  for (char ch : names + ",") {
    if (ch == ',') {
      if (!token.empty()) out.push_back(parse_perturb_param(token));
      token.clear();
    } else {
      token += ch;
    }
  }
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir.string());
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["preset"] = cfg.preset;
  j["seed"] = cfg.seed;
  j["landscape_fs"] = cfg.landscape_fs;
  j["landscape_bins"] = cfg.landscape_bins;
  j["landscape_steps"] = cfg.landscape_steps;
  j["perturb_steps"] = cfg.perturb_steps;
  j["perturb_instances"] = cfg.perturb_instances;
  j["sweep"] = cfg.sweep;
  j["noise"] = cfg.noise;
  j["snr_db"] = cfg.snr_db;
  j["tmix_ms"] = cfg.tmix_ms;
  j["target_t60_s"] = cfg.target_t60_s;
  j["target_fc_hz"] = cfg.target_fc_hz;
  j["t60_ny_s"] = cfg.t60_ny_s;
  j["sweep_t60_lo_s"] = cfg.sweep_t60_lo_s;
  j["sweep_t60_hi_s"] = cfg.sweep_t60_hi_s;
  j["sweep_fc_lo_hz"] = cfg.sweep_fc_lo_hz;
  j["sweep_fc_hi_hz"] = cfg.sweep_fc_hi_hz;
  j["perturb_params"] = cfg.perturb_params;
  j["perturb_snr_db"] = cfg.perturb_snr_db;
  j["render_snr_db"] = cfg.render_snr_db;
  j["study_sample_rate"] = cfg.study.base.sample_rate;
  j["study_bins"] = cfg.study.base.num_bins;
  j["study_trials_per_cell"] = cfg.study.trials_per_cell;
  j["study_epochs"] = cfg.study.base.epochs;
  j["study_iters_per_epoch"] = cfg.study.base.iters_per_epoch;
  j["study_patience"] = cfg.study.base.patience;
  j["study_lr_attenuation"] = cfg.study.base.lr_attenuation;
  j["study_lr_frequency_independent"] =
      cfg.study.base.lr_frequency_independent;
  j["study_sparsity_weight"] = cfg.study.base.sparsity_weight;
  j["study_snr_db"] = cfg.study.base.snr_db;
  j["gradcheck_lines"] = cfg.gradcheck_lines;
  j["gradcheck_bins"] = cfg.gradcheck_bins;
  j["gradcheck_tolerance"] = cfg.gradcheck_tolerance;
  return j;
}

}  // namespace

RunConfig make_preset(const std::string& name, const std::string& command) {
  RunConfig cfg;
  cfg.command = command;
  cfg.preset = name;
  cfg.study.base.sample_rate = 16000.0;
  cfg.study.base.num_bins = 32001;
  if (name == "paper") {
    cfg.landscape_bins = 98001;
    cfg.landscape_steps = 1000;
    cfg.perturb_steps = 200;
    cfg.perturb_instances = 50;
    cfg.study.base.sample_rate = 48000.0;
    cfg.study.base.num_bins = 98001;
    cfg.study.base.iters_per_epoch = 200;
    cfg.study.trials_per_cell = 80;
  } else if (name == "desk") {
    cfg.landscape_bins = 96001;
    cfg.landscape_steps = 200;
    cfg.perturb_steps = 100;
    cfg.perturb_instances = 16;
    cfg.study.base.iters_per_epoch = 37;
    cfg.study.trials_per_cell = 10;
  } else if (name == "ci") {
    cfg.landscape_bins = 48001;
    cfg.landscape_steps = 50;
    cfg.perturb_steps = 30;
    cfg.perturb_instances = 4;
    cfg.study.base.num_bins = 4001;
    cfg.study.base.iters_per_epoch = 5;
    cfg.study.base.epochs = 6;
    cfg.study.base.patience = 3;
    cfg.study.trials_per_cell = 2;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return cfg;
}

AnalysisScene build_analysis_scene(const RunConfig& cfg,
                                   const std::string& model_style) {
  AnalysisScene scene;
  const double fs = cfg.landscape_fs;
  scene.target_theta =
      AttenuationParams{cfg.target_t60_s, cfg.target_fc_hz, cfg.t60_ny_s};
  scene.target_theta.validate(fs);

  const int dlo = static_cast<int>(std::lround(0.015 * fs));
  const int dhi = static_cast<int>(std::lround(0.045 * fs));
  const FrequencyGrid grid = make_frequency_grid(cfg.landscape_bins);

  Rng rng_target(Rng::derive(cfg.seed, 11));
  FdnParams target;
  target.sample_rate = fs;
  target.delays = sample_coprime_delays(32, dlo, dhi, rng_target);
  target.feedback = random_orthogonal(32, rng_target);
  target.input_gains = Eigen::VectorXd(32);
  for (int i = 0; i < 32; ++i)
    target.input_gains(i) = (i % 2 == 0) ? 1.0 : -1.0;
  target.output_gains = Eigen::VectorXd::Ones(32);
  scene.target_fdn = target;
  scene.target_clean = render_scene_fdn(target, scene.target_theta, grid);

  Rng rng_model(Rng::derive(cfg.seed, 12));
  FdnParams model;
  model.sample_rate = fs;
  model.delays = fs == 48000.0 ? kModelDelays48k
                               : sample_coprime_delays(6, dlo, dhi, rng_model);
  const int n = static_cast<int>(model.delays.size());
  model.feedback = random_orthogonal(n, rng_model);
  model.input_gains = Eigen::VectorXd(n);
  model.output_gains = Eigen::VectorXd(n);
  if (model_style == "alternating") {
    for (int i = 0; i < n; ++i) {
      model.input_gains(i) = (i % 2 == 0) ? 1.0 : -1.0;
      model.output_gains(i) = 1.0;
    }
  } else if (model_style == "normal") {
    for (int i = 0; i < n; ++i) {
      model.input_gains(i) = rng_model.normal();
      model.output_gains(i) = rng_model.normal();
    }
  } else {
    throw std::invalid_argument("unknown model style: " + model_style);
  }
  scene.model = match_energy(model, scene.target_theta,
                             scene.target_clean.energy(), grid);

  scene.analysis.num_bins = cfg.landscape_bins;
  scene.analysis.mss = MssConfig::defaults();
  scene.analysis.bands_hz = OctaveFilterBank::default_centers(fs);
  scene.analysis.fir_taps = 2049;
  scene.analysis.t60_ny_s = cfg.t60_ny_s;
  return scene;
}

ProfileSpec landscape_spec_from_config(const RunConfig& cfg) {
  ProfileSpec spec;
  spec.target =
      AttenuationParams{cfg.target_t60_s, cfg.target_fc_hz, cfg.t60_ny_s};
  if (cfg.sweep == "t60") {
    spec.theta_start =
        AttenuationParams{cfg.sweep_t60_lo_s, cfg.target_fc_hz, cfg.t60_ny_s};
    spec.theta_end =
        AttenuationParams{cfg.sweep_t60_hi_s, cfg.target_fc_hz, cfg.t60_ny_s};
  } else if (cfg.sweep == "fc") {
    spec.theta_start =
        AttenuationParams{cfg.target_t60_s, cfg.sweep_fc_lo_hz, cfg.t60_ny_s};
    spec.theta_end =
        AttenuationParams{cfg.target_t60_s, cfg.sweep_fc_hi_hz, cfg.t60_ny_s};
  } else {
    throw std::invalid_argument("unknown sweep: " + cfg.sweep);
  }
  spec.num_steps = cfg.landscape_steps;
  spec.noise = parse_noise_condition(cfg.noise);
  spec.snr_db = cfg.snr_db;
  spec.noise_seed = Rng::derive(cfg.seed, 21);
  spec.mixing_time_s = cfg.tmix_ms * 1e-3;
  return spec;
}

void write_config_snapshot(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  write_text_file(cfg.out_dir / "resolved_config.json",
                  config_to_json(cfg).dump(2) + "\n");
}

void write_profile_csv(const std::filesystem::path& path,
                       const LossProfile& profile) {
  CsvWriter csv(path);
  std::vector<std::string> names{"step", "t60_s", "fc_hz"};
  for (const auto& [kind, curve] : profile.curves) {
    const std::string base = loss_kind_name(kind);
    names.push_back(base);
    names.push_back(base + "_std");
    if (!curve.q1.empty()) {
      names.push_back(base + "_q1");
      names.push_back(base + "_q3");
    }
  }
  csv.header(names);
  std::map<LossKind, std::vector<double>> standardized;
  for (const auto& [kind, curve] : profile.curves)
    standardized[kind] = standardize(curve.median);
  const int steps = static_cast<int>(profile.steps.size());
  for (int s = 0; s < steps; ++s) {
    csv.begin_row();
    csv.field(s);
    csv.field(profile.steps[s].t60_s);
    csv.field(profile.steps[s].crossover_hz);
    for (const auto& [kind, curve] : profile.curves) {
      csv.field(curve.median[s]);
      csv.field(standardized[kind][s]);
      if (!curve.q1.empty()) {
        csv.field(curve.q1[s]);
        csv.field(curve.q3[s]);
      }
    }
    csv.end_row();
  }
}

void write_profile_summary(const std::filesystem::path& path,
                           const LossProfile& profile,
                           const AttenuationParams& target) {
  json j;
  j["target"]["t60_s"] = target.t60_dc_s;
  j["target"]["fc_hz"] = target.crossover_hz;
  j["num_steps"] = profile.steps.size();
  j["num_instances"] = profile.num_instances;
  for (const auto& [kind, curve] : profile.curves) {
    json c;
    c["argmin_index"] = curve.argmin_index;
    c["argmin_t60_s"] = profile.steps[curve.argmin_index].t60_s;
    c["argmin_fc_hz"] = profile.steps[curve.argmin_index].crossover_hz;
    c["mae_t60_pct"] =
        relative_mae(curve.instance_argmin_t60, target.t60_dc_s);
    c["mae_fc_pct"] =
        relative_mae(curve.instance_argmin_fc, target.crossover_hz);
    j["losses"][loss_kind_name(kind)] = c;
  }
  write_text_file(path, j.dump(2) + "\n");
}

int cmd_render(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  write_config_snapshot(cfg);
  AnalysisScene scene = build_analysis_scene(cfg, "alternating");
  const FrequencyGrid grid = make_frequency_grid(cfg.landscape_bins);

  ImpulseResponse target = scene.target_clean;
  if (cfg.render_snr_db > 0.0)
    target =
        add_noise_at_snr(target, cfg.render_snr_db, Rng::derive(cfg.seed, 31));
  write_wav(cfg.out_dir / "target.wav", target);

  const ImpulseResponse model =
      render_scene_fdn(scene.model, scene.target_theta, grid);
  write_wav(cfg.out_dir / "model.wav", model);

  // Filter magnitude and decay-time curves per delay line.
  {
    const FrequencyGrid dense = make_frequency_grid(2049);
    CsvWriter csv(cfg.out_dir / "filters.csv");
    std::vector<std::string> names{"frequency_hz"};
    for (int d : scene.model.delays) {
      names.push_back("mag_db_m" + std::to_string(d));
      names.push_back("t60_s_m" + std::to_string(d));
    }
    csv.header(names);
    std::vector<std::vector<double>> mags, t60s;
    for (int d : scene.model.delays) {
      const ShelvingCoeffs coeffs =
          design_shelving(scene.target_theta, d, cfg.landscape_fs);
      const auto response = eval_filter(coeffs, dense);
      std::vector<double> mag(dense.num_bins);
      for (int k = 0; k < dense.num_bins; ++k) mag[k] = std::abs(response[k]);
      t60s.push_back(gain_to_t60_curve(mag, d, cfg.landscape_fs));
      mags.push_back(std::move(mag));
    }
    for (int k = 0; k < dense.num_bins; ++k) {
      csv.begin_row();
      csv.field(dense.angle(k) / (2.0 * kPi) * cfg.landscape_fs);
      for (size_t i = 0; i < mags.size(); ++i) {
        csv.field(20.0 * std::log10(mags[i][k]));
        csv.field(t60s[i][k]);
      }
      csv.end_row();
    }
  }

  // Banded decay curves for target and model.
  {
    const OctaveFilterBank bank(scene.analysis.bands_hz, cfg.landscape_fs,
                                scene.analysis.fir_taps);
    const EnergyDecayCurve et = edc_in_bands(target, bank, EdcScale::Db);
    const EnergyDecayCurve em = edc_in_bands(model, bank, EdcScale::Db);
    CsvWriter csv(cfg.out_dir / "edc.csv");
    std::vector<std::string> names{"time_s"};
    for (double c : bank.centers()) {
      names.push_back("target_db_" + format_double(c));
      names.push_back("model_db_" + format_double(c));
    }
    csv.header(names);
    const int stride = std::max(1, et.length / 2000);
    for (int t = 0; t < et.length; t += stride) {
      csv.begin_row();
      csv.field(t / cfg.landscape_fs);
      for (size_t b = 0; b < bank.centers().size(); ++b) {
        csv.field(et.at(static_cast<int>(b), t));
        csv.field(em.at(static_cast<int>(b), t));
      }
      csv.end_row();
    }
  }

  // Spectrograms and their log/linear distance maps.
  {
    const int window = 512, hop = 256;
    const Spectrogram st = stft_magnitude(target, window, hop);
    const Spectrogram sm = stft_magnitude(model, window, hop);
    const DistanceMaps maps = stft_distance_maps(target, model, window, hop);
    CsvWriter csv(cfg.out_dir / "spectrogram.csv");
    csv.header({"time_s", "frequency_hz", "target_db", "model_db",
                "log_distance", "linear_distance"});
    const int stride = std::max(1, st.frames / 128);
    for (int t = 0; t < st.frames; t += stride)
      for (int f = 0; f < st.bins; ++f) {
        csv.begin_row();
        csv.field(t * hop / cfg.landscape_fs);
        csv.field(f * cfg.landscape_fs / window);
        csv.field(20.0 * std::log10(std::max(st.at(t, f), kLogMagClamp)));
        csv.field(20.0 * std::log10(std::max(sm.at(t, f), kLogMagClamp)));
        csv.field(maps.log_map.at(t, f));
        csv.field(maps.linear_map.at(t, f));
        csv.end_row();
      }
  }

  // Loss values with their named components against the rendered target.
  {
    json j;
    const LossValue mss = mss_loss(target, model, scene.analysis.mss);
    const LossValue lin = edc_loss(target, model, scene.analysis.bands_hz,
                                   EdcScale::Linear, scene.analysis.fir_taps);
    const LossValue db = edc_loss(target, model, scene.analysis.bands_hz,
                                  EdcScale::Db, scene.analysis.fir_taps);
    const LossValue composite = composite_objective(
        mss, scene.model.feedback, CompositeWeights{1.0, 1.0});
    const auto dump = [](const LossValue& v) {
      json e;
      e["value"] = v.value;
      for (const auto& [name, comp] : v.components) e["components"][name] = comp;
      return e;
    };
    j["mss"] = dump(mss);
    j["edc_lin"] = dump(lin);
    j["edc_log"] = dump(db);
    j["composite_mss_sparsity"] = dump(composite);
    write_text_file(cfg.out_dir / "losses.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_landscape(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  write_config_snapshot(cfg);
  AnalysisScene scene = build_analysis_scene(cfg, "alternating");
  const ProfileSpec spec = landscape_spec_from_config(cfg);
  const std::vector<LossKind> kinds{LossKind::EdcLin, LossKind::EdcLog,
                                    LossKind::Mss, LossKind::MssSc,
                                    LossKind::MssSm};
  const LossProfile profile = compute_profile(
      scene.model, scene.target_clean, spec, kinds, scene.analysis);
  write_profile_csv(cfg.out_dir / "profile.csv", profile);
  write_profile_summary(cfg.out_dir / "summary.json", profile, spec.target);
  return 0;
}

int cmd_perturb(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  write_config_snapshot(cfg);
  AnalysisScene scene = build_analysis_scene(cfg, "alternating");
  const std::vector<LossKind> kinds{LossKind::EdcLin, LossKind::EdcLog,
                                    LossKind::Mss};
  const std::vector<PerturbParam> rows =
      expand_perturb_params(cfg.perturb_params);

  CsvWriter table(cfg.out_dir / "perturbation_table.csv");
  std::vector<std::string> names{"parameter", "component"};
  for (LossKind k : kinds) names.push_back("mae_pct_" + loss_kind_name(k));
  table.header(names);

  for (PerturbParam row : rows) {
    PerturbationSpec pert;
    pert.parameter = row;
    pert.num_instances = row == PerturbParam::None ? 1 : cfg.perturb_instances;
    pert.seed = Rng::derive(cfg.seed, 40 + static_cast<int>(row));
    for (const std::string& sweep : {std::string("t60"), std::string("fc")}) {
      RunConfig sweep_cfg = cfg;
      sweep_cfg.sweep = sweep;
      sweep_cfg.noise = "aware";
      sweep_cfg.snr_db = cfg.perturb_snr_db;
      sweep_cfg.landscape_steps = cfg.perturb_steps;
      const ProfileSpec spec = landscape_spec_from_config(sweep_cfg);
      const LossProfile profile = compute_perturbed_profile(
          scene.model, scene.target_clean, spec, pert, kinds, scene.analysis);
      write_profile_csv(cfg.out_dir / ("profile_" + perturb_param_name(row) +
                                       "_" + sweep + ".csv"),
                        profile);
      table.begin_row();
      table.field(perturb_param_name(row));
      table.field(sweep);
      for (LossKind k : kinds) {
        const ProfileCurve& curve = profile.curves.at(k);
        table.field(sweep == "t60"
                        ? relative_mae(curve.instance_argmin_t60,
                                       spec.target.t60_dc_s)
                        : relative_mae(curve.instance_argmin_fc,
                                       spec.target.crossover_hz));
      }
      table.end_row();
    }
  }
  return 0;
}

void write_study_outputs(const std::filesystem::path& dir,
                         const StudyReport& report) {
  {
    CsvWriter csv(dir / "study_report.csv");
    csv.header({"test", "loss", "mae_t60_pct", "mae_fc_pct", "mean_epochs",
                "failures", "trials"});
    for (const StudyCell& cell : report.cells) {
      csv.begin_row();
      csv.field(cell.test_id);
      csv.field(loss_kind_name(cell.loss));
      csv.field(cell.mae_t60_pct);
      csv.field(cell.mae_fc_pct);
      csv.field(cell.mean_epochs);
      csv.field(cell.failures);
      csv.field(cell.trials);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(dir / "trajectories.csv");
    csv.header({"trial", "test", "loss", "epoch", "mean_objective"});
    for (const TrialRecord& r : report.records)
      for (size_t e = 0; e < r.epoch_loss.size(); ++e) {
        csv.begin_row();
        csv.field(r.trial_id);
        csv.field(r.test_id);
        csv.field(loss_kind_name(r.loss));
        csv.field(static_cast<int>(e));
        csv.field(r.epoch_loss[e]);
        csv.end_row();
      }
  }
  {
    json j;
    j["cells"] = json::array();
    for (const StudyCell& cell : report.cells) {
      json c;
      c["test"] = cell.test_id;
      c["loss"] = loss_kind_name(cell.loss);
      c["mae_t60_pct"] = cell.mae_t60_pct;
      c["mae_fc_pct"] = cell.mae_fc_pct;
      c["mean_epochs"] = cell.mean_epochs;
      c["failures"] = cell.failures;
      c["trials"] = cell.trials;
      j["cells"].push_back(c);
    }
    j["trials"] = json::array();
    for (const TrialRecord& r : report.records) {
      json t;
      t["trial"] = r.trial_id;
      t["test"] = r.test_id;
      t["loss"] = loss_kind_name(r.loss);
      t["failed"] = r.failed;
      t["epochs_run"] = r.epochs_run;
      t["target_t60_s"] = r.target_t60_s;
      t["target_fc_hz"] = r.target_fc_hz;
      t["final_t60_s"] = r.final_t60_s;
      t["final_fc_hz"] = r.final_fc_hz;
      t["err_t60_pct"] = r.err_t60_pct;
      t["err_fc_pct"] = r.err_fc_pct;
      j["trials"].push_back(t);
    }
    write_text_file(dir / "study_report.json", j.dump(2) + "\n");
  }
}

int cmd_study(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  write_config_snapshot(cfg);
  StudyConfig study = cfg.study;
  study.base_seed = Rng::derive(cfg.seed, 50);
  if (study.base.bands_hz.empty())
    study.base.bands_hz = default_bands_for_rate(study.base.sample_rate);
  const StudyReport report = run_study(study);
  write_study_outputs(cfg.out_dir, report);
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  write_config_snapshot(cfg);
  const double fs = 16000.0;
  const int n = cfg.gradcheck_lines;
  const int bins = cfg.gradcheck_bins;

  // Decay times long enough that magnitudes stay clear of the log clamp
  // over the rendered window; finite differences sit in the quadratic
  // regime there.
  TrialConfig synth;
  synth.sample_rate = fs;
  synth.num_bins = bins;
  synth.n_target = 8;
  synth.snr_db = 30.0;
  synth.t60_prior_lo_s = 0.35;
  synth.t60_prior_hi_s = 0.5;
  synth.t60_ny_s = 0.3;
  const TargetBundle target = synthesize_target(Rng::derive(cfg.seed, 61),
                                                synth);

  Rng rng(Rng::derive(cfg.seed, 62));
  ParamVector pv;
  pv.skew_raw = Eigen::MatrixXd(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pv.skew_raw(i, j) = rng.normal();
  pv.input_gains = Eigen::VectorXd(n);
  pv.output_gains = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    pv.input_gains(i) = rng.normal();
    pv.output_gains(i) = rng.normal();
  }
  pv.raw_t60 = raw_from_t60(0.4);
  pv.raw_fc = raw_from_fc(2500.0, fs);
  pv.mask = TrainMask{true, true, true, true, true};
  std::vector<int> delays = sample_coprime_delays(n, 40, 160, rng);

  const std::vector<LossKind> kinds{LossKind::EdcLin, LossKind::EdcLog,
                                    LossKind::Mss, LossKind::MssSc,
                                    LossKind::MssSm};
  json j;
  double worst = 0.0;
  for (LossKind kind : kinds) {
    EvaluatorSetup setup;
    setup.delays = delays;
    setup.sample_rate = fs;
    setup.num_bins = bins;
    setup.t60_ny_s = 0.3;
    setup.objective.primary = kind;
    setup.objective.mss = MssConfig{{{256, 128}, {512, 256}}};
    setup.objective.bands_hz = {500.0, 1000.0, 2000.0, 4000.0};
    setup.objective.sparsity_weight = 1.0;
    setup.target = target.noisy;
    LossEvaluator evaluator(std::move(setup));
    const GradCheckReport report = gradient_check(evaluator, pv, 1e-6);
    json entry;
    entry["max_rel_err"] = report.max_rel_err;
    for (const GradCheckEntry& e : report.entries) {
      json item;
      item["group"] = e.group;
      item["index"] = e.index;
      item["analytic"] = e.analytic;
      item["numeric"] = e.numeric;
      item["rel_err"] = e.rel_err;
      entry["entries"].push_back(item);
    }
    j[loss_kind_name(kind)] = entry;
    worst = std::max(worst, report.max_rel_err);
  }
  j["max_rel_err"] = worst;
  j["tolerance"] = cfg.gradcheck_tolerance;
  j["pass"] = worst < cfg.gradcheck_tolerance;
  write_text_file(cfg.out_dir / "gradcheck.json", j.dump(2) + "\n");
  return worst < cfg.gradcheck_tolerance ? 0 : 3;
}

int run_command(const RunConfig& cfg) {
  if (cfg.command == "render") return cmd_render(cfg);
  if (cfg.command == "landscape") return cmd_landscape(cfg);
  if (cfg.command == "perturb") return cmd_perturb(cfg);
  if (cfg.command == "study") return cmd_study(cfg);
  if (cfg.command == "gradcheck") return cmd_gradcheck(cfg);
  throw std::invalid_argument("unknown command: " + cfg.command);
}

}  // namespace fdntune
