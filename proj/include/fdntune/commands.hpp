#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdntune/landscape.hpp"
#include "fdntune/study.hpp"

namespace fdntune {

// Resolved run settings shared by the CLI and the test drivers. A preset
// fills the scale fields; explicit flags override them afterwards.
struct RunConfig {
  std::string command;
  std::string preset = "desk";  // paper | desk | ci
  std::uint64_t seed = 1234;
  std::filesystem::path out_dir = "out";
  int jobs = 0;

  // Landscape / perturbation scale (fixed 48 kHz analysis rate).
  double landscape_fs = 48000.0;
  int landscape_bins = 96001;
  int landscape_steps = 200;
  int perturb_steps = 100;
  int perturb_instances = 16;

  // Sweep settings.
  std::string sweep = "t60";  // t60 | fc
  std::string noise = "none";  // none | target | aware
  double snr_db = 70.0;
  double tmix_ms = 0.0;
  double target_t60_s = 2.0;
  double target_fc_hz = 10000.0;
  double t60_ny_s = 0.5;
  double sweep_t60_lo_s = 0.25;
  double sweep_t60_hi_s = 3.75;
  double sweep_fc_lo_hz = 1600.0;
  double sweep_fc_hi_hz = 16000.0;

  // Perturbation rows; "all" expands to none,b,c,U,m.
  std::string perturb_params = "all";
  double perturb_snr_db = 10.0;

  // Render extras.
  double render_snr_db = 0.0;  // 0 disables noise on the rendered target

  // Study settings.
  StudyConfig study;

  // Gradcheck settings.
  int gradcheck_lines = 4;
  int gradcheck_bins = 4096;
  double gradcheck_tolerance = 1e-4;
};

RunConfig make_preset(const std::string& name, const std::string& command);

// Shared builders for the analysis experiments (target at 48 kHz unless the
// config says otherwise).
struct AnalysisScene {
  FdnParams target_fdn;
  ImpulseResponse target_clean;
  AttenuationParams target_theta;
  FdnParams model;  // energy matched at the target state
  AnalysisConfig analysis;
};

// style: "alternating" (unit gains, alternating input signs) or "normal"
// (gains drawn from a standard normal before energy matching).
AnalysisScene build_analysis_scene(const RunConfig& cfg,
                                   const std::string& model_style);

ProfileSpec landscape_spec_from_config(const RunConfig& cfg);

int cmd_render(const RunConfig& cfg);
int cmd_landscape(const RunConfig& cfg);
int cmd_perturb(const RunConfig& cfg);
int cmd_study(const RunConfig& cfg);
int cmd_gradcheck(const RunConfig& cfg);

int run_command(const RunConfig& cfg);

void write_config_snapshot(const RunConfig& cfg);

void write_profile_csv(const std::filesystem::path& path,
                       const LossProfile& profile);
void write_profile_summary(const std::filesystem::path& path,
                           const LossProfile& profile,
                           const AttenuationParams& target);
void write_study_outputs(const std::filesystem::path& dir,
                         const StudyReport& report);

}  // namespace fdntune
