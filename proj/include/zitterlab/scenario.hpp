#pragma once

// Scenario runner, presets, flat key/value configuration and parameter sweeps.

#include "zitterlab/core.hpp"
#include "zitterlab/dynamics.hpp"
#include "zitterlab/gauge.hpp"
#include "zitterlab/observables.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zitterlab {

/// Which effective-theory prediction a run is compared against.
enum class ScenarioCase { a, b, resonance };

const char* to_string(ScenarioCase c);

struct Scenario {
  std::string name = "custom";
  PacketSpec spec;
  DriveParams drive;
  MomentumGrid grid{256, 256, Vec2(0.0, 5.0), Vec2::Constant(6.0 * PacketSpec::default_sigma_p())};
  StepperConfig stepper;
  Real t_end = 12.0;
  Real sample_dt = 0.0;
  std::optional<Scales> scales;
  ScenarioCase kind = ScenarioCase::a;
  /// Preset compared against for ratios; empty when none.
  std::string reference;
  int density_snapshots = 5;

  Axis zb_axis() const { return kind == ScenarioCase::b ? Axis::z : Axis::x; }
};

/// Ordered key -> value map; the textual form of a Scenario.
using Settings = std::map<std::string, std::string>;

struct PresetInfo {
  std::string name;
  std::string description;
  Settings settings;
};

const std::vector<PresetInfo>& presets();

/// Throws ConfigError for an unknown name.
Settings preset_settings(const std::string& name);

/// `key = value` lines; `#` starts a comment. Throws ConfigError on malformed
/// lines, unknown or repeated keys.
Settings parse_settings(std::istream& is);

/// Preset name or path of a config file.
Settings load_settings(const std::string& preset_or_path);

/// Applies one `key=value` override.
void apply_assignment(Settings& settings, const std::string& assignment);

/// Throws ConfigError on unknown keys, unparsable values or stepper violations.
Scenario build_scenario(const Settings& settings);

/// Reference scenario named by `scenario.reference`, with `overrides` applied
/// except for keys tied to the run's identity or drive.
std::optional<Scenario> reference_scenario(const Scenario& scenario, const Settings& overrides);

void write_settings(std::ostream& os, const Settings& settings);

struct SimulateOptions {
  bool cross_check = true;
  bool overlap = true;
  bool snapshots = true;
};

struct Simulation {
  TimeSeries series;
  std::vector<Real> snapshot_times;
  std::vector<PositionDensity> snapshots;
  Real max_norm_drift = 0.0;
  /// max |r_gradient - r_sum| / max(1, |r|) over samples.
  Real max_method_gap = 0.0;
};

Simulation simulate(const Scenario& scenario, const SimulateOptions& options = {});

/// fit_zb on the scenario's ZB axis, with drive micromotion kept out of the
/// spectral search.
ZbSummary fit_scenario(const Scenario& scenario, const TimeSeries& series);

/// Sign of the ZB term w (1 - cos(omega t)) implied by a fit starting at t = 0.
Real signed_amplitude(const ZbSummary& fit);

struct Prediction {
  Real amplitude = 0.0;
  Real omega = 0.0;
  Real tau = 0.0;
  /// Ratios against the undriven reference (case a/b only).
  std::optional<Real> amp_ratio;
  std::optional<Real> freq_ratio;
};

Prediction predict(const Scenario& scenario);

struct ScenarioReport {
  ZbSummary fit;
  Prediction prediction;
  std::optional<ZbSummary> reference;
  std::string reference_name;
  Real amp_ratio = std::numeric_limits<Real>::quiet_NaN();
  Real freq_ratio = std::numeric_limits<Real>::quiet_NaN();
  Real tau_ratio = std::numeric_limits<Real>::quiet_NaN();
  Real overlap_min = 1.0;
  Real overlap_min_t20 = 1.0;
  int density_peaks_max = 0;
  std::vector<int> density_peaks;
  Real max_norm_drift = 0.0;
  Real max_method_gap = 0.0;
  bool checks_passed = true;
};

ScenarioReport analyse(const Scenario& scenario, const Simulation& sim, const std::optional<ZbSummary>& reference,
                       const std::string& reference_name = "");

void write_report(std::ostream& os, const Scenario& scenario, const ScenarioReport& report);

/// Simulates, fits and writes `<name>.timeseries.csv`, `<name>.summary.txt`
/// and density snapshots. Returns 0, or 1 when a numerical hygiene check
/// fails; throws on configuration and runtime errors after removing partial
/// outputs.
int run_scenario(const Scenario& scenario, const std::optional<Scenario>& reference,
                 const std::filesystem::path& outdir, ScenarioReport* report_out = nullptr);

struct SweepPoint {
  Real v_d = 0.0;
  Real omega_d = 0.0;
  std::string status;
  Real amp_ratio = std::numeric_limits<Real>::quiet_NaN();
  Real freq_ratio = std::numeric_limits<Real>::quiet_NaN();
  Real tau = std::numeric_limits<Real>::quiet_NaN();
  Real predicted_amp_ratio = std::numeric_limits<Real>::quiet_NaN();
  Real predicted_freq_ratio = std::numeric_limits<Real>::quiet_NaN();
  Real prediction_error = std::numeric_limits<Real>::quiet_NaN();
  Real max_norm_drift = 0.0;
  bool near_cdt = false;
};

struct SweepResult {
  std::vector<Real> v_d;
  std::vector<Real> omega_d;
  ScenarioCase kind = ScenarioCase::a;
  ZbSummary reference;
  /// Rows follow v_d, columns omega_d.
  Eigen::MatrixXd amp_ratio;
  Eigen::MatrixXd freq_ratio;
  Eigen::MatrixXd tau;
  Eigen::MatrixXd prediction_error;
  std::vector<SweepPoint> points;
  int failures = 0;
};

/// Runs the base scenario over the (v_d, omega_d) product, reusing one
/// undriven reference run. Writes sweep.csv and one summary per point when
/// outdir is non-empty.
SweepResult run_sweep(const Scenario& base, const std::vector<Real>& v_d, const std::vector<Real>& omega_d,
                      const std::filesystem::path& outdir, int jobs = 1);

struct GaugeCheck {
  int exit_code = 0;
  int worst_index = -1;
  Vec2 worst_point = Vec2::Zero();
  Real worst_deviation = 0.0;
};

/// Field-strength spectra at n_points pseudo-random points in [-5, 5]^2;
/// writes gauge_spectrum.csv (when outdir is non-empty) and echoes it to
/// `table`. exit_code is 0 when every spectrum is within 1e-4 of (-2, +2),
/// else 1. Throws ConfigError when n_points < 1.
GaugeCheck verify_gauge(const LaserConfig& cfg, int n_points, const std::filesystem::path& outdir,
                        std::ostream& table, std::uint64_t seed = 12345);

}  // namespace zitterlab
