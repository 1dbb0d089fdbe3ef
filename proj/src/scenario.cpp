#include "zitterlab/scenario.hpp"

#include "zitterlab/efftheory.hpp"
#include "zitterlab/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace zitterlab {

namespace {

// Every recognized key with its default; "auto" defers to derived values.
const Settings& defaults() {
  static const Settings d = {
      {"name", "custom"},
      {"case", "auto"},
      {"reference", ""},
      {"p0_x", "0"},
      {"p0_z", "5"},
      {"sigma_p_x", "0.15811388300841897"},
      {"sigma_p_z", "0.15811388300841897"},
      {"r0_x", "0"},
      {"r0_z", "0"},
      {"spinor_up_re", "0.70710678118654752"},
      {"spinor_up_im", "0"},
      {"spinor_down_re", "0"},
      {"spinor_down_im", "0.70710678118654752"},
      {"v_d", "0"},
      {"omega_d", "50"},
      {"phase", "0"},
      {"n_x", "256"},
      {"n_z", "256"},
      {"p_center_x", "auto"},
      {"p_center_z", "auto"},
      {"p_halfwidth_x", "auto"},
      {"p_halfwidth_z", "auto"},
      {"dt", "auto"},
      {"scheme", "quarter-period-subdivided"},
      {"t_end", "12"},
      {"sample_dt", "auto"},
      {"mass_kg", "1e-25"},
      {"kappa_per_m", "1e6"},
      {"density_snapshots", "5"},
  };
  return d;
}

// Keys a reference run inherits from the scenario it serves.
const std::set<std::string>& inherited_keys() {
  static const std::set<std::string> k = {"sigma_p_x",      "sigma_p_z",      "spinor_up_re", "spinor_up_im",
                                          "spinor_down_re", "spinor_down_im", "n_x",          "n_z",
                                          "scheme",         "mass_kg",        "kappa_per_m"};
  return k;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Real parse_real(const Settings& s, const std::string& key) {
  const std::string& text = s.at(key);
  Real v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError("config: " + key + " = '" + text + "' is not a finite number");
  }
  return v;
}

int parse_int(const Settings& s, const std::string& key) {
  const std::string& text = s.at(key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: " + key + " = '" + text + "' is not an integer");
  }
  return v;
}

std::optional<Real> parse_auto(const Settings& s, const std::string& key) {
  if (s.at(key) == "auto") return std::nullopt;
  return parse_real(s, key);
}

std::string format_real(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void check_key(const std::string& key) {
  if (!defaults().contains(key)) throw ConfigError("config: unknown key '" + key + "'");
}

Settings with_defaults(const Settings& settings) {
  Settings full = defaults();
  for (const auto& [k, v] : settings) {
    check_key(k);
    full[k] = v;
  }
  return full;
}

Settings make_preset(std::initializer_list<std::pair<const std::string, std::string>> kv) { return Settings(kv); }

ScenarioCase resolve_case(const std::string& tag, const PacketSpec& spec, const DriveParams& drive) {
  if (tag == "a") return ScenarioCase::a;
  if (tag == "b") return ScenarioCase::b;
  if (tag == "reso" || tag == "resonance") return ScenarioCase::resonance;
  if (tag != "auto") throw ConfigError("config: case must be one of auto, a, b, reso (got '" + tag + "')");
  if (drive.v_d > 0.0 && std::abs(spec.p0.x() - 0.5 * drive.omega_d) <= spec.sigma_p.x()) {
    return ScenarioCase::resonance;
  }
  return std::abs(spec.p0.y()) >= std::abs(spec.p0.x()) ? ScenarioCase::a : ScenarioCase::b;
}

/// Dephasing-free ZB amplitude |(1/2) sum |G|^2 d theta / d p_axis| for p_tilde(p).
template <typename Gradient>
Real grid_zb_amplitude(const Scenario& s, Gradient&& grad) {
  const SpinorField packet = make_gaussian(s.spec, s.grid);
  const RealArray density = (packet.up.abs2() + packet.down.abs2()) * s.grid.cell_area();
  RealArray w(s.grid.n_x(), s.grid.n_z());
  for (int iz = 0; iz < s.grid.n_z(); ++iz) {
    for (int ix = 0; ix < s.grid.n_x(); ++ix) {
      const Real g = grad(s.grid.momentum(ix, iz));
      w(ix, iz) = std::isfinite(g) ? density(ix, iz) * g : 0.0;
    }
  }
  return 0.5 * std::abs(pairwise_sum(w));
}

/// Largest deviation of the chosen component from its straight-line fit.
// Amplitude of the component at a known frequency and decay, by linear least
// squares; used where the free fit finds no oscillation.
Real projected_amplitude(const TimeSeries& series, Axis axis, Real omega, Real tau) {
  const auto n = static_cast<Eigen::Index>(series.size());
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(series.times.data(), n);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(series.position(axis).data(), n);
  const Eigen::ArrayXd envelope = std::isfinite(tau) ? Eigen::ArrayXd((-t.array() / tau).exp())
                                                     : Eigen::ArrayXd::Ones(n);
  Eigen::MatrixXd design(n, 4);
  design.col(0).setOnes();
  design.col(1) = t;
  design.col(2) = (envelope * (omega * t.array()).cos()).matrix();
  design.col(3) = (envelope * (omega * t.array()).sin()).matrix();
  const Eigen::Vector4d c = design.colPivHouseholderQr().solve(y);
  return std::hypot(c(2), c(3));
}

/// Writes through a temporary file so an interrupted run leaves nothing half-written.
class OutputSet {
 public:
  ~OutputSet() {
    if (!committed_) {
      std::error_code ec;
      for (const auto& p : written_) std::filesystem::remove(p, ec);
    }
  }

  template <typename Writer>
  void write(const std::filesystem::path& path, Writer&& writer) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      written_.push_back(tmp);
      writer(os);
      os.flush();
      if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
    written_.back() = path;
  }

  void commit() { committed_ = true; }

 private:
  std::vector<std::filesystem::path> written_;
  bool committed_ = false;
};

void write_density(std::ostream& os, const PositionDensity& d) {
  os << "x,z,density\n";
  char buf[96];
  for (Eigen::Index l = 0; l < d.values.cols(); ++l) {
    for (Eigen::Index j = 0; j < d.values.rows(); ++j) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", d.x(j), d.z(l), d.values(j, l));
      os << buf;
    }
  }
}

}  // namespace

const char* to_string(ScenarioCase c) {
  switch (c) {
    case ScenarioCase::a:
      return "a";
    case ScenarioCase::b:
      return "b";
    case ScenarioCase::resonance:
      return "reso";
  }
  return "?";
}

const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> list = {
      {"fig2a-ref", "undriven packet moving along z; ZB along x", make_preset({{"name", "fig2a-ref"}})},
      {"fig2a-j0half", "packet along z, 2 v_d/omega_d = 1.52 (J0 = 0.50)",
       make_preset({{"name", "fig2a-j0half"}, {"v_d", "38"}, {"reference", "fig2a-ref"}})},
      {"fig2a-j0tenth", "packet along z, 2 v_d/omega_d = 2.22 (J0 = 0.10)",
       make_preset({{"name", "fig2a-j0tenth"}, {"v_d", "55.5"}, {"reference", "fig2a-ref"}})},
      {"fig2b-ref", "undriven packet moving along x; ZB along z",
       make_preset({{"name", "fig2b-ref"}, {"p0_x", "5"}, {"p0_z", "0"}})},
      {"fig2b-141", "packet along x, 2 v_d/omega_d = 1.14 (J0 = 0.70)",
       make_preset({{"name", "fig2b-141"},
                    {"p0_x", "5"},
                    {"p0_z", "0"},
                    {"v_d", "28.5"},
                    {"t_end", "17"},
                    {"reference", "fig2b-ref"}})},
      {"fig2b-200", "packet along x, 2 v_d/omega_d = 1.52 (J0 = 0.50)",
       make_preset({{"name", "fig2b-200"},
                    {"p0_x", "5"},
                    {"p0_z", "0"},
                    {"v_d", "38"},
                    {"t_end", "24"},
                    {"reference", "fig2b-ref"}})},
      {"fig3-reso", "resonant drive p_x0 = omega_d/2 = 25, v_d = 10; ZB along x without splitting",
       make_preset({{"name", "fig3-reso"},
                    {"p0_x", "25"},
                    {"p0_z", "0"},
                    {"v_d", "10"},
                    {"t_end", "24"},
                    {"case", "reso"},
                    {"reference", "fig2a-ref"}})},
  };
  return list;
}

Settings preset_settings(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p.settings;
  }
  throw ConfigError("unknown preset '" + name + "' (see list-presets)");
}

Settings parse_settings(std::istream& is) {
  Settings out;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    check_key(key);
    if (out.contains(key)) throw ConfigError("config line " + std::to_string(number) + ": repeated key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

Settings load_settings(const std::string& preset_or_path) {
  for (const auto& p : presets()) {
    if (p.name == preset_or_path) return p.settings;
  }
  std::ifstream is(preset_or_path);
  if (!is) throw ConfigError("'" + preset_or_path + "' is neither a preset nor a readable config file");
  return parse_settings(is);
}

void apply_assignment(Settings& settings, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  check_key(key);
  settings[key] = trim(assignment.substr(eq + 1));
}

Scenario build_scenario(const Settings& settings) {
  const Settings s = with_defaults(settings);
  Scenario sc;
  sc.name = s.at("name");
  if (sc.name.empty() || sc.name.find_first_of("/\\ ") != std::string::npos) {
    throw ConfigError("config: name must be non-empty and free of spaces and slashes");
  }
  sc.reference = s.at("reference");

  sc.spec.p0 = Vec2(parse_real(s, "p0_x"), parse_real(s, "p0_z"));
  sc.spec.sigma_p = Vec2(parse_real(s, "sigma_p_x"), parse_real(s, "sigma_p_z"));
  sc.spec.r0 = Vec2(parse_real(s, "r0_x"), parse_real(s, "r0_z"));
  Spinor spinor(Complex(parse_real(s, "spinor_up_re"), parse_real(s, "spinor_up_im")),
                Complex(parse_real(s, "spinor_down_re"), parse_real(s, "spinor_down_im")));
  if (std::abs(spinor.norm() - 1.0) > 1e-6) throw ConfigError("config: the spinor must have unit norm");
  sc.spec.spinor0 = spinor.normalized();

  sc.drive.v_d = parse_real(s, "v_d");
  sc.drive.omega_d = parse_real(s, "omega_d");
  sc.drive.phase = parse_real(s, "phase");
  try {
    validate(sc.spec);
    validate(sc.drive);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }

  const Vec2 center(parse_auto(s, "p_center_x").value_or(sc.spec.p0.x()),
                    parse_auto(s, "p_center_z").value_or(sc.spec.p0.y()));
  const Vec2 halfwidth(parse_auto(s, "p_halfwidth_x").value_or(6.0 * sc.spec.sigma_p.x()),
                       parse_auto(s, "p_halfwidth_z").value_or(6.0 * sc.spec.sigma_p.y()));
  try {
    sc.grid = MomentumGrid(parse_int(s, "n_x"), parse_int(s, "n_z"), center, halfwidth);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }

  try {
    sc.stepper.scheme = parse_step_scheme(s.at("scheme"));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (const auto dt = parse_auto(s, "dt")) {
    sc.stepper.dt = *dt;
  } else {
    sc.stepper.dt = default_stepper(sc.drive, sc.grid).dt;
  }
  validate(sc.stepper, sc.drive, sc.grid);

  sc.t_end = parse_real(s, "t_end");
  if (!(sc.t_end > 0.0)) throw ConfigError("config: t_end must be positive");
  sc.sample_dt = parse_auto(s, "sample_dt").value_or(0.125 * sc.drive.period());
  if (!(sc.sample_dt > 0.0) || sc.sample_dt > sc.t_end / 16) {
    throw ConfigError("config: sample_dt must be positive and give at least 16 samples");
  }
  sc.density_snapshots = parse_int(s, "density_snapshots");
  if (sc.density_snapshots < 0) throw ConfigError("config: density_snapshots must be >= 0");
  try {
    sc.scales = Scales(parse_real(s, "mass_kg"), parse_real(s, "kappa_per_m"));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  sc.kind = resolve_case(s.at("case"), sc.spec, sc.drive);
  if (sc.kind == ScenarioCase::resonance) {
    try {
      resonance_theory(sc.drive, sc.spec);
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    if (truncated_mass(sc.spec, sc.grid) > 1e-6) throw ConfigError("config: the grid truncates the packet");
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

std::optional<Scenario> reference_scenario(const Scenario& scenario, const Settings& overrides) {
  if (scenario.reference.empty()) return std::nullopt;
  Settings ref = preset_settings(scenario.reference);
  for (const auto& [k, v] : overrides) {
    if (inherited_keys().contains(k)) ref[k] = v;
  }
  return build_scenario(ref);
}

void write_settings(std::ostream& os, const Settings& settings) {
  for (const auto& [k, v] : settings) os << k << " = " << v << '\n';
}

Simulation simulate(const Scenario& sc, const SimulateOptions& options) {
  const Propagator prop(sc.grid, sc.drive, sc.stepper);
  SpinorField field = make_gaussian(sc.spec, sc.grid);
  const Real norm0 = norm_squared(field);

  const auto samples = static_cast<int>(std::floor(sc.t_end / sc.sample_dt + 1e-9));
  std::set<int> snapshot_at;
  if (options.snapshots && sc.density_snapshots == 1) snapshot_at.insert(samples);
  if (options.snapshots && sc.density_snapshots > 1) {
    for (int k = 0; k < sc.density_snapshots; ++k) {
      snapshot_at.insert(static_cast<int>(std::lround(Real(k) * samples / (sc.density_snapshots - 1))));
    }
  }

  std::optional<BranchBasis> basis;
  if (options.overlap) {
    if (sc.kind == ScenarioCase::resonance) {
      const ResonanceTheory rt = resonance_theory(sc.drive, sc.spec);
      basis = make_branch_basis(sc.grid, [&](const Vec2& p) { return rt.hamiltonian(p); });
    } else {
      basis = make_branch_basis(sc.grid, bessel_j0(sc.drive.bessel_argument()));
    }
  }

  Simulation sim;
  auto& ts = sim.series;
  for (int k = 0; k <= samples; ++k) {
    const Real t = k * sc.sample_dt;
    if (k > 0) field = prop.advance(field, (k - 1) * sc.sample_dt, t);
    const Vec2 r = position_expectation(field, PositionMethod::momentum_gradient);
    if (options.cross_check) {
      const Vec2 r_sum = position_expectation(field, PositionMethod::position_sum);
      sim.max_method_gap = std::max(sim.max_method_gap, (r - r_sum).cwiseAbs().maxCoeff() / std::max(1.0, r.norm()));
    }
    const Vec3 spin = spin_expectation(field);
    const Real norm = norm_squared(field);
    sim.max_norm_drift = std::max(sim.max_norm_drift, std::abs(norm - norm0));
    Real overlap = 1.0;
    if (basis) {
      const SpinorField frame = sc.kind == ScenarioCase::resonance
                                    ? rotate_frame(field, sc.drive.omega_d, t, FrameDirection::in)
                                    : to_drive_frame(field, sc.drive, t);
      overlap = branch_overlap(frame, *basis).value;
    }
    ts.times.push_back(t);
    ts.x_mean.push_back(r.x());
    ts.z_mean.push_back(r.y());
    ts.sx.push_back(spin.x());
    ts.sy.push_back(spin.y());
    ts.sz.push_back(spin.z());
    ts.norm.push_back(norm);
    ts.overlap.push_back(overlap);
    if (snapshot_at.contains(k)) {
      sim.snapshot_times.push_back(t);
      sim.snapshots.push_back(to_position_density(field));
    }
  }
  return sim;
}

ZbSummary fit_scenario(const Scenario& sc, const TimeSeries& series) {
  FitOptions options;
  options.omega_max = 0.5 * sc.drive.omega_d;
  return fit_zb(series, sc.zb_axis(), options);
}

Real signed_amplitude(const ZbSummary& fit) { return std::cos(fit.phase) > 0.0 ? -fit.amplitude : fit.amplitude; }

Prediction predict(const Scenario& sc) {
  Prediction pr;
  if (sc.kind == ScenarioCase::resonance) {
    const ResonanceTheory rt = resonance_theory(sc.drive, sc.spec);
    pr.omega = rt.zb_freq;
    pr.amplitude = grid_zb_amplitude(sc, [&](const Vec2& p) {
      const Vec2 pt = rt.p_tilde(p);
      return -pt.y() / pt.squaredNorm();
    });
    pr.tau = lifetime_estimate(sc.spec, 1.0, LifetimeRegime::resonance, sc.drive);
    return pr;
  }
  const Real j0 = bessel_j0(sc.drive.bessel_argument());
  const int axis = sc.zb_axis() == Axis::x ? 0 : 1;
  pr.omega = 2.0 * std::hypot(j0 * sc.spec.p0.x(), sc.spec.p0.y());
  pr.amplitude = grid_zb_amplitude(sc, [&](const Vec2& p) { return theta_gradient(p, j0)(axis); });
  pr.tau = lifetime_estimate(sc.spec, j0, LifetimeRegime::static_like);
  if (sc.kind == ScenarioCase::a) {
    const ZbPrediction z = case_a_prediction(sc.drive);
    pr.amp_ratio = z.amp_ratio;
    pr.freq_ratio = z.freq_ratio;
  } else if (std::abs(j0) >= 1e-6) {
    const ZbPrediction z = case_b_prediction(sc.drive);
    pr.amp_ratio = z.amp_ratio;
    pr.freq_ratio = z.freq_ratio;
  }
  return pr;
}

ScenarioReport analyse(const Scenario& sc, const Simulation& sim, const std::optional<ZbSummary>& reference,
                       const std::string& reference_name) {
  ScenarioReport rep;
  rep.fit = fit_scenario(sc, sim.series);
  rep.prediction = predict(sc);
  rep.reference = reference;
  rep.reference_name = reference_name;
  if (reference) {
    rep.amp_ratio = signed_amplitude(rep.fit) / signed_amplitude(*reference);
    rep.freq_ratio = rep.fit.omega / reference->omega;
    rep.tau_ratio = rep.fit.tau / reference->tau;
  }
  const auto& ts = sim.series;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    rep.overlap_min = std::min(rep.overlap_min, ts.overlap[i]);
    if (ts.times[i] <= 20.0 + 1e-9) rep.overlap_min_t20 = std::min(rep.overlap_min_t20, ts.overlap[i]);
  }
  for (const auto& d : sim.snapshots) {
    const int peaks = std::max(count_peaks(d.marginal(Axis::x)), count_peaks(d.marginal(Axis::z)));
    rep.density_peaks.push_back(peaks);
    rep.density_peaks_max = std::max(rep.density_peaks_max, peaks);
  }
  rep.max_norm_drift = sim.max_norm_drift;
  rep.max_method_gap = sim.max_method_gap;
  rep.checks_passed = rep.max_norm_drift < 1e-10 && rep.max_method_gap <= 1e-6;
  return rep;
}

void write_report(std::ostream& os, const Scenario& sc, const ScenarioReport& rep) {
  const auto kv = [&](const std::string& key, Real v) { os << key << " = " << format_real(v) << '\n'; };
  const auto ks = [&](const std::string& key, const std::string& v) { os << key << " = " << v << '\n'; };
  const Real j0 = bessel_j0(sc.drive.bessel_argument());
  ks("name", sc.name);
  ks("case", to_string(sc.kind));
  ks("axis", to_string(sc.zb_axis()));
  kv("p0_x", sc.spec.p0.x());
  kv("p0_z", sc.spec.p0.y());
  kv("v_d", sc.drive.v_d);
  kv("omega_d", sc.drive.omega_d);
  kv("bessel_argument", sc.drive.bessel_argument());
  kv("j0", j0);
  kv("dt", sc.stepper.dt);
  ks("scheme", to_string(sc.stepper.scheme));
  kv("t_end", sc.t_end);
  kv("sample_dt", sc.sample_dt);

  write_summary(os, rep.fit, "measured_");
  kv("measured_signed_amplitude", signed_amplitude(rep.fit));
  os << "fit_evaluations = " << rep.fit.evaluations << '\n';
  kv("predicted_amplitude", rep.prediction.amplitude);
  kv("predicted_omega", rep.prediction.omega);
  kv("predicted_tau", rep.prediction.tau);
  kv("amplitude_over_predicted", rep.fit.amplitude / rep.prediction.amplitude);
  kv("omega_over_predicted", rep.fit.omega / rep.prediction.omega);

  if (rep.reference) {
    ks("reference", rep.reference_name);
    kv("reference_amplitude", rep.reference->amplitude);
    kv("reference_signed_amplitude", signed_amplitude(*rep.reference));
    kv("reference_omega", rep.reference->omega);
    kv("reference_tau", rep.reference->tau);
    kv("amp_ratio", rep.amp_ratio);
    kv("freq_ratio", rep.freq_ratio);
    kv("tau_ratio", rep.tau_ratio);
    if (rep.prediction.amp_ratio) {
      kv("predicted_amp_ratio", *rep.prediction.amp_ratio);
      kv("predicted_freq_ratio", *rep.prediction.freq_ratio);
      kv("amp_ratio_over_predicted", rep.amp_ratio / *rep.prediction.amp_ratio);
      kv("freq_ratio_over_predicted", rep.freq_ratio / *rep.prediction.freq_ratio);
    }
    if (sc.kind == ScenarioCase::resonance) {
      kv("predicted_tau_ratio_min", 10.0);
      kv("freq_over_v_d", rep.fit.omega / sc.drive.v_d);
    }
  }

  kv("overlap_min", rep.overlap_min);
  kv("overlap_min_t20", rep.overlap_min_t20);
  os << "density_peaks_max = " << rep.density_peaks_max << '\n';
  for (std::size_t k = 0; k < rep.density_peaks.size(); ++k) {
    os << "density_peaks_" << k << " = " << rep.density_peaks[k] << '\n';
  }
  kv("norm_drift_max", rep.max_norm_drift);
  kv("method_gap_max", rep.max_method_gap);

  if (sc.scales) {
    const Scales& u = *sc.scales;
    kv("si_mass_kg", u.mass_kg());
    kv("si_kappa_per_m", u.kappa_per_m());
    kv("si_time_unit_s", u.time_unit());
    kv("si_zb_frequency_per_s", to_si(u, {Dimension::frequency, rep.fit.omega}));
    kv("si_zb_amplitude_m", to_si(u, {Dimension::length, rep.fit.amplitude}));
    kv("si_peak_mirror_velocity_m_per_s", to_si(u, {Dimension::velocity, 0.5 * sc.drive.v_d}));
    kv("si_drive_frequency_per_s", to_si(u, {Dimension::frequency, sc.drive.omega_d}));
  }
  ks("checks_passed", rep.checks_passed ? "true" : "false");
}

int run_scenario(const Scenario& sc, const std::optional<Scenario>& reference, const std::filesystem::path& outdir,
                 ScenarioReport* report_out) {
  std::filesystem::create_directories(outdir);
  std::optional<ZbSummary> ref_fit;
  if (reference) {
    const Simulation ref_sim = simulate(*reference, {.cross_check = false, .overlap = false, .snapshots = false});
    ref_fit = fit_scenario(*reference, ref_sim.series);
  }
  const Simulation sim = simulate(sc);
  const ScenarioReport rep = analyse(sc, sim, ref_fit, reference ? reference->name : "");

  OutputSet out;
  out.write(outdir / (sc.name + ".timeseries.csv"), [&](std::ostream& os) { write_csv(os, sim.series); });
  for (std::size_t k = 0; k < sim.snapshots.size(); ++k) {
    out.write(outdir / (sc.name + ".density.t" + std::to_string(k) + ".csv"),
              [&](std::ostream& os) { write_density(os, sim.snapshots[k]); });
  }
  out.write(outdir / (sc.name + ".summary.txt"), [&](std::ostream& os) {
    write_report(os, sc, rep);
    for (std::size_t k = 0; k < sim.snapshot_times.size(); ++k) {
      os << "density_time_" << k << " = " << format_real(sim.snapshot_times[k]) << '\n';
    }
  });
  out.commit();
  if (report_out) *report_out = rep;
  return rep.checks_passed ? 0 : 1;
}

SweepResult run_sweep(const Scenario& base, const std::vector<Real>& v_d, const std::vector<Real>& omega_d,
                      const std::filesystem::path& outdir, int jobs) {
  if (v_d.empty() || omega_d.empty()) throw ConfigError("sweep: v_d and omega_d lists must be non-empty");
  if (jobs < 1) throw ConfigError("sweep: jobs must be >= 1");

  std::vector<Scenario> points;
  for (Real v : v_d) {
    for (Real w : omega_d) {
      Scenario p = base;
      p.drive.v_d = v;
      p.drive.omega_d = w;
      try {
        validate(p.drive);
      } catch (const InvalidInput& e) {
        throw ConfigError(std::string("sweep: ") + e.what());
      }
      p.stepper.dt = default_stepper(p.drive, p.grid).dt;
      validate(p.stepper, p.drive, p.grid);
      p.sample_dt = 0.125 * p.drive.period();
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s-vd%g-wd%g", base.name.c_str(), v, w);
      p.name = buf;
      p.density_snapshots = 0;
      points.push_back(p);
    }
  }

  SweepResult result;
  result.v_d = v_d;
  result.omega_d = omega_d;
  result.kind = base.kind;
  Scenario ref = base;
  ref.drive.v_d = 0.0;
  const Simulation ref_sim = simulate(ref, {.cross_check = false, .overlap = false, .snapshots = false});
  result.reference = fit_scenario(ref, ref_sim.series);
  const Real ref_signed = signed_amplitude(result.reference);

  result.points.resize(points.size());
  std::vector<std::optional<ScenarioReport>> reports(points.size());
  std::vector<std::optional<Simulation>> sims(points.size());
  const auto run_point = [&](std::size_t i) {
    const Scenario& p = points[i];
    SweepPoint& out = result.points[i];
    out.v_d = p.drive.v_d;
    out.omega_d = p.drive.omega_d;
    const Real j0 = bessel_j0(p.drive.bessel_argument());
    out.near_cdt = std::abs(j0) < 0.1;
    if (p.kind == ScenarioCase::a) {
      out.predicted_amp_ratio = j0;
      out.predicted_freq_ratio = 1.0;
    } else if (p.kind == ScenarioCase::b) {
      if (std::abs(j0) < 1e-6) {
        out.status = "cdt_point";
        return;
      }
      out.predicted_amp_ratio = 1.0 / j0;
      out.predicted_freq_ratio = std::abs(j0);
      const Real periods = predict(p).omega * p.t_end / (2.0 * kPi);
      if (periods < 3.0) {
        out.status = "too_few_periods";
        return;
      }
    }
    try {
      Simulation sim = simulate(p, {.cross_check = false, .overlap = false, .snapshots = false});
      out.max_norm_drift = sim.max_norm_drift;
      try {
        ScenarioReport rep = analyse(p, sim, result.reference, ref.name);
        out.status = "ok";
        out.amp_ratio = rep.amp_ratio;
        out.freq_ratio = rep.freq_ratio;
        out.tau = rep.fit.tau;
        reports[i] = std::move(rep);
      } catch (const std::runtime_error&) {
        if (!out.near_cdt) throw;
        // No resolvable oscillation next to a CDT point. The peak deviation
        // would be dominated by micromotion at omega_d +- omega_ZB, so project
        // onto the reference's ZB line instead.
        out.status = "projected";
        out.amp_ratio = projected_amplitude(sim.series, p.zb_axis(), result.reference.omega, result.reference.tau) /
                        std::abs(ref_signed);
      }
      if (!std::isnan(out.predicted_amp_ratio) && out.status == "ok") {
        out.prediction_error = std::abs(out.amp_ratio - out.predicted_amp_ratio) / std::abs(out.predicted_amp_ratio);
      }
      sims[i] = std::move(sim);
    } catch (const std::exception& e) {
      out.status = std::string("failed: ") + e.what();
    }
  };

  if (jobs == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < points.size(); i = next++) run_point(i);
      });
    }
  }

  const auto rows = static_cast<Eigen::Index>(v_d.size());
  const auto cols = static_cast<Eigen::Index>(omega_d.size());
  result.amp_ratio.resize(rows, cols);
  result.freq_ratio.resize(rows, cols);
  result.tau.resize(rows, cols);
  result.prediction_error.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const SweepPoint& p = result.points[static_cast<std::size_t>(r * cols + c)];
      result.amp_ratio(r, c) = p.amp_ratio;
      result.freq_ratio(r, c) = p.freq_ratio;
      result.tau(r, c) = p.tau;
      result.prediction_error(r, c) = p.prediction_error;
      if (p.status.rfind("failed", 0) == 0) ++result.failures;
    }
  }

  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    OutputSet out;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!reports[i]) continue;
      out.write(outdir / (points[i].name + ".summary.txt"),
                [&](std::ostream& os) { write_report(os, points[i], *reports[i]); });
    }
    out.write(outdir / "sweep.csv", [&](std::ostream& os) {
      os << "v_d,omega_d,bessel_argument,j0,status,near_cdt,amp_ratio,freq_ratio,tau,predicted_amp_ratio,"
            "predicted_freq_ratio,prediction_error\n";
      for (const auto& p : result.points) {
        const Real arg = 2.0 * p.v_d / p.omega_d;
        std::string status = p.status;
        std::replace(status.begin(), status.end(), ',', ';');
        os << format_real(p.v_d) << ',' << format_real(p.omega_d) << ',' << format_real(arg) << ','
           << format_real(bessel_j0(arg)) << ',' << status << ',' << (p.near_cdt ? 1 : 0) << ','
           << format_real(p.amp_ratio) << ',' << format_real(p.freq_ratio) << ',' << format_real(p.tau) << ','
           << format_real(p.predicted_amp_ratio) << ',' << format_real(p.predicted_freq_ratio) << ','
           << format_real(p.prediction_error) << '\n';
      }
    });
    out.commit();
  }
  return result;
}

GaugeCheck verify_gauge(const LaserConfig& cfg, int n_points, const std::filesystem::path& outdir,
                        std::ostream& table, std::uint64_t seed) {
  if (n_points < 1) throw ConfigError("verify-gauge: n_points must be >= 1");
  try {
    validate(cfg);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> coord(-5.0, 5.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < n_points; ++i) {
    const Real x = coord(rng);
    const Real z = coord(rng);
    pts.emplace_back(x, z);
  }
  std::vector<std::pair<Real, Real>> spectra(pts.size());
  parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) spectra[i] = field_strength_spectrum(cfg, pts[i]);
  });

  GaugeCheck check;
  std::ostringstream csv;
  csv << "index,x,z,lambda_minus,lambda_plus,deviation\n";
  char buf[160];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto [lo, hi] = spectra[i];
    const Real dev = std::max(std::abs(lo + 2.0), std::abs(hi - 2.0));
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.12g,%.12g,%.3e\n", i, pts[i].x(), pts[i].y(), lo, hi, dev);
    csv << buf;
    if (dev > check.worst_deviation || check.worst_index < 0) {
      check.worst_deviation = dev;
      check.worst_index = static_cast<int>(i);
      check.worst_point = pts[i];
    }
  }
  check.exit_code = check.worst_deviation <= 1e-4 ? 0 : 1;
  table << csv.str();
  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    OutputSet out;
    out.write(outdir / "gauge_spectrum.csv", [&](std::ostream& os) { os << csv.str(); });
    out.commit();
  }
  return check;
}

}  // namespace zitterlab
