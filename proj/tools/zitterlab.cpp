#include "zitterlab/numeric.hpp"
#include "zitterlab/scenario.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <iostream>

namespace zl = zitterlab;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kRuntime = 3 };

// "a,b,c" or "start:stop:step" (inclusive of stop within half a step).
std::vector<double> parse_list(const std::string& text) {
  const auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw zl::ConfigError("cannot parse '" + std::string(s) + "' in list");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::string_view rest = text;
    while (true) {
      const auto c = rest.find(':');
      parts.push_back(number(rest.substr(0, c)));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw zl::ConfigError("range must be start:stop:step with step > 0 and stop >= start");
    }
    const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 0.5));
    for (long k = 0; k <= n; ++k) out.push_back(parts[0] + double(k) * parts[2]);
    return out;
  }
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto c = rest.find(',');
    out.push_back(number(rest.substr(0, c)));
    if (c == std::string_view::npos) break;
    rest.remove_prefix(c + 1);
  }
  if (out.empty()) throw zl::ConfigError("empty list");
  return out;
}

zl::Settings settings_for(const std::string& target, const std::vector<std::string>& sets, zl::Settings& overrides) {
  zl::Settings s = zl::load_settings(target);
  // A config file counts as overrides too, so its packet keys reach the reference.
  bool is_preset = false;
  for (const auto& p : zl::presets()) is_preset = is_preset || p.name == target;
  if (!is_preset) overrides = s;
  for (const auto& a : sets) {
    zl::apply_assignment(s, a);
    zl::apply_assignment(overrides, a);
  }
  return s;
}

int run_command(const std::string& target, const std::vector<std::string>& sets, const std::string& outdir) {
  zl::Settings overrides;
  const zl::Settings s = settings_for(target, sets, overrides);
  const zl::Scenario sc = zl::build_scenario(s);
  const auto ref = zl::reference_scenario(sc, overrides);
  zl::ScenarioReport rep;
  const int code = zl::run_scenario(sc, ref, outdir, &rep);
  std::cout << sc.name << ": omega = " << rep.fit.omega << ", amplitude = " << rep.fit.amplitude
            << ", tau = " << rep.fit.tau;
  if (rep.reference) std::cout << ", amp_ratio = " << rep.amp_ratio << ", freq_ratio = " << rep.freq_ratio;
  std::cout << '\n';
  if (code != 0) {
    std::cerr << "error: numerical checks failed (norm drift " << rep.max_norm_drift << ", method gap "
              << rep.max_method_gap << ")\n";
  }
  return code;
}

int sweep_command(const std::string& target, const std::vector<std::string>& sets, const std::string& v_list,
                  const std::string& w_list, const std::string& outdir, int jobs) {
  zl::Settings overrides;
  const zl::Settings s = settings_for(target, sets, overrides);
  const zl::Scenario base = zl::build_scenario(s);
  const auto v = parse_list(v_list);
  const auto w = parse_list(w_list);
  const zl::SweepResult r = zl::run_sweep(base, v, w, outdir, jobs);
  for (const auto& p : r.points) {
    std::cout << "v_d = " << p.v_d << ", omega_d = " << p.omega_d << ": " << p.status << ", amp_ratio = " << p.amp_ratio
              << ", predicted = " << p.predicted_amp_ratio << (p.near_cdt ? " (near CDT)" : "") << '\n';
  }
  if (r.failures > 0) {
    std::cerr << "error: " << r.failures << " sweep point(s) failed\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zitterlab: driven Zitterbewegung simulator"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: hardware or ZITTERLAB_THREADS)");

  std::string target;
  std::vector<std::string> sets;
  std::string outdir;

  auto* run = app.add_subcommand("run", "simulate one preset or config file");
  run->add_option("target", target, "preset name or config file")->required();
  run->add_option("--set", sets, "override key=value")->take_all();
  run->add_option("-o,--out", outdir, "output directory")->required();

  std::string v_list;
  std::string w_list = "50";
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "scan v_d and omega_d around a base scenario");
  sweep->add_option("target", target, "preset name or config file")->required();
  sweep->add_option("--v-d", v_list, "v_d values: a,b,c or start:stop:step")->required();
  sweep->add_option("--omega-d", w_list, "omega_d values: a,b,c or start:stop:step");
  sweep->add_option("--set", sets, "override key=value")->take_all();
  sweep->add_option("--jobs", jobs, "scenarios run concurrently");
  sweep->add_option("-o,--out", outdir, "output directory")->required();

  zl::LaserConfig laser;
  int n_points = 10;
  std::uint64_t seed = 12345;
  auto* gauge = app.add_subcommand("verify-gauge", "check the tripod field-strength spectrum");
  gauge->add_option("--n-points", n_points, "number of sample points");
  gauge->add_option("--xi", laser.xi, "mixing angle xi");
  gauge->add_option("--k-l", laser.k_l, "laser wavevector");
  gauge->add_option("--omega0", laser.omega0, "Rabi scale");
  gauge->add_option("--seed", seed, "sampling seed");
  gauge->add_option("-o,--out", outdir, "output directory");

  auto* list = app.add_subcommand("list-presets", "print the built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (threads < 0) throw zl::ConfigError("--threads must be >= 0");
    if (threads > 0) zl::set_worker_count(static_cast<std::size_t>(threads));
    if (*run) return run_command(target, sets, outdir);
    if (*sweep) return sweep_command(target, sets, v_list, w_list, outdir, jobs);
    if (*gauge) {
      const zl::GaugeCheck c = zl::verify_gauge(laser, n_points, outdir, std::cout, seed);
      if (c.exit_code != 0) {
        std::cerr << "error: worst spectrum deviation " << c.worst_deviation << " at point " << c.worst_index << " ("
                  << c.worst_point.x() << ", " << c.worst_point.y() << ") exceeds 1e-4\n";
      }
      return c.exit_code;
    }
    if (*list) {
      for (const auto& p : zl::presets()) std::cout << p.name << "  " << p.description << '\n';
      return kOk;
    }
  } catch (const zl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const zl::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
