#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "zitterlab/dynamics.hpp"
#include "zitterlab/efftheory.hpp"
#include "zitterlab/numeric.hpp"
#include "zitterlab/observables.hpp"

using namespace zitterlab;

namespace {

Real max_diff(const SpinorField& a, const SpinorField& b) {
  return std::max((a.up - b.up).abs().maxCoeff(), (a.down - b.down).abs().maxCoeff());
}

// Amplitudes are densities in p; this compares them at unit normalization.
Real scaled_diff(const SpinorField& a, const SpinorField& b) {
  return max_diff(a, b) * std::sqrt(a.grid.cell_area());
}

SpinorField packet(const Vec2& p0, int n = 64) {
  PacketSpec spec;
  spec.p0 = p0;
  return make_gaussian(spec, default_grid(spec, n));
}

}  // namespace

TEST_CASE("step_mode: zero Hamiltonian leaves the spinor alone") {
  const ModeHamiltonian mh = ModeHamiltonian::at(Vec2::Zero(), DriveParams{});
  const Spinor s(Complex(0.6, 0.1), Complex(0.0, -0.79));
  for (Real dt : {1e-3, 0.1, 2.0}) CHECK((step_mode(s, mh, 0.3, dt) - s).norm() < 1e-15);
}

TEST_CASE("step_mode: Rabi rotation about x") {
  const ModeHamiltonian mh = ModeHamiltonian::at(Vec2(5.0, 0.0), DriveParams{});
  Spinor s(1.0, 0.0);
  const int n = 100;
  const Real t_end = kPi / 10.0;
  for (int k = 0; k < n; ++k) s = step_mode(s, mh, k * t_end / n, t_end / n);
  const Complex kin = std::polar(1.0, -12.5 * t_end);
  CHECK(std::abs(s(0) - kin * std::cos(5.0 * t_end)) < 1e-12);
  CHECK(std::abs(s(1) - kin * Complex(0.0, -std::sin(5.0 * t_end))) < 1e-12);
}

TEST_CASE("step_mode preserves the norm") {
  DriveParams d;
  d.v_d = 38.0;
  const Spinor s = Spinor(Complex(0.3, 0.4), Complex(-0.5, 0.2)).normalized();
  for (const Vec2& p : {Vec2(0.0, 0.0), Vec2(3.0, -7.0), Vec2(25.0, 1.0)}) {
    const ModeHamiltonian mh = ModeHamiltonian::at(p, d);
    for (Real dt : {1e-4, 1e-2, 0.3}) CHECK(std::abs(step_mode(s, mh, 0.7, dt).norm() - s.norm()) < 1e-15);
  }
}

TEST_CASE("spin_orbit_exponential handles the degenerate limit") {
  const Mat2c u = spin_orbit_exponential(0.0, 0.0, 1.0);
  CHECK((u - Mat2c::Identity()).norm() < 1e-15);
  const Mat2c v = spin_orbit_exponential(1e-20, 0.0, 1.0);
  CHECK((v - Mat2c::Identity()).norm() < 1e-15);
  const Mat2c h = 0.3 * pauli::x() - 1.1 * pauli::z();
  CHECK((spin_orbit_exponential(0.3, -1.1, 0.8) - hermitian_exponential(h, 0.8)).norm() < 1e-14);
}

TEST_CASE("stepper validation") {
  const SpinorField f = packet(Vec2(0.0, 5.0));
  DriveParams d;
  CHECK_NOTHROW(validate(default_stepper(d, f.grid), d, f.grid));
  CHECK_THROWS_AS(validate(StepperConfig{d.period() / 32.0, StepScheme::midpoint_exponential}, d, f.grid), ConfigError);
  CHECK_THROWS_AS(validate(StepperConfig{0.0, StepScheme::midpoint_exponential}, d, f.grid), ConfigError);
  CHECK_THROWS_AS(validate(StepperConfig{d.period() / 130.0, StepScheme::quarter_period_subdivided}, d, f.grid),
                  ConfigError);
  CHECK_NOTHROW(validate(StepperConfig{d.period() / 100.0, StepScheme::midpoint_exponential}, d, f.grid));
  CHECK(parse_step_scheme(to_string(StepScheme::midpoint_exponential)) == StepScheme::midpoint_exponential);
  CHECK_THROWS_AS(parse_step_scheme("rk4"), ConfigError);

  // Energetic grid: default dt is tightened.
  const SpinorField fast = packet(Vec2(0.0, 40.0));
  const StepperConfig cfg = default_stepper(d, fast.grid);
  CHECK(cfg.dt < d.period() / 128.0);
  CHECK(cfg.dt * max_mode_energy(fast.grid, d) <= 0.5);
  CHECK_THROWS_AS(evolve(f, d, 1.0, 0.5, default_stepper(d, f.grid)), ConfigError);
}

TEST_CASE("undriven evolution matches the closed form") {
  const SpinorField f = packet(Vec2(0.0, 5.0));
  DriveParams d;
  const StepperConfig cfg = default_stepper(d, f.grid);
  for (Real t : {10.0, 20.0}) {
    const SpinorField a = evolve(f, d, 0.0, t, cfg);
    const SpinorField b = evolve_static_closed_form(f, t);
    CHECK(scaled_diff(a, b) < 1e-6);
    CHECK(std::abs(norm_squared(a) - 1.0) < 1e-10);
    CHECK((a.origin - b.origin).norm() < 1e-12);
  }
  CHECK(max_diff(evolve_static_closed_form(f, 0.0), f) < 1e-15);
}

TEST_CASE("both schemes agree and compose") {
  const SpinorField f = packet(Vec2(0.0, 5.0));
  DriveParams d;
  d.v_d = 38.0;
  const StepperConfig cached = default_stepper(d, f.grid);
  const StepperConfig direct{cached.dt, StepScheme::midpoint_exponential};
  const SpinorField a = evolve(f, d, 0.0, 1.3, cached);
  const SpinorField b = evolve(f, d, 0.0, 1.3, direct);
  CHECK(scaled_diff(a, b) < 1e-12);

  const Propagator prop(f.grid, d, cached);
  // Split on the step lattice; off-lattice splits change the step sequence.
  const Real split = 45 * cached.dt;
  const SpinorField mid = prop.advance(f, 0.0, split);
  const SpinorField two = prop.advance(mid, split, 1.3);
  CHECK(scaled_diff(two, a) < 1e-12);
  CHECK((two.origin - a.origin).norm() < 1e-12);
}

TEST_CASE("time reversal returns the initial field") {
  const SpinorField f = packet(Vec2(0.0, 5.0));
  DriveParams d;
  d.v_d = 38.0;
  d.phase = 0.4;
  StepperConfig fwd = default_stepper(d, f.grid);
  StepperConfig back = fwd;
  back.dt = -fwd.dt;
  const SpinorField out = evolve(f, d, 0.0, 3.7, fwd);
  const SpinorField again = evolve(out, d, 3.7, 0.0, back);
  CHECK(scaled_diff(again, f) < 1e-10);
  CHECK(again.origin.norm() < 1e-12);
}

TEST_CASE("dt halving converges at second order") {
  const SpinorField f = packet(Vec2(0.0, 5.0), 32);
  DriveParams d;
  d.v_d = 38.0;
  const Real dt = d.period() / 256.0;
  std::vector<SpinorField> runs;
  for (Real h : {dt, dt / 2, dt / 4}) runs.push_back(evolve(f, d, 0.0, 2.0, {h, StepScheme::midpoint_exponential}));
  const Real ratio = max_diff(runs[0], runs[1]) / max_diff(runs[1], runs[2]);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
  CHECK(scaled_diff(runs[1], runs[2]) < 1e-6);
}

TEST_CASE("evolution does not depend on the worker count") {
  const SpinorField f = packet(Vec2(1.0, 5.0));
  DriveParams d;
  d.v_d = 20.0;
  const std::size_t before = worker_count();
  set_worker_count(1);
  const SpinorField a = evolve(f, d, 0.0, 0.77, default_stepper(d, f.grid));
  set_worker_count(3);
  const SpinorField b = evolve(f, d, 0.0, 0.77, default_stepper(d, f.grid));
  set_worker_count(before);
  CHECK((a.up == b.up).all());
  CHECK((a.down == b.down).all());
}

TEST_CASE("rotating frame") {
  const MomentumGrid g(16, 16, Vec2::Zero(), Vec2::Ones());
  const ModeArray one = ModeArray::Constant(16, 16, Complex(1.0));
  const ModeArray zero = ModeArray::Zero(16, 16);
  const SpinorField s(g, one, zero);
  const SpinorField r = rotate_frame(s, 2.0, kPi / 2.0, FrameDirection::in);
  CHECK(std::abs(r.up(3, 4)) < 1e-15);
  CHECK(std::abs(r.down(3, 4) - Complex(0.0, 1.0)) < 1e-15);
  CHECK(max_diff(rotate_frame(s, 2.0, 0.0, FrameDirection::in), s) < 1e-15);

  const SpinorField f = packet(Vec2(25.0, 0.0), 32);
  const SpinorField round = rotate_frame(rotate_frame(f, 50.0, 0.37, FrameDirection::in), 50.0, 0.37, FrameDirection::out);
  CHECK(max_diff(round, f) < 1e-14 * f.up.abs().maxCoeff());
  CHECK(norm_squared(rotate_frame(f, 50.0, 0.37, FrameDirection::in)) == doctest::Approx(norm_squared(f)).epsilon(1e-14));
}

TEST_CASE("effective evolution") {
  const SpinorField f = packet(Vec2(2.0, 5.0));
  CHECK(max_diff(evolve_effective(f, 1.0, 3.0), evolve_static_closed_form(f, 3.0)) == 0.0);

  // Spin-helix point: sigma_z is conserved mode by mode.
  const SpinorField h = evolve_effective(f, 0.0, 3.0);
  CHECK(spin_expectation(h).z() == doctest::Approx(spin_expectation(f).z()).epsilon(1e-12));
  const RealArray before = f.up.abs2() - f.down.abs2();
  const RealArray after = h.up.abs2() - h.down.abs2();
  CHECK((before - after).abs().maxCoeff() < 1e-12 * f.up.abs2().maxCoeff());
}

TEST_CASE("driven evolution follows the averaged Hamiltonian") {
  const SpinorField f = packet(Vec2(0.0, 5.0));
  DriveParams d;
  d.v_d = 38.0;
  const Real j0 = bessel_j0(d.bessel_argument());
  const Propagator prop(f.grid, d, default_stepper(d, f.grid));
  const auto series_of = [](std::vector<Real> t, std::vector<Real> x) {
    TimeSeries s;
    const std::size_t n = t.size();
    s.times = std::move(t);
    s.x_mean = std::move(x);
    s.z_mean.assign(n, 0.0);
    s.sx.assign(n, 0.0);
    s.sy.assign(n, 0.0);
    s.sz.assign(n, 0.0);
    s.norm.assign(n, 1.0);
    s.overlap.assign(n, 1.0);
    return s;
  };
  std::vector<Real> times{0.0};
  std::vector<Real> x_full{position_expectation(f, PositionMethod::momentum_gradient).x()};
  std::vector<Real> x_eff = x_full;
  SpinorField full = f;
  const Real step = d.period() / 8.0;
  for (int k = 1; k * step <= 10.0 + 1e-12; ++k) {
    full = prop.advance(full, times.back(), k * step);
    times.push_back(k * step);
    x_full.push_back(position_expectation(full, PositionMethod::momentum_gradient).x());
    x_eff.push_back(position_expectation(evolve_effective(f, j0, k * step), PositionMethod::momentum_gradient).x());
  }
  // Pointwise the first-order kick term (~ 2 J1 / omega_d) shows up; the
  // fitted ZB component is what the averaging predicts.
  FitOptions opt;
  opt.omega_max = 0.5 * d.omega_d;
  const ZbSummary a = fit_zb(series_of(times, x_full), Axis::x, opt);
  const ZbSummary b = fit_zb(series_of(times, x_eff), Axis::x, opt);
  CHECK(a.omega == doctest::Approx(b.omega).epsilon(0.03));
  CHECK(a.amplitude == doctest::Approx(b.amplitude).epsilon(0.05));
}

TEST_CASE("rotating-frame Hamiltonian reproduces the resonant dynamics") {
  PacketSpec spec;
  spec.p0 = Vec2(25.0, 0.0);
  const SpinorField f = make_gaussian(spec, default_grid(spec, 64));
  DriveParams d;
  d.v_d = 10.0;
  const ResonanceTheory rt = resonance_theory(d, spec);
  const Propagator prop(f.grid, d, default_stepper(d, f.grid));
  SpinorField full = f;
  Real t = 0.0;
  Real worst = 0.0;
  Real swing = 0.0;
  const Real x_start = position_expectation(f, PositionMethod::momentum_gradient).x();
  for (int k = 1; k <= 40; ++k) {
    const Real next = k * d.period() / 2.0;
    full = prop.advance(full, t, next);
    t = next;
    const SpinorField eff = evolve_constant(f, t, [&](const Vec2& p) { return rt.hamiltonian(p); });
    const Real x_full = position_expectation(full, PositionMethod::momentum_gradient).x();
    const Real x_eff = position_expectation(eff, PositionMethod::momentum_gradient).x();
    worst = std::max(worst, std::abs(x_full - x_eff));
    swing = std::max(swing, std::abs(x_eff - x_start - spec.p0.x() * t));
  }
  // The ZB amplitude here is ~ 1/v_d.
  CHECK(swing > 0.05);
  CHECK(worst < 0.1 * swing);
}
