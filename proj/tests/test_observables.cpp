#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "zitterlab/dynamics.hpp"
#include "zitterlab/efftheory.hpp"
#include "zitterlab/numeric.hpp"
#include "zitterlab/observables.hpp"

#include <random>
#include <sstream>

using namespace zitterlab;

namespace {

PacketSpec spec_at(const Vec2& p0, const Vec2& r0 = Vec2::Zero()) {
  PacketSpec s;
  s.p0 = p0;
  s.r0 = r0;
  return s;
}

SpinorField packet(const PacketSpec& s, int n = 64) { return make_gaussian(s, default_grid(s, n)); }

TimeSeries synthetic(const std::function<Real(Real)>& f, int n, Real t_end, Real t0 = 0.0) {
  TimeSeries ts;
  for (int k = 0; k < n; ++k) {
    const Real t = t0 + t_end * k / (n - 1);
    ts.times.push_back(t);
    ts.x_mean.push_back(f(t));
    ts.z_mean.push_back(0.5 * t);
    ts.sx.push_back(0.0);
    ts.sy.push_back(0.0);
    ts.sz.push_back(0.0);
    ts.norm.push_back(1.0);
    ts.overlap.push_back(1.0);
  }
  return ts;
}

}  // namespace

TEST_CASE("position of a fresh packet, both routes") {
  const SpinorField f = packet(spec_at(Vec2(0.0, 5.0), Vec2(3.0, -2.0)));
  for (auto m : {PositionMethod::momentum_gradient, PositionMethod::position_sum}) {
    const Vec2 r = position_expectation(f, m);
    CHECK(std::abs(r.x() - 3.0) < 1e-8);
    CHECK(std::abs(r.y() + 2.0) < 1e-8);
  }
}

TEST_CASE("free scalar motion is ballistic") {
  const PacketSpec s = spec_at(Vec2(1.5, 5.0), Vec2(-1.0, 2.0));
  const SpinorField f = packet(s);
  for (Real t : {1.0, 7.5, 20.0}) {
    const SpinorField g = evolve_constant(f, t, [](const Vec2& p) { return Mat2c(0.5 * p.squaredNorm() * pauli::identity()); });
    for (auto m : {PositionMethod::momentum_gradient, PositionMethod::position_sum}) {
      const Vec2 r = position_expectation(g, m);
      CHECK((r - (s.r0 + s.p0 * t)).norm() < 1e-8);
    }
  }
}

TEST_CASE("undriven packet follows the closed-form trajectory") {
  const PacketSpec s = spec_at(Vec2(0.0, 5.0));
  const SpinorField f = packet(s);
  std::vector<Real> times;
  for (int k = 0; k <= 100; ++k) times.push_back(0.1 * k);
  const auto oracle = zb_closed_form(s, f.grid, 1.0, times);
  Real worst = 0.0, gap = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const SpinorField g = evolve_static_closed_form(f, times[k]);
    const Vec2 r = position_expectation(g, PositionMethod::momentum_gradient);
    const Vec2 r_sum = position_expectation(g, PositionMethod::position_sum);
    worst = std::max(worst, (r - oracle[k]).cwiseAbs().maxCoeff());
    gap = std::max(gap, (r - r_sum).cwiseAbs().maxCoeff() / std::max(1.0, r.norm()));
  }
  CHECK(worst < 0.02 * 0.1);
  CHECK(gap < 1e-6);
}

TEST_CASE("boundary contamination is detected") {
  const PacketSpec s = spec_at(Vec2(0.0, 5.0));
  // Grid that clips the packet on one side, within the construction tolerance.
  const Real sp = s.sigma_p.x();
  const MomentumGrid edge(64, 64, s.p0 + Vec2(3.2 * sp, 0.0), Vec2::Constant(8.0 * sp));
  std::vector<std::string> warnings;
  const auto previous = set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  const SpinorField f = make_gaussian(s, edge);
  set_warning_handler(previous);
  CHECK_THROWS_AS(position_expectation(f, PositionMethod::momentum_gradient), BoundaryError);

  // A packet that runs out of the position window.
  const MomentumGrid small = default_grid(spec_at(Vec2(0.0, 5.0)), 64);
  const Real half_window = kPi / small.spacing().x();
  SpinorField g = make_gaussian(spec_at(Vec2(0.0, 5.0), Vec2(half_window - 3.0, 0.0)), small);
  g.origin = Vec2::Zero();
  CHECK_THROWS_AS(position_expectation(g, PositionMethod::position_sum), BoundaryError);
}

TEST_CASE("spin expectation") {
  PacketSpec s = spec_at(Vec2(0.0, 5.0));
  const Vec3 a = spin_expectation(packet(s));
  CHECK((a - Vec3(0.0, 1.0, 0.0)).norm() < 1e-14);
  s.spinor0 = Spinor(1.0, 0.0);
  CHECK((spin_expectation(packet(s)) - Vec3(0.0, 0.0, 1.0)).norm() < 1e-14);
  const SpinorField g = evolve_static_closed_form(packet(spec_at(Vec2(1.0, 2.0))), 3.3);
  CHECK(spin_expectation(g).norm() <= 1.0 + 1e-12);
}

TEST_CASE("position density: Parseval, shape and splitting") {
  const PacketSpec s = spec_at(Vec2(0.0, 5.0), Vec2(2.0, 1.0));
  const SpinorField f = packet(s);
  const PositionDensity rho = to_position_density(f);
  CHECK(std::abs(rho.total() - norm_squared(f)) < 1e-10);
  CHECK((rho.mean() - s.r0).norm() < 1e-8);
  CHECK(rho.variance().x() == doctest::Approx(10.0).epsilon(0.01));
  CHECK(count_peaks(rho.marginal(Axis::x)) == 1);
  CHECK(count_peaks(rho.marginal(Axis::z)) == 1);

  const PositionDensity later = to_position_density(evolve_static_closed_form(f, 10.0));
  CHECK(std::abs(later.total() - 1.0) < 1e-8);
  CHECK(count_peaks(later.marginal(Axis::z)) == 2);
  CHECK(count_peaks(later.marginal(Axis::x)) == 1);
}

TEST_CASE("resonant packet neither splits nor loses branch overlap") {
  const PacketSpec s = spec_at(Vec2(25.0, 0.0));
  const SpinorField f = packet(s);
  DriveParams d;
  d.v_d = 10.0;
  const ResonanceTheory rt = resonance_theory(d, s);
  const BranchBasis basis = make_branch_basis(f.grid, [&](const Vec2& p) { return rt.hamiltonian(p); });
  const Propagator prop(f.grid, d, default_stepper(d, f.grid));
  SpinorField g = f;
  Real t = 0.0;
  Real lowest = 1.0;
  for (int k = 1; k <= 20; ++k) {
    g = prop.advance(g, t, Real(k));
    t = k;
    lowest = std::min(lowest, branch_overlap(rotate_frame(g, d.omega_d, t, FrameDirection::in), basis).value);
  }
  CHECK(lowest >= 0.9);
  const PositionDensity rho = to_position_density(g);
  CHECK(count_peaks(rho.marginal(Axis::x)) == 1);
  CHECK(count_peaks(rho.marginal(Axis::z)) == 1);
}

TEST_CASE("branch overlap in the static case") {
  const SpinorField f = packet(spec_at(Vec2(0.0, 5.0)));
  CHECK(std::abs(branch_overlap(f, 1.0).value - 1.0) < 1e-6);
  const BranchBasis basis = make_branch_basis(f.grid, 1.0);
  Real previous = 1.0;
  for (int k = 1; k <= 40; ++k) {
    const Real v = branch_overlap(evolve_static_closed_form(f, 0.25 * k), basis).value;
    CHECK(v <= previous + 1e-3);
    previous = std::min(previous, v);
  }
  CHECK(previous < 0.1);

  // Global phase leaves it untouched.
  SpinorField g = evolve_static_closed_form(f, 3.0);
  const Real before = branch_overlap(g, basis).value;
  g.up *= std::polar(1.0, 0.83);
  g.down *= std::polar(1.0, 0.83);
  CHECK(branch_overlap(g, basis).value == doctest::Approx(before).epsilon(1e-13));

  // Pure branch state.
  SpinorField pure = f;
  const RealArray envelope = (f.up.abs2() + f.down.abs2()).sqrt();
  pure.up = envelope * basis.plus_up;
  pure.down = envelope * basis.plus_down;
  const BranchOverlap one = branch_overlap(pure, basis);
  CHECK(one.degenerate);
  CHECK(one.value == 1.0);
}

TEST_CASE("count_peaks") {
  CHECK(count_peaks({}) == 0);
  CHECK(count_peaks({0, 1, 2, 3, 2, 1, 0}) == 1);
  CHECK(count_peaks({0, 3, 1, 0, 1, 3, 0}) == 2);
  // Shallow dip counts once; tiny bump ignored.
  CHECK(count_peaks({0, 3, 2.9, 3, 0}) == 1);
  CHECK(count_peaks({0, 3, 0, 0.05, 0}) == 1);
}

TEST_CASE("time series serialization") {
  const TimeSeries ts = synthetic([](Real t) { return 0.25 * t; }, 3, 1.0);
  std::ostringstream os;
  write_csv(os, ts);
  CHECK(os.str() == "t,x_mean,z_mean,sx,sy,sz,norm,overlap\n0,0,0,0,0,0,1,1\n0.5,0.125,0.25,0,0,0,1,1\n1,0.25,0.5,0,0,0,1,1\n");
  CHECK_NOTHROW(ts.check());
  TimeSeries bad = ts;
  bad.norm[1] = 1.0 + 1e-6;
  CHECK_THROWS_AS(bad.check(), InvalidInput);
  bad = ts;
  bad.sx.pop_back();
  CHECK_THROWS_AS(bad.check(), InvalidInput);

  ZbSummary z;
  z.amplitude = 0.1;
  z.omega = 10.0;
  std::ostringstream ss;
  write_summary(ss, z, "ref_");
  const std::string text = ss.str();
  for (const char* key : {"ref_amplitude = 0.1", "ref_omega = 10", "ref_tau = inf", "ref_axis = x", "ref_fit_residual"}) {
    CHECK(text.find(key) != std::string::npos);
  }
}

TEST_CASE("fit_zb recovers its own model") {
  const auto model = [](Real t) { return 5.0 + 0.3 * t + 0.1 * std::exp(-t / 8.0) * std::cos(10.0 * t + 0.2); };
  const ZbSummary z = fit_zb(synthetic(model, 2000, 12.0), Axis::x);
  CHECK(z.offset == doctest::Approx(5.0).epsilon(0.01));
  CHECK(z.drift_velocity.x() == doctest::Approx(0.3).epsilon(0.01));
  CHECK(z.amplitude == doctest::Approx(0.1).epsilon(0.01));
  CHECK(z.omega == doctest::Approx(10.0).epsilon(0.01));
  CHECK(z.tau == doctest::Approx(8.0).epsilon(0.01));
  CHECK(z.phase == doctest::Approx(0.2).epsilon(0.01));
  CHECK(z.drift_velocity.y() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(z.fit_residual < 1e-6);
  CHECK(z.axis == Axis::x);
}

TEST_CASE("fit_zb is robust to noise and reports sign conventions") {
  std::mt19937_64 rng(3);
  std::normal_distribution<Real> noise(0.0, 0.002);
  const auto model = [&](Real t) { return -1.0 + 0.1 * std::exp(-t / 5.0) * std::cos(7.0 * t + 2.9) + noise(rng); };
  const ZbSummary z = fit_zb(synthetic(model, 800, 12.0), Axis::x);
  CHECK(z.amplitude == doctest::Approx(0.1).epsilon(0.03));
  CHECK(z.omega == doctest::Approx(7.0).epsilon(0.01));
  CHECK(z.amplitude >= 0.0);
  CHECK(z.omega >= 0.0);
  CHECK(z.fit_residual >= 0.0);
  CHECK(z.fit_residual <= 1.0);
}

TEST_CASE("fit_zb is equivariant under time shifts") {
  const Real a = 0.1, w = 10.0, tau = 8.0, phi = 0.2;
  const auto model = [&](Real t) { return 0.4 + a * std::exp(-t / tau) * std::cos(w * t + phi); };
  const ZbSummary base = fit_zb(synthetic(model, 1500, 12.0), Axis::x);
  const Real shift = 1.7;
  // Same signal observed from t = shift, re-zeroed.
  const auto later = [&](Real t) { return model(t + shift); };
  const ZbSummary moved = fit_zb(synthetic(later, 1500, 12.0), Axis::x);
  CHECK(moved.omega == doctest::Approx(base.omega).epsilon(1e-3));
  CHECK(moved.tau == doctest::Approx(base.tau).epsilon(1e-2));
  CHECK(moved.amplitude == doctest::Approx(base.amplitude * std::exp(-shift / tau)).epsilon(1e-2));
  const Real dphi = std::remainder(moved.phase - base.phase - base.omega * shift, 2.0 * kPi);
  CHECK(std::abs(dphi) < 1e-2);
}

TEST_CASE("fit_zb failure modes") {
  CHECK_THROWS_AS(fit_zb(synthetic([](Real t) { return 2.0 - 0.7 * t; }, 500, 12.0), Axis::x), NoOscillationError);
  // Less than three periods.
  CHECK_THROWS_AS(fit_zb(synthetic([](Real t) { return 0.1 * std::cos(1.0 * t); }, 500, 12.0), Axis::x), FitError);
  CHECK_THROWS_AS(fit_zb(synthetic([](Real t) { return std::cos(10 * t); }, 10, 12.0), Axis::x), InvalidInput);
  TimeSeries unsorted = synthetic([](Real t) { return std::cos(10 * t); }, 100, 12.0);
  std::swap(unsorted.times[3], unsorted.times[4]);
  CHECK_THROWS_AS(fit_zb(unsorted, Axis::x), InvalidInput);
}

TEST_CASE("undriven simulation fit agrees with the closed form") {
  const PacketSpec s = spec_at(Vec2(0.0, 5.0));
  const SpinorField f = packet(s);
  TimeSeries sim, oracle;
  std::vector<Real> times;
  for (int k = 0; k <= 480; ++k) times.push_back(0.025 * k);
  const auto closed = zb_closed_form(s, f.grid, 1.0, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Vec2 r = position_expectation(evolve_static_closed_form(f, times[k]), PositionMethod::momentum_gradient);
    for (auto* ts : {&sim, &oracle}) {
      const Vec2 v = ts == &sim ? r : closed[k];
      ts->times.push_back(times[k]);
      ts->x_mean.push_back(v.x());
      ts->z_mean.push_back(v.y());
      ts->sx.push_back(0.0);
      ts->sy.push_back(0.0);
      ts->sz.push_back(0.0);
      ts->norm.push_back(1.0);
      ts->overlap.push_back(1.0);
    }
  }
  const ZbSummary a = fit_zb(sim, Axis::x);
  const ZbSummary b = fit_zb(oracle, Axis::x);
  CHECK(a.omega == doctest::Approx(10.0).epsilon(0.03));
  CHECK(a.amplitude == doctest::Approx(b.amplitude).epsilon(0.05));
  // The exponential envelope overstates the t = 0 size of a Gaussian decay.
  CHECK(a.amplitude > 0.1);
  CHECK(a.amplitude < 0.14);
}
