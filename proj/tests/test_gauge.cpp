#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "zitterlab/gauge.hpp"

#include <random>

using namespace zitterlab;

namespace {

const Vec2 kPoints[] = {Vec2(0.0, 0.0), Vec2(0.7, -1.3), Vec2(-2.4, 3.1), Vec2(4.2, 0.5)};
const GaugeFixing kGauges[] = {GaugeFixing::plane_wave, GaugeFixing::transport_x_then_z,
                               GaugeFixing::transport_z_then_x};

Real max_entry_error(const Mat2c& a, const Mat2c& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Smooth position-dependent SU(2) rotation.
Mat2c twist_at(const Vec2& r) {
  const Real a = 0.7 * std::sin(0.9 * r.x()) + 0.3 * r.y();
  const Real b = 0.4 * std::cos(1.3 * r.y() - 0.2 * r.x());
  const Real c = 0.5 * r.x() * r.y() / (1.0 + r.squaredNorm());
  const Real angle = std::sqrt(a * a + b * b + c * c);
  const Mat2c n = (a * pauli::x() + b * pauli::y() + c * pauli::z()) / angle;
  const Mat2c g = std::cos(angle) * pauli::identity() - Complex(0.0, std::sin(angle)) * n;
  return g * std::polar(1.0, 0.3 * r.x() - 0.1 * r.y());
}

}  // namespace

TEST_CASE("dark states are annihilated by the bright row and orthonormal") {
  const LaserConfig cfg;
  for (const Vec2& r : kPoints) {
    for (GaugeFixing gauge : kGauges) {
      const DarkBasis d = dark_states(cfg, r, gauge);
      const Vec3c row = bright_row(cfg, r);
      CHECK(std::abs(row.dot(d.col(0).conjugate())) < 1e-12);
      CHECK(std::abs(row.dot(d.col(1).conjugate())) < 1e-12);
      CHECK(max_entry_error(d.adjoint() * d, Mat2c::Identity()) < 1e-12);
    }
  }
}

TEST_CASE("dark projector is a rank-2 orthogonal projector, periodic in x") {
  const LaserConfig cfg;
  for (const Vec2& r : kPoints) {
    const Mat3c p = dark_projector(cfg, r);
    CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p.adjoint() - p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(p.trace() - Complex(2.0)) < 1e-12);
    const Mat3c shifted = dark_projector(cfg, r + Vec2(2.0 * kPi / cfg.k_l, 0.0));
    CHECK((shifted - p).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("transported basis is smooth") {
  const LaserConfig cfg;
  const Real h = 1e-4 / cfg.k_l;
  for (GaugeFixing gauge : kGauges) {
    for (const Vec2& r : kPoints) {
      const DarkBasis a = dark_states(cfg, r, gauge);
      for (const Vec2& step : {Vec2(h, 0.0), Vec2(0.0, h), Vec2(Vec2(h, -h) / std::sqrt(2.0))}) {
        const DarkBasis b = dark_states(cfg, r + step, gauge);
        CHECK(max_entry_error(a.adjoint() * b, Mat2c::Identity()) < 1e-3);
      }
    }
  }
}

TEST_CASE("gauge potential is Hermitian, non-Abelian and second order in h") {
  const LaserConfig cfg;
  const Vec2 r(0.7, -1.3);
  const Real h = 1e-3 / cfg.k_l;
  const GaugeSample s = gauge_potential(cfg, r, h);
  CHECK(max_entry_error(s.a_x, s.a_x.adjoint()) < 1e-10);
  CHECK(max_entry_error(s.a_z, s.a_z.adjoint()) < 1e-10);
  CHECK((s.a_x * s.a_z - s.a_z * s.a_x).norm() > 0.1);
  // Position independent in the plane-wave gauge.
  const GaugeSample far = gauge_potential(cfg, Vec2(-3.3, 2.2), h);
  CHECK(max_entry_error(far.a_x, s.a_x) < 1e-9);
  CHECK(max_entry_error(far.a_z, s.a_z) < 1e-9);

  for (GaugeFixing gauge : kGauges) {
    // Richardson check against an h/4 reference.
    const GaugeSample full = gauge_potential(cfg, r, h, gauge);
    const GaugeSample half = gauge_potential(cfg, r, h / 2, gauge);
    const GaugeSample ref = gauge_potential(cfg, r, h / 4, gauge);
    const Real e1 = max_entry_error(full.a_x, ref.a_x) + max_entry_error(full.a_z, ref.a_z);
    const Real e2 = max_entry_error(half.a_x, ref.a_x) + max_entry_error(half.a_z, ref.a_z);
    // Errors against h/4: (1 - 1/16) C h^2 and (1/4 - 1/16) C h^2.
    const Real ratio = (e1 / e2) * (3.0 / 15.0) * 4.0;
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("parallel transport zeroes the potential along the last leg") {
  const LaserConfig cfg;
  const GaugeSample s = gauge_potential(cfg, Vec2(0.7, -1.3), 1e-3 / cfg.k_l, GaugeFixing::transport_x_then_z);
  CHECK(s.a_z.norm() < 1e-3);
  CHECK(s.a_x.norm() > 0.1);
}

TEST_CASE("gauge potential rejects large or non-positive steps") {
  const LaserConfig cfg;
  CHECK_THROWS_AS(gauge_potential(cfg, Vec2::Zero(), 2e-3 / cfg.k_l), InvalidInput);
  CHECK_THROWS_AS(gauge_potential(cfg, Vec2::Zero(), 0.0), InvalidInput);
  LaserConfig bad;
  bad.xi = 2.0;
  CHECK_THROWS_AS(gauge_potential(bad, Vec2::Zero(), 1e-4), InvalidInput);
}

TEST_CASE("field-strength spectrum is +-2 and uniform") {
  const LaserConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<Real> u(-5.0, 5.0);
  Real lo = 1e9, hi = -1e9;
  for (int k = 0; k < 10; ++k) {
    const auto [a, b] = field_strength_spectrum(cfg, Vec2(u(rng), u(rng)));
    CHECK(std::abs(a + 2.0) < 1e-4);
    CHECK(std::abs(b - 2.0) < 1e-4);
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  CHECK(hi - lo < 1e-8);
}

TEST_CASE("spectrum is invariant under gauge twists and path choice") {
  const LaserConfig cfg;
  for (const Vec2& r : kPoints) {
    const auto plain = field_strength_spectrum(cfg, r);
    const auto twisted = field_strength_spectrum(cfg, r, GaugeFixing::plane_wave, twist_at);
    CHECK(std::abs(plain.first - twisted.first) < 1e-6);
    CHECK(std::abs(plain.second - twisted.second) < 1e-6);
    for (GaugeFixing path : {GaugeFixing::transport_x_then_z, GaugeFixing::transport_z_then_x}) {
      const auto other = field_strength_spectrum(cfg, r, path);
      CHECK(std::abs(plain.first - other.first) < 1e-6);
      CHECK(std::abs(plain.second - other.second) < 1e-6);
    }
    const auto both = field_strength_spectrum(cfg, r, GaugeFixing::transport_z_then_x, twist_at);
    CHECK(std::abs(plain.second - both.second) < 1e-6);
  }
}

TEST_CASE("spectrum moves continuously away from the default mixing angle") {
  const Vec2 r(0.3, 0.4);
  LaserConfig cfg;
  const Real base = field_strength_spectrum(cfg, r).second;
  Real previous = base;
  for (Real d : {0.02, 0.05, 0.1, 0.2}) {
    cfg.xi = LaserConfig{}.xi + d;
    const Real v = field_strength_spectrum(cfg, r).second;
    CHECK(std::abs(v - previous) < 0.5);
    previous = v;
  }
  CHECK(std::abs(previous - 2.0) > 1e-2);
}
