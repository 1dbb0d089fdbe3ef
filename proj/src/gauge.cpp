#include "zitterlab/gauge.hpp"

#include <sstream>

namespace zitterlab {

namespace {

constexpr int kTransportSteps = 256;

/// Some orthonormal basis of the null space; phases are arbitrary.
DarkBasis raw_null_space(const Vec3c& row) {
  Eigen::Matrix<Complex, 1, 3> bright = row.transpose();
  Eigen::JacobiSVD<Eigen::Matrix<Complex, 1, 3>> svd(bright, Eigen::ComputeFullV);
  return svd.matrixV().rightCols<2>();
}

/// Rotates `next` within its span to sit as close as possible to `previous`.
DarkBasis align(const DarkBasis& next, const DarkBasis& previous) {
  const Mat2c overlap = next.adjoint() * previous;
  Eigen::JacobiSVD<Mat2c> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return next * (svd.matrixU() * svd.matrixV().adjoint());
}

DarkBasis transport(const LaserConfig& cfg, DarkBasis basis, const Vec2& from, const Vec2& to) {
  for (int k = 1; k <= kTransportSteps; ++k) {
    const Vec2 p = from + (to - from) * (Real(k) / kTransportSteps);
    basis = align(raw_null_space(bright_row(cfg, p)), basis);
  }
  return basis;
}

Mat2c hermitize(const Mat2c& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

void validate(const LaserConfig& cfg) {
  if (!(cfg.omega0 > 0.0)) throw InvalidInput("LaserConfig: omega0 must be positive");
  if (!(cfg.xi > 0.0 && cfg.xi < kPi / 2)) throw InvalidInput("LaserConfig: xi must lie in (0, pi/2)");
  if (!(cfg.k_l > 0.0) || !std::isfinite(cfg.k_l)) throw InvalidInput("LaserConfig: k_l must be positive");
}

Vec3c bright_row(const LaserConfig& cfg, const Vec2& point) {
  const Real side = cfg.omega0 * std::sin(cfg.xi) / std::numbers::sqrt2;
  return Vec3c(side * std::polar(1.0, -cfg.k_l * point.x()), side * std::polar(1.0, cfg.k_l * point.x()),
               cfg.omega0 * std::cos(cfg.xi) * std::polar(1.0, cfg.k_l * point.y()));
}

DarkBasis dark_states(const LaserConfig& cfg, const Vec2& point, GaugeFixing gauge, const GaugeTwist& twist) {
  validate(cfg);
  const Vec2 origin = Vec2::Zero();
  const Vec3c row0 = bright_row(cfg, origin);
  DarkBasis basis = raw_null_space(row0);
  if (gauge == GaugeFixing::plane_wave) {
    // Omega_j(r) = Omega_j(0) e^{i phi_j(r)}, so diag(e^{-i phi_j}) maps the
    // dark space at the origin onto the one at r.
    const Vec3c phases = bright_row(cfg, point).cwiseQuotient(row0);
    basis = phases.conjugate().asDiagonal() * basis;
  } else {
    const Vec2 corner = gauge == GaugeFixing::transport_x_then_z ? Vec2(point.x(), 0.0) : Vec2(0.0, point.y());
    basis = transport(cfg, basis, origin, corner);
    basis = transport(cfg, basis, corner, point);
  }
  if (twist) basis = basis * twist(point);
  return basis;
}

Mat3c dark_projector(const LaserConfig& cfg, const Vec2& point) {
  validate(cfg);
  const DarkBasis d = raw_null_space(bright_row(cfg, point));
  return d * d.adjoint();
}

GaugeSample gauge_potential(const LaserConfig& cfg, const Vec2& point, Real h, GaugeFixing gauge,
                            const GaugeTwist& twist) {
  validate(cfg);
  if (!(h > 0.0) || h > 1e-3 / cfg.k_l * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "gauge_potential: step h = " << h << " must lie in (0, 1e-3/k_l]";
    throw InvalidInput(os.str());
  }
  GaugeSample s;
  s.point = point;
  s.dark_basis = dark_states(cfg, point, gauge, twist);
  const auto derivative = [&](const Vec2& dir) -> DarkBasis {
    return (dark_states(cfg, point + h * dir, gauge, twist) - dark_states(cfg, point - h * dir, gauge, twist)) /
           (2.0 * h);
  };
  const Complex i(0.0, 1.0);
  s.a_x = hermitize(i * s.dark_basis.adjoint() * derivative(Vec2::UnitX())) / cfg.kappa();
  s.a_z = hermitize(i * s.dark_basis.adjoint() * derivative(Vec2::UnitY())) / cfg.kappa();
  return s;
}

std::pair<Real, Real> field_strength_spectrum(const LaserConfig& cfg, const Vec2& point, GaugeFixing gauge,
                                              const GaugeTwist& twist) {
  validate(cfg);
  const Real h = 1e-4 / cfg.k_l;
  const Real big = 1e-2 / cfg.k_l;
  // Fourth-order central stencil for the outer derivatives of A.
  const auto d_of = [&](const Vec2& dir, bool want_z) -> Mat2c {
    Mat2c acc = Mat2c::Zero();
    for (auto [offset, weight] : {std::pair{2, -1.0}, {1, 8.0}, {-1, -8.0}, {-2, 1.0}}) {
      const GaugeSample g = gauge_potential(cfg, point + Real(offset) * big * dir, h, gauge, twist);
      acc += weight * (want_z ? g.a_z : g.a_x);
    }
    return acc / (12.0 * big * cfg.kappa());
  };
  const GaugeSample centre = gauge_potential(cfg, point, h, gauge, twist);
  const Complex i(0.0, 1.0);
  const Mat2c f = d_of(Vec2::UnitX(), true) - d_of(Vec2::UnitY(), false) -
                  i * (centre.a_x * centre.a_z - centre.a_z * centre.a_x);
  const Eigen::SelfAdjointEigenSolver<Mat2c> es(hermitize(f), Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0), es.eigenvalues()(1)};
}

}  // namespace zitterlab
