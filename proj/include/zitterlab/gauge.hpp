#pragma once

// Non-Abelian gauge potential of the tripod scheme, obtained numerically from
// the position-dependent dark states of three Rabi fields.
//
// Positions and steps share the length unit of 1/k_l. Potentials are reported
// in hbar kappa and field strengths in hbar kappa^2, kappa = (sqrt2 - 1) k_l;
// with the default k_l both coincide with the dynamics units.

#include "zitterlab/types.hpp"

#include <functional>
#include <numbers>
#include <utility>

namespace zitterlab {

using Vec3c = Eigen::Matrix<Complex, 3, 1>;
using Mat3c = Eigen::Matrix<Complex, 3, 3>;
using DarkBasis = Eigen::Matrix<Complex, 3, 2>;

struct LaserConfig {
  Real omega0 = 1.0;
  /// cos(xi) = sqrt2 - 1
  Real xi = 1.1437177404024204;
  /// Chosen so that kappa = 1.
  Real k_l = 1.0 / (std::numbers::sqrt2 - 1.0);

  Real kappa() const { return (std::numbers::sqrt2 - 1.0) * k_l; }
};

/// Throws InvalidInput unless omega0 > 0, 0 < xi < pi/2 and k_l > 0.
void validate(const LaserConfig& cfg);

/// (Omega_1, Omega_2, Omega_3) at (x, z); a dark state c satisfies sum Omega_j c_j = 0.
Vec3c bright_row(const LaserConfig& cfg, const Vec2& point);

/// How the phases of the dark basis are fixed from point to point.
enum class GaugeFixing {
  /// Basis at the origin carried along by the plane-wave phases of the three
  /// Rabi fields; gives a position-independent potential.
  plane_wave,
  /// Parallel transport from the origin along x, then along z.
  transport_x_then_z,
  /// Parallel transport from the origin along z, then along x.
  transport_z_then_x,
};

/// Local 2x2 unitary applied to the dark basis from the right.
using GaugeTwist = std::function<Mat2c(const Vec2&)>;

/// Orthonormal dark basis at `point` in the chosen gauge, with an optional
/// twist applied on top.
DarkBasis dark_states(const LaserConfig& cfg, const Vec2& point, GaugeFixing gauge = GaugeFixing::plane_wave,
                      const GaugeTwist& twist = {});

/// Projector onto the dark subspace; gauge independent.
Mat3c dark_projector(const LaserConfig& cfg, const Vec2& point);

struct GaugeSample {
  Vec2 point;
  DarkBasis dark_basis;
  Mat2c a_x;
  Mat2c a_z;
};

/// A_j = i <D| d_j D> by central differences with step h, Hermitized.
/// Throws InvalidInput unless 0 < h <= 1e-3 / k_l.
GaugeSample gauge_potential(const LaserConfig& cfg, const Vec2& point, Real h,
                            GaugeFixing gauge = GaugeFixing::plane_wave, const GaugeTwist& twist = {});

/// Ascending eigenvalues of F_xz = d_x A_z - d_z A_x - i [A_x, A_z].
std::pair<Real, Real> field_strength_spectrum(const LaserConfig& cfg, const Vec2& point,
                                              GaugeFixing gauge = GaugeFixing::plane_wave,
                                              const GaugeTwist& twist = {});

}  // namespace zitterlab
