#pragma once

// Units, grids and state containers shared by every other module.
//
// Internally everything is dimensionless with hbar = m = kappa = 1: time in
// m/(hbar kappa^2), length in 1/kappa, momentum in hbar kappa. SI values only
// appear through Scales at the I/O boundary.

#include "zitterlab/types.hpp"

#include <cmath>
#include <numbers>
#include <string_view>

namespace zitterlab {

inline constexpr Real kHbarSI = 1.054571817e-34;

class Scales {
 public:
  Scales(Real mass_kg, Real kappa_per_m, Real hbar_Js = kHbarSI);

  Real mass_kg() const { return mass_kg_; }
  Real kappa_per_m() const { return kappa_per_m_; }
  Real hbar_Js() const { return hbar_Js_; }

  Real time_unit() const { return mass_kg_ / (hbar_Js_ * kappa_per_m_ * kappa_per_m_); }
  Real length_unit() const { return 1.0 / kappa_per_m_; }
  Real momentum_unit() const { return hbar_Js_ * kappa_per_m_; }
  Real velocity_unit() const { return hbar_Js_ * kappa_per_m_ / mass_kg_; }
  Real energy_unit() const { return hbar_Js_ * hbar_Js_ * kappa_per_m_ * kappa_per_m_ / mass_kg_; }
  Real frequency_unit() const { return hbar_Js_ * kappa_per_m_ * kappa_per_m_ / mass_kg_; }

 private:
  Real mass_kg_;
  Real kappa_per_m_;
  Real hbar_Js_;
};

enum class Dimension { time, length, momentum, velocity, frequency, energy };

Dimension parse_dimension(std::string_view tag);
const char* to_string(Dimension dim);

struct Quantity {
  Dimension dimension;
  Real value;
};

Real unit_of(const Scales& scales, Dimension dim);
Real to_si(const Scales& scales, Quantity q);
Real to_si(const Scales& scales, std::string_view tag, Real value);
Real from_si(const Scales& scales, Dimension dim, Real value);

/// Uniform rectangular grid in (p_x, p_z). Node k along x sits at
/// center_x - halfwidth_x + k * dp_x with dp_x = 2 halfwidth_x / n_x.
class MomentumGrid {
 public:
  MomentumGrid(int n_x, int n_z, Vec2 center, Vec2 halfwidth);

  int n_x() const { return n_x_; }
  int n_z() const { return n_z_; }
  Eigen::Index size() const { return Eigen::Index(n_x_) * n_z_; }
  const Vec2& center() const { return center_; }
  const Vec2& halfwidth() const { return halfwidth_; }

  Vec2 spacing() const { return {2.0 * halfwidth_.x() / n_x_, 2.0 * halfwidth_.y() / n_z_}; }
  Real cell_area() const { return spacing().prod(); }

  Real px(int ix) const { return center_.x() - halfwidth_.x() + ix * spacing().x(); }
  Real pz(int iz) const { return center_.y() - halfwidth_.y() + iz * spacing().y(); }
  Vec2 momentum(int ix, int iz) const { return {px(ix), pz(iz)}; }

  /// Spacing of the FFT-conjugate position grid, 2 pi / (n dp) per axis.
  Vec2 position_spacing() const;

  bool operator==(const MomentumGrid& other) const = default;

 private:
  int n_x_;
  int n_z_;
  Vec2 center_;
  Vec2 halfwidth_;
};

struct PacketSpec {
  Vec2 p0{0.0, 5.0};
  Vec2 sigma_p{default_sigma_p(), default_sigma_p()};
  Vec2 r0{0.0, 0.0};
  Spinor spinor0 = default_spinor();

  /// Momentum width of a minimum-uncertainty packet with position variance 10.
  static Real default_sigma_p() { return 1.0 / (2.0 * std::sqrt(10.0)); }
  static Spinor default_spinor() { return Spinor(Complex(std::numbers::sqrt2 / 2, 0.0), Complex(0.0, std::numbers::sqrt2 / 2)); }
};

void validate(const PacketSpec& spec);

struct DriveParams {
  Real v_d = 0.0;
  Real omega_d = 50.0;
  Real phase = 0.0;

  Real value(Real t) const { return v_d * std::cos(omega_d * t + phase); }
  Real period() const { return 2.0 * kPi / omega_d; }
  /// Argument of the Bessel renormalization, 2 v_d / omega_d.
  Real bessel_argument() const { return 2.0 * v_d / omega_d; }
};

void validate(const DriveParams& drive);

/// Two-component state over a momentum grid, components in the dark-state
/// basis. `origin` is the center of the FFT-conjugate position window; it
/// follows the free drift of the packet so that observables stay unwrapped.
struct SpinorField {
  MomentumGrid grid;
  ModeArray up;
  ModeArray down;
  Vec2 origin{0.0, 0.0};

  SpinorField(MomentumGrid g, ModeArray u, ModeArray d, Vec2 o = Vec2::Zero());
};

Real norm_squared(const SpinorField& field);

/// Mean momentum of |psi|^2 over the grid.
Vec2 mean_momentum(const SpinorField& field);

/// Gaussian mass (for the packet's momentum density) that falls outside the grid.
Real truncated_mass(const PacketSpec& spec, const MomentumGrid& grid);

/// 256x256 modes, half-width `sigmas` * sigma_p around p0.
MomentumGrid default_grid(const PacketSpec& spec, int n = 256, Real sigmas = 6.0);

SpinorField make_gaussian(const PacketSpec& spec, const MomentumGrid& grid);

}  // namespace zitterlab
