#pragma once

// Time evolution under H(p, t) = p^2/2 + p_x sigma_x + (p_z - v_d cos(omega_d t + phase)) sigma_z.
//
// H is diagonal in momentum, so every grid mode evolves on its own under a
// time-dependent 2x2 Hamiltonian. Steps use the exponential midpoint rule
// with the exact SU(2) exponential; the scalar kinetic phase is applied in
// closed form.

#include "zitterlab/core.hpp"

#include <array>
#include <functional>
#include <vector>

namespace zitterlab {

struct ModeHamiltonian {
  Real kinetic = 0.0;
  Real h_x = 0.0;
  Real h_z_static = 0.0;
  DriveParams drive;

  static ModeHamiltonian at(const Vec2& p, const DriveParams& drive);

  Real h_z(Real t) const { return h_z_static - drive.value(t); }
  Mat2c matrix(Real t) const;
};

/// exp(-i (h_z sigma_z + h_x sigma_x) dt) = cos(W dt) I - i sin(W dt)/W (h_z sigma_z + h_x sigma_x).
Mat2c spin_orbit_exponential(Real h_x, Real h_z, Real dt);

/// exp(-i H t) for a constant Hermitian 2x2 H.
Mat2c hermitian_exponential(const Mat2c& h, Real t);

/// One exponential-midpoint step of a single mode, including the kinetic phase.
Spinor step_mode(const Spinor& s, const ModeHamiltonian& mh, Real t, Real dt);

enum class StepScheme {
  /// Direct stepping on the lattice k * |dt|.
  midpoint_exponential,
  /// Same lattice, with the products of steps over each quarter drive period
  /// cached per mode and reused across periods.
  quarter_period_subdivided,
};

const char* to_string(StepScheme scheme);
StepScheme parse_step_scheme(const std::string& name);

struct StepperConfig {
  Real dt = 0.0;
  StepScheme scheme = StepScheme::quarter_period_subdivided;
};

/// Largest |E| over the grid for the driven Hamiltonian, kinetic term included.
Real max_mode_energy(const MomentumGrid& grid, const DriveParams& drive);

/// dt = 2 pi / (128 omega_d), halved until dt * max|E| <= 0.5.
StepperConfig default_stepper(const DriveParams& drive, const MomentumGrid& grid);

/// Throws ConfigError when |dt| omega_d > 2 pi / 64, |dt| max|E| > 0.5, or
/// (quarter-period scheme) the quarter period is not a whole number of steps.
void validate(const StepperConfig& cfg, const DriveParams& drive, const MomentumGrid& grid);

/// Evolution operator bound to one grid, drive and stepper. Reuse it across
/// calls to amortize the quarter-period cache.
class Propagator {
 public:
  Propagator(MomentumGrid grid, DriveParams drive, StepperConfig cfg);

  const StepperConfig& config() const { return cfg_; }
  const DriveParams& drive() const { return drive_; }

  /// Advances from t0 to t1. The direction of time must match the sign of dt.
  SpinorField advance(const SpinorField& field, Real t0, Real t1) const;

 private:
  struct Op {
    bool cached = false;
    int quarter = 0;
    bool adjoint = false;
    Real dt = 0.0;
    Real drive_value = 0.0;
  };

  std::vector<Op> plan(Real t0, Real t1) const;
  void build_cache();

  MomentumGrid grid_;
  DriveParams drive_;
  StepperConfig cfg_;
  Real step_ = 0.0;
  int steps_per_quarter_ = 0;
  std::vector<std::array<Mat2c, 4>> quarters_;
};

SpinorField evolve(const SpinorField& field, const DriveParams& drive, Real t0, Real t1, const StepperConfig& cfg);

/// Exact evolution under a time-independent per-mode Hamiltonian h(p).
SpinorField evolve_constant(const SpinorField& field, Real t, const std::function<Mat2c(const Vec2&)>& h);

/// Exact evolution under the averaged Hamiltonian with p_x sigma_x scaled by
/// j0_factor, via the eigen-decomposition on psi_+ and psi_-.
SpinorField evolve_effective(const SpinorField& field, Real j0_factor, Real t);

/// Exact undriven evolution (evolve_effective with j0_factor = 1).
SpinorField evolve_static_closed_form(const SpinorField& field, Real t);

enum class FrameDirection { in, out };

/// Rotating frame of the resonance regime: the (1, 1)/sqrt(2) component picks
/// up exp(+i omega_d t / 2), the (1, -1)/sqrt(2) component exp(-i omega_d t / 2).
SpinorField rotate_frame(const SpinorField& field, Real omega_d, Real t, FrameDirection direction);

/// Interaction picture of the drive, in which the period-averaged Hamiltonian
/// acts: multiplies the state by exp(-i F(t) sigma_z), F' = v_d cos(omega_d t + phase).
SpinorField to_drive_frame(const SpinorField& field, const DriveParams& drive, Real t);

}  // namespace zitterlab
