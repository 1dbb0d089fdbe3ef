#pragma once

// Closed-form effective theory of the driven spin-orbit Hamiltonian:
// Bessel renormalization from period averaging, the averaged eigensystem, the
// analytic ZB trajectory, the two drive-geometry predictions, CDT points and
// the rotating-frame resonance regime.

#include "zitterlab/core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace zitterlab {

namespace detail {

/// Power series sum_k (-1)^k (x/2)^{2k} / (k!)^2, accumulated in long double.
template <typename T>
T bessel_j0_series(T x) {
  const long double q = static_cast<long double>(x) * static_cast<long double>(x) / 4.0L;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<long double>(k) * static_cast<long double>(k));
    sum += term;
    if (std::abs(term) < 1e-22L * std::abs(sum) && static_cast<long double>(k) * k > q) break;
  }
  return static_cast<T>(sum);
}

/// Hankel asymptotic expansion sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)],
/// truncated at the smallest term.
template <typename T>
T bessel_j0_asymptotic(T x) {
  x = std::abs(x);
  const T inv8x = T(1) / (T(8) * x);
  // a_k = prod_{j=1..k} (-(2j-1)^2) / (k! 8^k x^k); alternate into P and Q.
  T p = T(1);
  T q = T(0);
  T term = T(1);
  T last = std::numeric_limits<T>::max();
  for (int k = 1; k < 200; ++k) {
    const T odd = T(2 * k - 1);
    term *= -odd * odd * inv8x / T(k);
    if (std::abs(term) >= last) break;
    last = std::abs(term);
    // term = a_k / x^k; P = sum (-1)^m a_{2m} x^{-2m}, Q = sum (-1)^m a_{2m+1} x^{-2m-1}.
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      case 0: p += term; break;
    }
  }
  const T chi = x - T(kPi) / T(4);
  return std::sqrt(T(2) / (T(kPi) * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Ordinary Bessel function of order zero. Power series for |x| <= 12,
/// asymptotic expansion beyond; absolute error below 1e-12 for |x| < 1e3.
template <typename T>
T bessel_j0(T x) {
  if (std::abs(x) <= T(12)) return detail::bessel_j0_series(x);
  return detail::bessel_j0_asymptotic(x);
}

/// Period average of exp(iF) H_S exp(-iF) with F(t) = int_0^t A(t') dt' and
/// A(t) = -v_d cos(omega_d t + phase) sigma_z, by the trapezoid rule on
/// n_quad nodes.
Mat2c average_hamiltonian(const DriveParams& drive, const Vec2& p, int n_quad = 128);

/// p^2/2 + p_z sigma_z + j0 p_x sigma_x.
Mat2c effective_hamiltonian(const Vec2& p, Real j0_factor);

struct EffEigensystem {
  Vec2 p_tilde;
  Real theta = 0.0;
  Real beta = 0.0;
  Real e_plus = 0.0;
  Real e_minus = 0.0;
  Spinor psi_plus;
  Spinor psi_minus;
  bool degenerate = false;

  /// ZB angular frequency e_plus - e_minus = 2 |p_tilde|.
  Real omega() const { return e_plus - e_minus; }
};

EffEigensystem eff_eigensystem(const Vec2& p, Real j0_factor);

/// Analytic gradient of theta(p_tilde) with respect to p for p_tilde = (j0 p_x, p_z).
Vec2 theta_gradient(const Vec2& p, Real j0_factor);

/// Mean position of the default-spinor Gaussian packet under the averaged
/// Hamiltonian, evaluated as a sum over grid modes.
std::vector<Vec2> zb_closed_form(const PacketSpec& spec, const MomentumGrid& grid, Real j0_factor,
                                 const std::vector<Real>& times);

struct ZbPrediction {
  Real amp_ratio = 1.0;
  Real freq_ratio = 1.0;
  Axis axis = Axis::x;
};

/// Packet moving along z: ZB along x, amplitude scaled by J0, frequency unchanged.
ZbPrediction case_a_prediction(const DriveParams& drive);

/// Packet moving along x: ZB along z, amplitude scaled by 1/J0, frequency by J0.
/// Throws CdtPointError when |J0| < 1e-6.
ZbPrediction case_b_prediction(const DriveParams& drive);

/// First n positive zeros of J0 by sign-change bracketing and bisection.
std::vector<Real> bessel_j0_zeros(int n);

/// Drive amplitudes v_d = omega_d j_{0,k} / 2 of the first n CDT points.
std::vector<Real> cdt_points(Real omega_d, int n);

/// Rotating-frame effective theory for p_x^0 ~ omega_d / 2. The rotating
/// frame multiplies the sigma_x eigencomponents by exp(+-i omega_d t / 2).
struct ResonanceTheory {
  Real omega_d = 0.0;
  Real v_d = 0.0;
  Real p_x_res = 0.0;
  Real zb_freq = 0.0;
  Axis axis = Axis::x;
  Real detuning = 0.0;

  /// p^2/2 + (p_x - omega_d/2) sigma_x - (v_d/2) sigma_z.
  Mat2c hamiltonian(const Vec2& p) const;
  /// Exact eigenvalues p^2/2 +- sqrt((v_d/2)^2 + (p_x - omega_d/2)^2).
  Real e_plus(const Vec2& p) const;
  Real e_minus(const Vec2& p) const;
  /// Peaked-packet approximation p^2/2 +- v_d/2.
  Real e_plus_approx(const Vec2& p) const;
  Real e_minus_approx(const Vec2& p) const;
  Vec2 group_velocity_plus(const Vec2& p) const;
  Vec2 group_velocity_minus(const Vec2& p) const;
  /// p_tilde = (p_x - omega_d/2, -v_d/2) as it enters the ZB trajectory.
  Vec2 p_tilde(const Vec2& p) const;
};

ResonanceTheory resonance_theory(const DriveParams& drive, const PacketSpec& spec);

enum class LifetimeRegime { static_like, resonance };

/// Dephasing time pi / (2 delta_omega) of the ZB term, delta_omega the rms
/// spread of 2 |p_tilde| over the packet. For the resonance regime the static
/// estimate is scaled by the ratio of static to residual branch group-velocity
/// difference, floored at ten times the static value.
Real lifetime_estimate(const PacketSpec& spec, Real j0_factor, LifetimeRegime regime,
                       const std::optional<DriveParams>& drive = std::nullopt);

}  // namespace zitterlab
