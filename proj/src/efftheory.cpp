#include "zitterlab/efftheory.hpp"

#include "zitterlab/numeric.hpp"

#include <sstream>

namespace zitterlab {

Mat2c average_hamiltonian(const DriveParams& drive, const Vec2& p, int n_quad) {
  validate(drive);
  if (n_quad < 64) throw InvalidInput("average_hamiltonian: n_quad must be >= 64");
  const Mat2c h_static = effective_hamiltonian(p, 1.0);
  const Real lambda = drive.v_d / drive.omega_d;
  Mat2c sum = Mat2c::Zero();
  for (int k = 0; k < n_quad; ++k) {
    const Real u = 2.0 * kPi * k / n_quad;
    // F = f sigma_z with f = -(v_d/omega_d)(sin(u + phase) - sin(phase)).
    const Real f = -lambda * (std::sin(u + drive.phase) - std::sin(drive.phase));
    const Eigen::DiagonalMatrix<Complex, 2> rot(std::polar(1.0, f), std::polar(1.0, -f));
    sum += rot * h_static * rot.inverse();
  }
  return sum / Real(n_quad);
}

Mat2c effective_hamiltonian(const Vec2& p, Real j0_factor) {
  return 0.5 * p.squaredNorm() * pauli::identity() + p.y() * pauli::z() + j0_factor * p.x() * pauli::x();
}

EffEigensystem eff_eigensystem(const Vec2& p, Real j0_factor) {
  EffEigensystem es;
  es.p_tilde = Vec2(j0_factor * p.x(), p.y());
  const Real mag = es.p_tilde.norm();
  const Real kinetic = 0.5 * p.squaredNorm();
  es.degenerate = mag == 0.0;
  es.theta = es.degenerate ? 0.0 : std::atan2(es.p_tilde.y(), es.p_tilde.x());
  es.beta = kPi / 4 - es.theta / 2;
  es.e_plus = kinetic + mag;
  es.e_minus = kinetic - mag;
  const Real c = std::cos(es.beta);
  const Real s = std::sin(es.beta);
  es.psi_plus = Spinor(c, s);
  es.psi_minus = Spinor(s, -c);
  return es;
}

Vec2 theta_gradient(const Vec2& p, Real j0_factor) {
  const Real px_t = j0_factor * p.x();
  const Real mag2 = px_t * px_t + p.y() * p.y();
  // theta = atan2(p_z, j0 p_x)
  return Vec2(-j0_factor * p.y() / mag2, px_t / mag2);
}

std::vector<Vec2> zb_closed_form(const PacketSpec& spec, const MomentumGrid& grid, Real j0_factor,
                                 const std::vector<Real>& times) {
  validate(spec);
  if (std::abs(std::abs(PacketSpec::default_spinor().dot(spec.spinor0)) - 1.0) > 1e-12) {
    throw InvalidInput("zb_closed_form: the trajectory formula holds for the (1, i)/sqrt(2) spinor only");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) {
      throw InvalidInput("zb_closed_form: times must be sorted and non-negative");
    }
  }

  const SpinorField packet = make_gaussian(spec, grid);
  const RealArray density = (packet.up.abs2() + packet.down.abs2()) * grid.cell_area();
  const Vec2 drift = mean_momentum(packet);

  RealArray weight_x(grid.n_x(), grid.n_z());
  RealArray weight_z(grid.n_x(), grid.n_z());
  RealArray omega(grid.n_x(), grid.n_z());
  Real excluded = 0.0;
  for (int iz = 0; iz < grid.n_z(); ++iz) {
    for (int ix = 0; ix < grid.n_x(); ++ix) {
      const Vec2 p = grid.momentum(ix, iz);
      const Real mag = std::hypot(j0_factor * p.x(), p.y());
      if (mag < 1e-8) {
        excluded += density(ix, iz);
        weight_x(ix, iz) = weight_z(ix, iz) = omega(ix, iz) = 0.0;
        continue;
      }
      const Vec2 grad = theta_gradient(p, j0_factor);
      weight_x(ix, iz) = 0.5 * density(ix, iz) * grad.x();
      weight_z(ix, iz) = 0.5 * density(ix, iz) * grad.y();
      omega(ix, iz) = 2.0 * mag;
    }
  }
  if (excluded > 0.0) {
    std::ostringstream os;
    os << "zb_closed_form: excluded modes with |p_tilde| < 1e-8 carrying mass " << excluded;
    warn(os.str());
  }

  std::vector<Vec2> out;
  out.reserve(times.size());
  for (Real t : times) {
    const RealArray envelope = 1.0 - (omega * t).cos();
    const Vec2 zb(pairwise_sum(RealArray(weight_x * envelope)), pairwise_sum(RealArray(weight_z * envelope)));
    out.push_back(spec.r0 + drift * t + zb);
  }
  return out;
}

ZbPrediction case_a_prediction(const DriveParams& drive) {
  validate(drive);
  return {bessel_j0(drive.bessel_argument()), 1.0, Axis::x};
}

ZbPrediction case_b_prediction(const DriveParams& drive) {
  validate(drive);
  const Real j0 = bessel_j0(drive.bessel_argument());
  if (std::abs(j0) < 1e-6) {
    std::ostringstream os;
    os << "case_b_prediction: drive sits on a CDT point (J0 = " << j0 << "); the ZB frequency is zero";
    throw CdtPointError(os.str());
  }
  return {1.0 / j0, j0, Axis::z};
}

std::vector<Real> bessel_j0_zeros(int n) {
  if (n < 1) throw InvalidInput("bessel_j0_zeros: n must be >= 1");
  std::vector<Real> zeros;
  zeros.reserve(static_cast<std::size_t>(n));
  constexpr Real step = 0.5;
  Real lo = step;
  Real f_lo = bessel_j0(lo);
  while (static_cast<int>(zeros.size()) < n) {
    const Real hi = lo + step;
    const Real f_hi = bessel_j0(hi);
    if (std::signbit(f_lo) != std::signbit(f_hi)) {
      Real a = lo;
      Real b = hi;
      Real fa = f_lo;
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const Real mid = 0.5 * (a + b);
        const Real fm = bessel_j0(mid);
        if (fm == 0.0) {
          a = b = mid;
          break;
        }
        if (std::signbit(fm) == std::signbit(fa)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      zeros.push_back(0.5 * (a + b));
    }
    lo = hi;
    f_lo = f_hi;
  }
  return zeros;
}

std::vector<Real> cdt_points(Real omega_d, int n) {
  if (!(omega_d > 0.0)) throw InvalidInput("cdt_points: omega_d must be positive");
  std::vector<Real> points = bessel_j0_zeros(n);
  for (Real& x : points) x *= 0.5 * omega_d;
  return points;
}

Mat2c ResonanceTheory::hamiltonian(const Vec2& p) const {
  const Vec2 pt = p_tilde(p);
  return 0.5 * p.squaredNorm() * pauli::identity() + pt.x() * pauli::x() + pt.y() * pauli::z();
}

Vec2 ResonanceTheory::p_tilde(const Vec2& p) const { return Vec2(p.x() - 0.5 * omega_d, -0.5 * v_d); }

Real ResonanceTheory::e_plus(const Vec2& p) const { return 0.5 * p.squaredNorm() + p_tilde(p).norm(); }
Real ResonanceTheory::e_minus(const Vec2& p) const { return 0.5 * p.squaredNorm() - p_tilde(p).norm(); }
Real ResonanceTheory::e_plus_approx(const Vec2& p) const { return 0.5 * p.squaredNorm() + 0.5 * v_d; }
Real ResonanceTheory::e_minus_approx(const Vec2& p) const { return 0.5 * p.squaredNorm() - 0.5 * v_d; }

Vec2 ResonanceTheory::group_velocity_plus(const Vec2& p) const {
  const Vec2 pt = p_tilde(p);
  const Real mag = pt.norm();
  return mag == 0.0 ? p : Vec2(p + Vec2(pt.x() / mag, 0.0));
}

Vec2 ResonanceTheory::group_velocity_minus(const Vec2& p) const {
  const Vec2 pt = p_tilde(p);
  const Real mag = pt.norm();
  return mag == 0.0 ? p : Vec2(p - Vec2(pt.x() / mag, 0.0));
}

ResonanceTheory resonance_theory(const DriveParams& drive, const PacketSpec& spec) {
  validate(drive);
  validate(spec);
  ResonanceTheory rt;
  rt.omega_d = drive.omega_d;
  rt.v_d = drive.v_d;
  rt.p_x_res = 0.5 * drive.omega_d;
  rt.detuning = spec.p0.x() - rt.p_x_res;
  if (std::abs(rt.detuning) > spec.sigma_p.x()) {
    std::ostringstream os;
    os << "resonance_theory: p_x0 - omega_d/2 = " << rt.detuning << " exceeds sigma_p = " << spec.sigma_p.x();
    throw InvalidInput(os.str());
  }
  const Real ratio_pz = std::abs(spec.p0.y()) > 0.0 ? drive.omega_d / std::abs(spec.p0.y())
                                                    : std::numeric_limits<Real>::infinity();
  const Real ratio_vd = drive.v_d > 0.0 ? drive.omega_d / drive.v_d : std::numeric_limits<Real>::infinity();
  const Real worst = std::min(ratio_pz, ratio_vd);
  if (worst < 4.0) {
    std::ostringstream os;
    os << "resonance_theory: omega_d must dominate p_z0 and v_d (ratio " << worst << " < 4)";
    throw InvalidInput(os.str());
  }
  if (worst < 10.0) {
    std::ostringstream os;
    os << "resonance_theory: omega_d / max(p_z0, v_d) = " << worst << " is below 10";
    warn(os.str());
  }
  rt.zb_freq = 2.0 * rt.p_tilde(spec.p0).norm();
  rt.axis = Axis::x;
  return rt;
}

namespace {

Real static_lifetime(const PacketSpec& spec, Real j0_factor) {
  const Vec2 p = spec.p0;
  const Real mag = std::hypot(j0_factor * p.x(), p.y());
  if (mag == 0.0) throw InvalidInput("lifetime_estimate: packet centred on a degenerate mode (|p_tilde| = 0)");
  // Linearized spread of omega = 2 |p_tilde| over the momentum distribution.
  const Real dx = 2.0 * j0_factor * j0_factor * p.x() / mag * spec.sigma_p.x();
  const Real dz = 2.0 * p.y() / mag * spec.sigma_p.y();
  const Real spread = std::hypot(dx, dz);
  if (spread == 0.0) return std::numeric_limits<Real>::infinity();
  // Quarter-period convention pi / (2 spread); the Gaussian envelope
  // exp(-spread^2 t^2 / 2) itself reaches 1/e slightly earlier, at sqrt(2)/spread.
  return kPi / (2.0 * spread);
}

}  // namespace

Real lifetime_estimate(const PacketSpec& spec, Real j0_factor, LifetimeRegime regime,
                       const std::optional<DriveParams>& drive) {
  validate(spec);
  if (regime == LifetimeRegime::static_like) return static_lifetime(spec, j0_factor);

  if (!drive) throw InvalidInput("lifetime_estimate: the resonance regime needs the drive parameters");
  const Real tau_static = static_lifetime(spec, 1.0);
  // Branch velocity difference 2 d|p_tilde|/dp_x; rms over the packet for the residual.
  const Real static_dv = 2.0;
  const Real detuning = spec.p0.x() - 0.5 * drive->omega_d;
  const Real half_vd = 0.5 * drive->v_d;
  const Real rms_detuning = std::hypot(detuning, spec.sigma_p.x());
  const Real residual_dv = 2.0 * rms_detuning / std::hypot(half_vd, rms_detuning);
  const Real scale = residual_dv > 0.0 ? static_dv / residual_dv : std::numeric_limits<Real>::infinity();
  return tau_static * std::max(10.0, scale);
}

}  // namespace zitterlab
