#include "zitterlab/dynamics.hpp"

#include "zitterlab/efftheory.hpp"
#include "zitterlab/numeric.hpp"

#include <cmath>
#include <sstream>

namespace zitterlab {

ModeHamiltonian ModeHamiltonian::at(const Vec2& p, const DriveParams& drive) {
  return ModeHamiltonian{0.5 * p.squaredNorm(), p.x(), p.y(), drive};
}

Mat2c ModeHamiltonian::matrix(Real t) const {
  return kinetic * pauli::identity() + h_z(t) * pauli::z() + h_x * pauli::x();
}

Mat2c spin_orbit_exponential(Real h_x, Real h_z, Real dt) {
  const Real w = std::hypot(h_x, h_z);
  const Real c = std::cos(w * dt);
  // sin(w dt)/w tends to dt as w -> 0.
  const Real sinc = w * std::abs(dt) > 1e-8 ? std::sin(w * dt) / w : dt * (1.0 - w * w * dt * dt / 6.0);
  Mat2c u;
  u(0, 0) = Complex(c, -sinc * h_z);
  u(1, 1) = Complex(c, sinc * h_z);
  u(0, 1) = Complex(0.0, -sinc * h_x);
  u(1, 0) = Complex(0.0, -sinc * h_x);
  return u;
}

Mat2c hermitian_exponential(const Mat2c& h, Real t) {
  const Real e0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const Real nz = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const Real nx = h(1, 0).real();
  const Real ny = h(1, 0).imag();
  const Real w = std::sqrt(nx * nx + ny * ny + nz * nz);
  const Real c = std::cos(w * t);
  const Real sinc = w * std::abs(t) > 1e-8 ? std::sin(w * t) / w : t;
  const Mat2c n_sigma = nx * pauli::x() + ny * pauli::y() + nz * pauli::z();
  return std::polar(1.0, -e0 * t) * (c * pauli::identity() - Complex(0.0, sinc) * n_sigma);
}

Spinor step_mode(const Spinor& s, const ModeHamiltonian& mh, Real t, Real dt) {
  const Real mid = t + 0.5 * dt;
  return std::polar(1.0, -mh.kinetic * dt) * (spin_orbit_exponential(mh.h_x, mh.h_z(mid), dt) * s);
}

const char* to_string(StepScheme scheme) {
  return scheme == StepScheme::midpoint_exponential ? "midpoint-exponential" : "quarter-period-subdivided";
}

StepScheme parse_step_scheme(const std::string& name) {
  if (name == "midpoint-exponential") return StepScheme::midpoint_exponential;
  if (name == "quarter-period-subdivided") return StepScheme::quarter_period_subdivided;
  throw ConfigError("unknown stepper scheme '" + name + "'");
}

Real max_mode_energy(const MomentumGrid& grid, const DriveParams& drive) {
  Real worst = 0.0;
  for (int ix : {0, grid.n_x() - 1}) {
    for (int iz : {0, grid.n_z() - 1}) {
      const Vec2 p = grid.momentum(ix, iz);
      const Real spin = std::hypot(p.x(), std::abs(p.y()) + drive.v_d);
      worst = std::max(worst, 0.5 * p.squaredNorm() + spin);
    }
  }
  return worst;
}

StepperConfig default_stepper(const DriveParams& drive, const MomentumGrid& grid) {
  validate(drive);
  StepperConfig cfg{drive.period() / 128.0, StepScheme::quarter_period_subdivided};
  const Real e_max = max_mode_energy(grid, drive);
  while (cfg.dt * e_max > 0.5) cfg.dt *= 0.5;
  return cfg;
}

namespace {

int quarter_steps(Real quarter, Real step) {
  const Real ratio = quarter / step;
  const long rounded = std::lround(ratio);
  if (rounded < 1 || std::abs(ratio - Real(rounded)) > 1e-6) return 0;
  return static_cast<int>(rounded);
}

}  // namespace

void validate(const StepperConfig& cfg, const DriveParams& drive, const MomentumGrid& grid) {
  validate(drive);
  const Real h = std::abs(cfg.dt);
  std::ostringstream os;
  if (!(h > 0.0) || !std::isfinite(h)) {
    os << "stepper: dt must be non-zero and finite (got " << cfg.dt << ")";
    throw ConfigError(os.str());
  }
  if (h * drive.omega_d > 2.0 * kPi / 64.0 * (1.0 + 1e-12)) {
    os << "stepper: dt * omega_d = " << h * drive.omega_d << " exceeds 2 pi / 64 (dt = " << cfg.dt << ")";
    throw ConfigError(os.str());
  }
  const Real e_max = max_mode_energy(grid, drive);
  if (h * e_max > 0.5) {
    os << "stepper: dt * max|E| = " << h * e_max << " exceeds 0.5 (dt = " << cfg.dt << ", max|E| = " << e_max << ")";
    throw ConfigError(os.str());
  }
  if (cfg.scheme == StepScheme::quarter_period_subdivided && quarter_steps(drive.period() / 4.0, h) == 0) {
    os << "stepper: quarter drive period " << drive.period() / 4.0 << " is not a whole number of steps of " << h;
    throw ConfigError(os.str());
  }
}

Propagator::Propagator(MomentumGrid grid, DriveParams drive, StepperConfig cfg)
    : grid_(std::move(grid)), drive_(drive), cfg_(cfg) {
  validate(cfg_, drive_, grid_);
  step_ = std::abs(cfg_.dt);
  if (cfg_.scheme == StepScheme::quarter_period_subdivided) {
    steps_per_quarter_ = quarter_steps(drive_.period() / 4.0, step_);
    step_ = drive_.period() / 4.0 / steps_per_quarter_;
    build_cache();
  }
}

void Propagator::build_cache() {
  const int m = steps_per_quarter_;
  std::array<std::vector<Real>, 4> drive_values;
  for (int q = 0; q < 4; ++q) {
    drive_values[q].resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) drive_values[q][k] = drive_.value((q * m + k + 0.5) * step_);
  }
  quarters_.assign(static_cast<std::size_t>(grid_.size()), {});
  const int nx = grid_.n_x();
  parallel_for(quarters_.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const int ix = static_cast<int>(idx % nx);
      const int iz = static_cast<int>(idx / nx);
      const Real px = grid_.px(ix);
      const Real pz = grid_.pz(iz);
      for (int q = 0; q < 4; ++q) {
        Mat2c u = Mat2c::Identity();
        for (int k = 0; k < m; ++k) u = spin_orbit_exponential(px, pz - drive_values[q][k], step_) * u;
        quarters_[idx][q] = u;
      }
    }
  });
}

std::vector<Propagator::Op> Propagator::plan(Real t0, Real t1) const {
  const Real h = step_;
  const Real tol = 1e-9 * h;
  const int dir = t1 > t0 ? 1 : -1;
  const bool cached = cfg_.scheme == StepScheme::quarter_period_subdivided;
  const Real quarter = steps_per_quarter_ * h;

  std::vector<Op> ops;
  Real t = t0;
  while (dir * (t1 - t) > tol) {
    if (cached) {
      const long j = std::lround(t / quarter);
      if (std::abs(t - j * quarter) <= tol) {
        const long j_next = j + dir;
        if (dir * (t1 - j_next * quarter) >= -tol) {
          const long q = dir > 0 ? j : j_next;
          ops.push_back(Op{true, static_cast<int>(((q % 4) + 4) % 4), dir < 0, 0.0, 0.0});
          t = j_next * quarter;
          continue;
        }
      }
    }
    const long k = std::lround(t / h);
    const bool on_lattice = std::abs(t - k * h) <= tol;
    Real next;
    if (dir > 0) {
      next = on_lattice ? (k + 1) * h : (std::floor(t / h) + 1) * h;
    } else {
      next = on_lattice ? (k - 1) * h : std::floor(t / h) * h;
    }
    const Real b = dir > 0 ? std::min(next, t1) : std::max(next, t1);
    const Real mid = 0.5 * (t + b);
    ops.push_back(Op{false, 0, false, b - t, drive_.value(mid)});
    t = b;
  }
  return ops;
}

SpinorField Propagator::advance(const SpinorField& field, Real t0, Real t1) const {
  if (!(field.grid == grid_)) throw InvalidInput("propagator: field grid differs from the propagator grid");
  if (!((t1 - t0) * cfg_.dt > 0.0)) {
    std::ostringstream os;
    os << "evolve: direction of time (" << t0 << " -> " << t1 << ") does not match the sign of dt = " << cfg_.dt;
    throw ConfigError(os.str());
  }
  const std::vector<Op> ops = plan(t0, t1);
  const Real elapsed = t1 - t0;
  SpinorField out = field;
  const int nx = grid_.n_x();
  // The kinetic phase factorizes into x and z parts.
  std::vector<Complex> kin_x(static_cast<std::size_t>(nx));
  std::vector<Complex> kin_z(static_cast<std::size_t>(grid_.n_z()));
  for (int ix = 0; ix < nx; ++ix) kin_x[ix] = std::polar(1.0, -0.5 * grid_.px(ix) * grid_.px(ix) * elapsed);
  for (int iz = 0; iz < grid_.n_z(); ++iz) kin_z[iz] = std::polar(1.0, -0.5 * grid_.pz(iz) * grid_.pz(iz) * elapsed);
  parallel_for(static_cast<std::size_t>(grid_.size()), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const int ix = static_cast<int>(idx % nx);
      const int iz = static_cast<int>(idx / nx);
      const Real px = grid_.px(ix);
      const Real pz = grid_.pz(iz);
      Spinor s(field.up.data()[idx], field.down.data()[idx]);
      for (const Op& op : ops) {
        if (op.cached) {
          const Mat2c& u = quarters_[idx][op.quarter];
          s = op.adjoint ? Spinor(u.adjoint() * s) : Spinor(u * s);
        } else {
          s = spin_orbit_exponential(px, pz - op.drive_value, op.dt) * s;
        }
      }
      const Complex phase = kin_x[ix] * kin_z[iz];
      out.up.data()[idx] = phase * s(0);
      out.down.data()[idx] = phase * s(1);
    }
  });
  out.origin = field.origin + mean_momentum(field) * elapsed;
  return out;
}

SpinorField evolve(const SpinorField& field, const DriveParams& drive, Real t0, Real t1, const StepperConfig& cfg) {
  return Propagator(field.grid, drive, cfg).advance(field, t0, t1);
}

namespace {

template <typename ModeOperator>
SpinorField apply_per_mode(const SpinorField& field, Real t, ModeOperator&& op) {
  SpinorField out = field;
  const auto& g = field.grid;
  const int nx = g.n_x();
  parallel_for(static_cast<std::size_t>(g.size()), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const Vec2 p = g.momentum(static_cast<int>(idx % nx), static_cast<int>(idx / nx));
      const Spinor s = op(p) * Spinor(field.up.data()[idx], field.down.data()[idx]);
      out.up.data()[idx] = s(0);
      out.down.data()[idx] = s(1);
    }
  });
  out.origin = field.origin + mean_momentum(field) * t;
  return out;
}

}  // namespace

SpinorField evolve_constant(const SpinorField& field, Real t, const std::function<Mat2c(const Vec2&)>& h) {
  return apply_per_mode(field, t, [&](const Vec2& p) { return hermitian_exponential(h(p), t); });
}

SpinorField evolve_effective(const SpinorField& field, Real j0_factor, Real t) {
  return apply_per_mode(field, t, [&](const Vec2& p) -> Mat2c {
    const EffEigensystem es = eff_eigensystem(p, j0_factor);
    if (es.degenerate) return std::polar(1.0, -0.5 * p.squaredNorm() * t) * pauli::identity();
    return std::polar(1.0, -es.e_plus * t) * (es.psi_plus * es.psi_plus.adjoint()) +
           std::polar(1.0, -es.e_minus * t) * (es.psi_minus * es.psi_minus.adjoint());
  });
}

SpinorField evolve_static_closed_form(const SpinorField& field, Real t) { return evolve_effective(field, 1.0, t); }

SpinorField rotate_frame(const SpinorField& field, Real omega_d, Real t, FrameDirection direction) {
  const Real angle = (direction == FrameDirection::in ? 0.5 : -0.5) * omega_d * t;
  // exp(i angle sigma_x)
  const Mat2c r = std::cos(angle) * pauli::identity() + Complex(0.0, std::sin(angle)) * pauli::x();
  SpinorField out = field;
  out.up = r(0, 0) * field.up + r(0, 1) * field.down;
  out.down = r(1, 0) * field.up + r(1, 1) * field.down;
  return out;
}

SpinorField to_drive_frame(const SpinorField& field, const DriveParams& drive, Real t) {
  // psi_I = exp(-i F(t) sigma_z) psi with F(t) = (v_d/omega_d)(sin(omega_d t + phase) - sin(phase)).
  const Real f = drive.v_d / drive.omega_d * (std::sin(drive.omega_d * t + drive.phase) - std::sin(drive.phase));
  SpinorField out = field;
  out.up *= std::polar(1.0, -f);
  out.down *= std::polar(1.0, f);
  return out;
}

}  // namespace zitterlab
