#include "zitterlab/core.hpp"

#include "zitterlab/numeric.hpp"

#include <sstream>
#include <string>

namespace zitterlab {

Scales::Scales(Real mass_kg, Real kappa_per_m, Real hbar_Js)
    : mass_kg_(mass_kg), kappa_per_m_(kappa_per_m), hbar_Js_(hbar_Js) {
  if (!(mass_kg > 0.0) || !(kappa_per_m > 0.0) || !(hbar_Js > 0.0)) {
    throw InvalidInput("scales: mass, kappa and hbar must be strictly positive");
  }
}

Dimension parse_dimension(std::string_view tag) {
  if (tag == "time") return Dimension::time;
  if (tag == "length") return Dimension::length;
  if (tag == "momentum") return Dimension::momentum;
  if (tag == "velocity") return Dimension::velocity;
  if (tag == "frequency") return Dimension::frequency;
  if (tag == "energy") return Dimension::energy;
  throw InvalidInput("unknown quantity tag '" + std::string(tag) + "'");
}

const char* to_string(Dimension dim) {
  switch (dim) {
    case Dimension::time: return "time";
    case Dimension::length: return "length";
    case Dimension::momentum: return "momentum";
    case Dimension::velocity: return "velocity";
    case Dimension::frequency: return "frequency";
    case Dimension::energy: return "energy";
  }
  return "?";
}

Real unit_of(const Scales& scales, Dimension dim) {
  switch (dim) {
    case Dimension::time: return scales.time_unit();
    case Dimension::length: return scales.length_unit();
    case Dimension::momentum: return scales.momentum_unit();
    case Dimension::velocity: return scales.velocity_unit();
    case Dimension::frequency: return scales.frequency_unit();
    case Dimension::energy: return scales.energy_unit();
  }
  throw InvalidInput("unknown dimension");
}

Real to_si(const Scales& scales, Quantity q) { return q.value * unit_of(scales, q.dimension); }

Real to_si(const Scales& scales, std::string_view tag, Real value) {
  return to_si(scales, Quantity{parse_dimension(tag), value});
}

Real from_si(const Scales& scales, Dimension dim, Real value) { return value / unit_of(scales, dim); }

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

MomentumGrid::MomentumGrid(int n_x, int n_z, Vec2 center, Vec2 halfwidth)
    : n_x_(n_x), n_z_(n_z), center_(center), halfwidth_(halfwidth) {
  if (!is_power_of_two(n_x) || !is_power_of_two(n_z) || n_x < 16 || n_z < 16) {
    std::ostringstream os;
    os << "grid: point counts must be powers of two >= 16 (got " << n_x << "x" << n_z << ")";
    throw InvalidInput(os.str());
  }
  if (!(halfwidth.x() > 0.0) || !(halfwidth.y() > 0.0) || !center.allFinite()) {
    throw InvalidInput("grid: half-widths must be positive and the center finite");
  }
}

Vec2 MomentumGrid::position_spacing() const {
  const Vec2 dp = spacing();
  return {2.0 * kPi / (n_x_ * dp.x()), 2.0 * kPi / (n_z_ * dp.y())};
}

void validate(const PacketSpec& spec) {
  if (!(spec.sigma_p.x() > 0.0) || !(spec.sigma_p.y() > 0.0)) {
    throw InvalidInput("packet: sigma_p components must be positive");
  }
  if (!spec.p0.allFinite() || !spec.r0.allFinite()) throw InvalidInput("packet: p0 and r0 must be finite");
  if (std::abs(spec.spinor0.norm() - 1.0) > 1e-12) throw InvalidInput("packet: spinor0 must be unit norm");
}

void validate(const DriveParams& drive) {
  if (!(drive.omega_d > 0.0)) throw InvalidInput("drive: omega_d must be positive");
  if (!(drive.v_d >= 0.0)) throw InvalidInput("drive: v_d must be non-negative");
  if (!std::isfinite(drive.phase)) throw InvalidInput("drive: phase must be finite");
}

SpinorField::SpinorField(MomentumGrid g, ModeArray u, ModeArray d, Vec2 o)
    : grid(std::move(g)), up(std::move(u)), down(std::move(d)), origin(o) {
  if (up.rows() != grid.n_x() || up.cols() != grid.n_z() || down.rows() != grid.n_x() ||
      down.cols() != grid.n_z()) {
    throw InvalidInput("spinor field: amplitude arrays do not match the grid shape");
  }
}

Real norm_squared(const SpinorField& field) {
  const RealArray density = field.up.abs2() + field.down.abs2();
  return pairwise_sum(density) * field.grid.cell_area();
}

Vec2 mean_momentum(const SpinorField& field) {
  const RealArray density = field.up.abs2() + field.down.abs2();
  const auto& g = field.grid;
  RealArray wx(g.n_x(), g.n_z());
  RealArray wz(g.n_x(), g.n_z());
  for (int iz = 0; iz < g.n_z(); ++iz) {
    for (int ix = 0; ix < g.n_x(); ++ix) {
      wx(ix, iz) = g.px(ix) * density(ix, iz);
      wz(ix, iz) = g.pz(iz) * density(ix, iz);
    }
  }
  const Real total = pairwise_sum(density);
  return {pairwise_sum(wx) / total, pairwise_sum(wz) / total};
}

Real truncated_mass(const PacketSpec& spec, const MomentumGrid& grid) {
  const Vec2 dp = grid.spacing();
  Real inside = 1.0;
  for (int axis = 0; axis < 2; ++axis) {
    // Cell-centred coverage of the node set.
    const Real lo = grid.center()(axis) - grid.halfwidth()(axis) - 0.5 * dp(axis);
    const Real hi = grid.center()(axis) + grid.halfwidth()(axis) - 0.5 * dp(axis);
    const Real s = spec.sigma_p(axis) * std::sqrt(2.0);
    const Real outside = 0.5 * std::erfc((hi - spec.p0(axis)) / s) + 0.5 * std::erfc((spec.p0(axis) - lo) / s);
    inside *= 1.0 - outside;
  }
  return 1.0 - inside;
}

MomentumGrid default_grid(const PacketSpec& spec, int n, Real sigmas) {
  return MomentumGrid(n, n, spec.p0, sigmas * spec.sigma_p);
}

SpinorField make_gaussian(const PacketSpec& spec, const MomentumGrid& grid) {
  validate(spec);
  const Real lost = truncated_mass(spec, grid);
  if (lost > 1e-6) {
    std::ostringstream os;
    os << "packet: grid truncates " << lost << " of the Gaussian mass (limit 1e-6)";
    throw InvalidInput(os.str());
  }
  for (int axis = 0; axis < 2; ++axis) {
    const Real lo = grid.center()(axis) - grid.halfwidth()(axis);
    const Real hi = grid.center()(axis) + grid.halfwidth()(axis);
    const Real margin = 5.0 * spec.sigma_p(axis);
    if (spec.p0(axis) - margin < lo || spec.p0(axis) + margin > hi) {
      warn("packet: grid half-width is below 5 sigma_p around p0 on the " + std::string(axis == 0 ? "x" : "z") +
           " axis");
    }
  }

  ModeArray envelope(grid.n_x(), grid.n_z());
  for (int iz = 0; iz < grid.n_z(); ++iz) {
    for (int ix = 0; ix < grid.n_x(); ++ix) {
      const Vec2 p = grid.momentum(ix, iz);
      const Vec2 d = p - spec.p0;
      const Real gauss = std::exp(-0.25 * (d.x() * d.x() / (spec.sigma_p.x() * spec.sigma_p.x()) +
                                           d.y() * d.y() / (spec.sigma_p.y() * spec.sigma_p.y())));
      envelope(ix, iz) = gauss * std::polar(1.0, -p.dot(spec.r0));
    }
  }
  const Real mass = pairwise_sum(RealArray(envelope.abs2())) * grid.cell_area();
  envelope /= std::sqrt(mass);

  return SpinorField(grid, spec.spinor0(0) * envelope, spec.spinor0(1) * envelope, spec.r0);
}

}  // namespace zitterlab
