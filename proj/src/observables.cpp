#include "zitterlab/observables.hpp"

#include "zitterlab/efftheory.hpp"
#include "zitterlab/numeric.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace zitterlab {

namespace {

/// Unnormalized DFT along one axis; sign > 0 uses exp(+2 pi i k j / n).
void dft_along(ModeArray& a, Axis axis, int sign) {
  thread_local Eigen::FFT<Real> fft;
  fft.SetFlag(Eigen::FFT<Real>::Unscaled);
  const Eigen::Index n = axis == Axis::x ? a.rows() : a.cols();
  const Eigen::Index lines = axis == Axis::x ? a.cols() : a.rows();
  std::vector<Complex> in(static_cast<std::size_t>(n));
  std::vector<Complex> out(static_cast<std::size_t>(n));
  for (Eigen::Index line = 0; line < lines; ++line) {
    for (Eigen::Index k = 0; k < n; ++k) in[k] = axis == Axis::x ? a(k, line) : a(line, k);
    if (sign > 0) {
      fft.inv(out, in);
    } else {
      fft.fwd(out, in);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      if (axis == Axis::x) {
        a(k, line) = out[k];
      } else {
        a(line, k) = out[k];
      }
    }
  }
}

/// exp(i p_k c) along one axis; the 2-D phase factorizes.
Eigen::ArrayXcd axis_phase(const MomentumGrid& g, Axis axis, Real c) {
  const int n = axis == Axis::x ? g.n_x() : g.n_z();
  Eigen::ArrayXcd out(n);
  for (int k = 0; k < n; ++k) out[k] = std::polar(1.0, (axis == Axis::x ? g.px(k) : g.pz(k)) * c);
  return out;
}

Eigen::ArrayXd alternating(int n) {
  Eigen::ArrayXd out(n);
  for (int k = 0; k < n; ++k) out[k] = (k & 1) ? -1.0 : 1.0;
  return out;
}

/// a(ix, iz) * fx[ix] * fz[iz]
template <typename Fx, typename Fz>
void scale_separable(ModeArray& a, const Fx& fx, const Fz& fz) {
  for (Eigen::Index iz = 0; iz < a.cols(); ++iz) a.col(iz) *= fx * fz[iz];
}

/// psi(p) exp(i p . origin)
ModeArray demodulate(const ModeArray& amplitudes, const MomentumGrid& grid, const Vec2& origin) {
  ModeArray out = amplitudes;
  scale_separable(out, axis_phase(grid, Axis::x, origin.x()), axis_phase(grid, Axis::z, origin.y()));
  return out;
}

/// d phi / d p along `axis` for a demodulated (narrow-band) phi.
ModeArray demodulated_derivative(const ModeArray& phi, const MomentumGrid& grid, Axis axis) {
  const int n = axis == Axis::x ? grid.n_x() : grid.n_z();
  const Real dr = axis == Axis::x ? grid.position_spacing().x() : grid.position_spacing().y();
  const Eigen::ArrayXd sign = alternating(n);
  // exp(-i p r) basis: d/dp multiplies by -i r; the unpaired Nyquist mode is dropped.
  Eigen::ArrayXcd weight(n);
  for (int j = 0; j < n; ++j) weight[j] = j == 0 ? Complex(0.0) : Complex(0.0, -(j - n / 2) * dr / n);
  ModeArray work = phi;
  const Eigen::ArrayXd ones_x = Eigen::ArrayXd::Ones(grid.n_x());
  const Eigen::ArrayXd ones_z = Eigen::ArrayXd::Ones(grid.n_z());
  if (axis == Axis::x) {
    scale_separable(work, sign, ones_z);
    dft_along(work, axis, +1);
    scale_separable(work, weight, ones_z);
    dft_along(work, axis, -1);
    scale_separable(work, sign, ones_z);
  } else {
    scale_separable(work, ones_x, sign);
    dft_along(work, axis, +1);
    scale_separable(work, ones_x, weight);
    dft_along(work, axis, -1);
    scale_separable(work, ones_x, sign);
  }
  return work;
}

Real edge_mass_fraction(const RealArray& density, int cells) {
  const Eigen::Index nx = density.rows();
  const Eigen::Index nz = density.cols();
  RealArray edge = density;
  edge.block(cells, cells, nx - 2 * cells, nz - 2 * cells).setZero();
  return pairwise_sum(edge) / pairwise_sum(density);
}

void check_momentum_edges(const SpinorField& field) {
  const Real fraction = edge_mass_fraction(RealArray(field.up.abs2() + field.down.abs2()), 3);
  if (fraction > 1e-6) {
    std::ostringstream os;
    os << "boundary contamination: " << fraction << " of the mass lies within 3 cells of the momentum grid edge";
    throw BoundaryError(os.str());
  }
}

}  // namespace

ModeArray to_position_amplitudes(const ModeArray& amplitudes, const MomentumGrid& grid, const Vec2& origin) {
  ModeArray a = amplitudes;
  scale_separable(a, axis_phase(grid, Axis::x, origin.x()) * alternating(grid.n_x()),
                  axis_phase(grid, Axis::z, origin.y()) * alternating(grid.n_z()));
  dft_along(a, Axis::x, +1);
  dft_along(a, Axis::z, +1);
  const Vec2 dp = grid.spacing();
  const Vec2 dr = grid.position_spacing();
  const Vec2 p_start = grid.momentum(0, 0);
  Eigen::ArrayXcd fx(grid.n_x());
  Eigen::ArrayXcd fz(grid.n_z());
  for (int j = 0; j < grid.n_x(); ++j) fx[j] = std::polar(dp.prod() / (2.0 * kPi), p_start.x() * (j - grid.n_x() / 2) * dr.x());
  for (int l = 0; l < grid.n_z(); ++l) fz[l] = std::polar(1.0, p_start.y() * (l - grid.n_z() / 2) * dr.y());
  scale_separable(a, fx, fz);
  return a;
}

ModeArray spectral_derivative(const ModeArray& amplitudes, const MomentumGrid& grid, const Vec2& origin, Axis axis) {
  // phi = psi exp(i p . origin) is narrow-band around r = 0; differentiate it,
  // then restore the carrier: d psi = (d phi - i origin phi) exp(-i p . origin).
  const ModeArray phi = demodulate(amplitudes, grid, origin);
  ModeArray out = demodulated_derivative(phi, grid, axis) - Complex(0.0, axis == Axis::x ? origin.x() : origin.y()) * phi;
  scale_separable(out, axis_phase(grid, Axis::x, -origin.x()), axis_phase(grid, Axis::z, -origin.y()));
  return out;
}

Real PositionDensity::total() const { return pairwise_sum(values) * spacing.prod(); }

Vec2 PositionDensity::mean() const {
  RealArray wx = values;
  RealArray wz = values;
  for (Eigen::Index l = 0; l < values.cols(); ++l) {
    for (Eigen::Index j = 0; j < values.rows(); ++j) {
      wx(j, l) *= x(j);
      wz(j, l) *= z(l);
    }
  }
  const Real sum = pairwise_sum(values);
  return {pairwise_sum(wx) / sum, pairwise_sum(wz) / sum};
}

Vec2 PositionDensity::variance() const {
  const Vec2 m = mean();
  RealArray wx = values;
  RealArray wz = values;
  for (Eigen::Index l = 0; l < values.cols(); ++l) {
    for (Eigen::Index j = 0; j < values.rows(); ++j) {
      wx(j, l) *= (x(j) - m.x()) * (x(j) - m.x());
      wz(j, l) *= (z(l) - m.y()) * (z(l) - m.y());
    }
  }
  const Real sum = pairwise_sum(values);
  return {pairwise_sum(wx) / sum, pairwise_sum(wz) / sum};
}

std::vector<Real> PositionDensity::marginal(Axis axis) const {
  std::vector<Real> out;
  if (axis == Axis::x) {
    for (Eigen::Index j = 0; j < values.rows(); ++j) out.push_back(pairwise_sum(values.row(j)) * spacing.y());
  } else {
    for (Eigen::Index l = 0; l < values.cols(); ++l) out.push_back(pairwise_sum(values.col(l)) * spacing.x());
  }
  return out;
}

Vec2 position_expectation(const SpinorField& field, PositionMethod method) {
  check_momentum_edges(field);
  const auto& g = field.grid;
  if (method == PositionMethod::momentum_gradient) {
    // With phi = psi exp(i p . origin): <r> = origin + i sum conj(phi) grad phi.
    Vec2 r = field.origin;
    const Real norm = pairwise_sum(RealArray(field.up.abs2() + field.down.abs2()));
    const ModeArray up = demodulate(field.up, g, field.origin);
    const ModeArray down = demodulate(field.down, g, field.origin);
    for (Axis axis : {Axis::x, Axis::z}) {
      const ModeArray du = demodulated_derivative(up, g, axis);
      const ModeArray dd = demodulated_derivative(down, g, axis);
      // Re(i conj(phi) d phi) = -Im(conj(phi) d phi)
      const RealArray integrand = -((up.conjugate() * du).imag() + (down.conjugate() * dd).imag());
      r(axis == Axis::x ? 0 : 1) += pairwise_sum(integrand) / norm;
    }
    return r;
  }
  const PositionDensity density = to_position_density(field);
  const Real fraction = edge_mass_fraction(density.values, 3);
  if (fraction > 1e-6) {
    std::ostringstream os;
    os << "boundary contamination: " << fraction << " of the mass lies within 3 cells of the position window edge";
    throw BoundaryError(os.str());
  }
  return density.mean();
}

Vec3 spin_expectation(const SpinorField& field) {
  const ModeArray cross = field.up.conjugate() * field.down;
  const Real norm = pairwise_sum(RealArray(field.up.abs2() + field.down.abs2()));
  return Vec3(2.0 * pairwise_sum(RealArray(cross.real())) / norm, 2.0 * pairwise_sum(RealArray(cross.imag())) / norm,
              pairwise_sum(RealArray(field.up.abs2() - field.down.abs2())) / norm);
}

PositionDensity to_position_density(const SpinorField& field) {
  const ModeArray up = to_position_amplitudes(field.up, field.grid, field.origin);
  const ModeArray down = to_position_amplitudes(field.down, field.grid, field.origin);
  return PositionDensity{field.origin, field.grid.position_spacing(), up.abs2() + down.abs2()};
}

namespace {

BranchOverlap overlap_of_branches(const ModeArray& plus, const ModeArray& minus, const MomentumGrid& g,
                                  const Vec2& origin) {
  BranchOverlap result;
  result.mass_plus = pairwise_sum(RealArray(plus.abs2())) * g.cell_area();
  result.mass_minus = pairwise_sum(RealArray(minus.abs2())) * g.cell_area();
  if (std::min(result.mass_plus, result.mass_minus) < 1e-6) {
    result.degenerate = true;
    result.value = 1.0;
    return result;
  }
  const RealArray rho_plus = to_position_amplitudes(plus, g, origin).abs2();
  const RealArray rho_minus = to_position_amplitudes(minus, g, origin).abs2();
  const Real overlap = pairwise_sum(RealArray((rho_plus * rho_minus).sqrt())) /
                       std::sqrt(pairwise_sum(rho_plus) * pairwise_sum(rho_minus));
  result.value = std::min(1.0, overlap);
  return result;
}

}  // namespace

BranchBasis make_branch_basis(const MomentumGrid& g, Real j0_factor) {
  BranchBasis b{ModeArray(g.n_x(), g.n_z()), ModeArray(g.n_x(), g.n_z()), ModeArray(g.n_x(), g.n_z()),
                ModeArray(g.n_x(), g.n_z())};
  for (int iz = 0; iz < g.n_z(); ++iz) {
    for (int ix = 0; ix < g.n_x(); ++ix) {
      const EffEigensystem es = eff_eigensystem(g.momentum(ix, iz), j0_factor);
      b.plus_up(ix, iz) = es.psi_plus(0);
      b.plus_down(ix, iz) = es.psi_plus(1);
      b.minus_up(ix, iz) = es.psi_minus(0);
      b.minus_down(ix, iz) = es.psi_minus(1);
    }
  }
  return b;
}

BranchBasis make_branch_basis(const MomentumGrid& g, const std::function<Mat2c(const Vec2&)>& h) {
  BranchBasis b{ModeArray(g.n_x(), g.n_z()), ModeArray(g.n_x(), g.n_z()), ModeArray(g.n_x(), g.n_z()),
                ModeArray(g.n_x(), g.n_z())};
  for (int iz = 0; iz < g.n_z(); ++iz) {
    for (int ix = 0; ix < g.n_x(); ++ix) {
      const Eigen::SelfAdjointEigenSolver<Mat2c> es(h(g.momentum(ix, iz)));
      b.plus_up(ix, iz) = es.eigenvectors()(0, 1);
      b.plus_down(ix, iz) = es.eigenvectors()(1, 1);
      b.minus_up(ix, iz) = es.eigenvectors()(0, 0);
      b.minus_down(ix, iz) = es.eigenvectors()(1, 0);
    }
  }
  return b;
}

BranchOverlap branch_overlap(const SpinorField& field, const BranchBasis& b) {
  const ModeArray plus = b.plus_up.conjugate() * field.up + b.plus_down.conjugate() * field.down;
  const ModeArray minus = b.minus_up.conjugate() * field.up + b.minus_down.conjugate() * field.down;
  return overlap_of_branches(plus, minus, field.grid, field.origin);
}

BranchOverlap branch_overlap(const SpinorField& field, Real j0_factor) {
  return branch_overlap(field, make_branch_basis(field.grid, j0_factor));
}

BranchOverlap branch_overlap(const SpinorField& field, const std::function<Mat2c(const Vec2&)>& h) {
  return branch_overlap(field, make_branch_basis(field.grid, h));
}

int count_peaks(const std::vector<Real>& profile, Real rel_threshold, Real dip_fraction) {
  if (profile.empty()) return 0;
  const Real top = *std::max_element(profile.begin(), profile.end());
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const Real left = i > 0 ? profile[i - 1] : -std::numeric_limits<Real>::infinity();
    const Real right = i + 1 < profile.size() ? profile[i + 1] : -std::numeric_limits<Real>::infinity();
    if (profile[i] > left && profile[i] >= right && profile[i] >= rel_threshold * top) maxima.push_back(i);
  }
  if (maxima.empty()) return 0;
  int peaks = 1;
  std::size_t current = maxima.front();
  for (std::size_t m = 1; m < maxima.size(); ++m) {
    const std::size_t next = maxima[m];
    const Real dip = *std::min_element(profile.begin() + static_cast<long>(current), profile.begin() + static_cast<long>(next) + 1);
    const Real lower = std::min(profile[current], profile[next]);
    if (dip < dip_fraction * lower) {
      ++peaks;
      current = next;
    } else if (profile[next] > profile[current]) {
      current = next;
    }
  }
  return peaks;
}

void TimeSeries::check() const {
  const std::size_t n = times.size();
  for (const auto* column : {&x_mean, &z_mean, &sx, &sy, &sz, &norm, &overlap}) {
    if (column->size() != n) throw InvalidInput("time series: columns differ in length");
  }
  for (Real v : norm) {
    if (std::abs(v - 1.0) > 1e-8) throw InvalidInput("time series: norm entry deviates from 1 by more than 1e-8");
  }
}

namespace {

std::string format_real(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const TimeSeries& series) {
  os << "t,x_mean,z_mean,sx,sy,sz,norm,overlap\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << format_real(series.times[i]) << ',' << format_real(series.x_mean[i]) << ','
       << format_real(series.z_mean[i]) << ',' << format_real(series.sx[i]) << ',' << format_real(series.sy[i])
       << ',' << format_real(series.sz[i]) << ',' << format_real(series.norm[i]) << ','
       << format_real(series.overlap[i]) << '\n';
  }
}

void write_summary(std::ostream& os, const ZbSummary& s, const std::string& prefix) {
  os << prefix << "amplitude = " << format_real(s.amplitude) << '\n'
     << prefix << "omega = " << format_real(s.omega) << '\n'
     << prefix << "tau = " << format_real(s.tau) << '\n'
     << prefix << "phase = " << format_real(s.phase) << '\n'
     << prefix << "offset = " << format_real(s.offset) << '\n'
     << prefix << "drift_velocity_x = " << format_real(s.drift_velocity.x()) << '\n'
     << prefix << "drift_velocity_z = " << format_real(s.drift_velocity.y()) << '\n'
     << prefix << "axis = " << to_string(s.axis) << '\n'
     << prefix << "fit_residual = " << format_real(s.fit_residual) << '\n';
}

}  // namespace zitterlab
