#pragma once

#include "zitterlab/core.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

namespace zitterlab {

/// |psi(r)|^2 on the FFT-conjugate position grid. Node (j, l) sits at
/// origin + ((j - n_x/2) dx, (l - n_z/2) dz).
struct PositionDensity {
  Vec2 origin;
  Vec2 spacing;
  RealArray values;

  Real x(Eigen::Index j) const { return origin.x() + Real(j - values.rows() / 2) * spacing.x(); }
  Real z(Eigen::Index l) const { return origin.y() + Real(l - values.cols() / 2) * spacing.y(); }
  Real total() const;
  Vec2 mean() const;
  Vec2 variance() const;
  /// Density integrated over the other coordinate.
  std::vector<Real> marginal(Axis axis) const;
};

/// Amplitudes psi(r) on the position grid centred at `origin`, normalized so
/// that sum |psi(r)|^2 dx dz equals sum |psi(p)|^2 dp_x dp_z.
ModeArray to_position_amplitudes(const ModeArray& amplitudes, const MomentumGrid& grid, const Vec2& origin);

/// Spectral derivative d/dp along one axis on the periodic momentum grid,
/// with the position window centred at `origin`.
ModeArray spectral_derivative(const ModeArray& amplitudes, const MomentumGrid& grid, const Vec2& origin, Axis axis);

enum class PositionMethod { momentum_gradient, position_sum };

/// <r> = i <psi|grad_p|psi>. Throws BoundaryError when more than 1e-6 of the
/// mass sits within 3 cells of the momentum grid edge (or, for position_sum,
/// of the position window edge).
Vec2 position_expectation(const SpinorField& field, PositionMethod method);

/// (<sigma_x>, <sigma_y>, <sigma_z>)
Vec3 spin_expectation(const SpinorField& field);

PositionDensity to_position_density(const SpinorField& field);

struct BranchOverlap {
  Real value = 1.0;
  Real mass_plus = 0.0;
  Real mass_minus = 0.0;
  /// Set when one branch carries less than 1e-6 of the mass; value is then 1.
  bool degenerate = false;
};

/// Bhattacharyya overlap of the position densities of the psi_+ and psi_-
/// branches of the averaged eigensystem with the given J0 factor.
BranchOverlap branch_overlap(const SpinorField& field, Real j0_factor);

/// Same diagnostic with the branches taken as the upper and lower eigenvectors
/// of an arbitrary per-mode Hermitian h(p).
BranchOverlap branch_overlap(const SpinorField& field, const std::function<Mat2c(const Vec2&)>& h);

/// Per-mode branch eigenvectors, precomputed for repeated overlap evaluation.
struct BranchBasis {
  ModeArray plus_up, plus_down, minus_up, minus_down;
};

BranchBasis make_branch_basis(const MomentumGrid& grid, Real j0_factor);
BranchBasis make_branch_basis(const MomentumGrid& grid, const std::function<Mat2c(const Vec2&)>& h);
BranchOverlap branch_overlap(const SpinorField& field, const BranchBasis& basis);

/// Number of separated maxima of a 1-D profile. Maxima below rel_threshold of
/// the global maximum are ignored, and neighbouring maxima whose separating
/// minimum stays above dip_fraction of the lower one count once.
int count_peaks(const std::vector<Real>& profile, Real rel_threshold = 0.05, Real dip_fraction = 0.9);

struct TimeSeries {
  std::vector<Real> times;
  std::vector<Real> x_mean;
  std::vector<Real> z_mean;
  std::vector<Real> sx;
  std::vector<Real> sy;
  std::vector<Real> sz;
  std::vector<Real> norm;
  std::vector<Real> overlap;

  std::size_t size() const { return times.size(); }
  const std::vector<Real>& position(Axis axis) const { return axis == Axis::x ? x_mean : z_mean; }
  /// Throws InvalidInput when the columns differ in length or a norm entry
  /// strays more than 1e-8 from 1.
  void check() const;
};

/// Header `t,x_mean,z_mean,sx,sy,sz,norm,overlap`, one row per sample.
void write_csv(std::ostream& os, const TimeSeries& series);

struct ZbSummary {
  Real amplitude = 0.0;
  Real omega = 0.0;
  /// +inf when the fit resolves no decay.
  Real tau = std::numeric_limits<Real>::infinity();
  Real phase = 0.0;
  Real offset = 0.0;
  Vec2 drift_velocity = Vec2::Zero();
  Axis axis = Axis::x;
  Real fit_residual = 0.0;
  int evaluations = 0;
};

/// Flat `key = value` block.
void write_summary(std::ostream& os, const ZbSummary& summary, const std::string& prefix = "");

struct FitOptions {
  /// Upper end of the spectral peak search; keeps drive micromotion out.
  Real omega_max = std::numeric_limits<Real>::infinity();
  int max_evaluations = 4000;
};

/// Least-squares fit of c0 + c1 t + a exp(-t/tau) cos(omega t + phi) to the
/// chosen position component.
ZbSummary fit_zb(const TimeSeries& series, Axis axis, const FitOptions& options = {});

}  // namespace zitterlab
