#include "zitterlab/observables.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <sstream>

namespace zitterlab {

namespace {

// Parameters: c0, c1, a, gamma, omega, phi.
struct DampedCosine {
  using Scalar = Real;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const Eigen::VectorXd& t;
  const Eigen::VectorXd& y;

  int inputs() const { return 6; }
  int values() const { return static_cast<int>(t.size()); }

  static Real model(const Eigen::VectorXd& q, Real t) {
    return q[0] + q[1] * t + q[2] * std::exp(-q[3] * t) * std::cos(q[4] * t + q[5]);
  }

  int operator()(const Eigen::VectorXd& q, Eigen::VectorXd& f) const {
    for (Eigen::Index i = 0; i < t.size(); ++i) f[i] = model(q, t[i]) - y[i];
    return 0;
  }

  int df(const Eigen::VectorXd& q, Eigen::MatrixXd& j) const {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const Real e = std::exp(-q[3] * t[i]);
      const Real c = std::cos(q[4] * t[i] + q[5]);
      const Real s = std::sin(q[4] * t[i] + q[5]);
      j(i, 0) = 1.0;
      j(i, 1) = t[i];
      j(i, 2) = e * c;
      j(i, 3) = -t[i] * q[2] * e * c;
      j(i, 4) = -t[i] * q[2] * e * s;
      j(i, 5) = -q[2] * e * s;
    }
    return 0;
  }
};

Real rms(const Eigen::VectorXd& v) { return std::sqrt(v.squaredNorm() / Real(v.size())); }

Complex projection(const Eigen::VectorXd& t, const Eigen::VectorXd& r, Real omega, Eigen::Index begin,
                   Eigen::Index end) {
  Complex sum = 0.0;
  for (Eigen::Index i = begin; i < end; ++i) sum += r[i] * std::polar(1.0, -omega * t[i]);
  return sum;
}

}  // namespace

ZbSummary fit_zb(const TimeSeries& series, Axis axis, const FitOptions& options) {
  series.check();
  const std::size_t n = series.size();
  if (n < 16) throw InvalidInput("fit_zb: need at least 16 samples");
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(series.times.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(series.position(axis).data(), static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) {
    if (!(series.times[i] > series.times[i - 1])) throw InvalidInput("fit_zb: times must increase strictly");
  }
  const Real span = t[t.size() - 1] - t[0];
  const Real sample_dt = span / Real(n - 1);

  // Linear trend first.
  Eigen::MatrixXd design(t.size(), 2);
  design.col(0).setOnes();
  design.col(1) = t;
  const Eigen::Vector2d line = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd r = y - design * line;
  const Real scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (rms(r) <= 1e-10 * scale) throw NoOscillationError("fit_zb: no oscillation left after removing the linear trend");

  // Periodogram of the detrended signal, oversampled 8x.
  const Real omega_lo = 1.5 * 2.0 * kPi / span;
  const Real omega_hi = std::min(kPi / sample_dt, options.omega_max);
  if (!(omega_hi > omega_lo)) throw FitError("fit_zb: empty frequency search range");
  const Real d_omega = 2.0 * kPi / span / 8.0;
  std::vector<Real> power;
  for (Real w = omega_lo; w <= omega_hi; w += d_omega) power.push_back(std::norm(projection(t, r, w, 0, t.size())));
  if (power.size() < 3) throw FitError("fit_zb: frequency search range too narrow");
  const auto peak_it = std::max_element(power.begin(), power.end());
  const std::size_t k = static_cast<std::size_t>(peak_it - power.begin());
  std::vector<Real> sorted = power;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const Real floor = sorted[sorted.size() / 2];
  if (*peak_it < 3.0 * floor) throw NoOscillationError("fit_zb: no spectral peak stands out of the noise floor");
  Real omega0 = omega_lo + Real(k) * d_omega;
  if (k > 0 && k + 1 < power.size()) {
    const Real a = power[k - 1];
    const Real b = power[k];
    const Real c = power[k + 1];
    const Real denom = a - 2.0 * b + c;
    if (denom < 0.0) omega0 += 0.5 * (a - c) / denom * d_omega;
  }
  const Real periods = span * omega0 / (2.0 * kPi);
  if (periods < 3.0) {
    std::ostringstream os;
    os << "fit_zb: the series spans only " << periods << " periods (need 3)";
    throw FitError(os.str());
  }

  // Envelope per whole period: log-linear fit gives the initial decay and amplitude.
  const int whole = static_cast<int>(periods);
  const Real period = 2.0 * kPi / omega0;
  std::vector<Real> centres;
  std::vector<Real> logs;
  for (int m = 0; m < whole; ++m) {
    const Real lo = t[0] + m * period;
    const Real hi = lo + period;
    Eigen::Index b = 0;
    while (b < t.size() && t[b] < lo) ++b;
    Eigen::Index e = b;
    while (e < t.size() && t[e] < hi) ++e;
    if (e - b < 2) continue;
    const Real amp = 2.0 * std::abs(projection(t, r, omega0, b, e)) / Real(e - b);
    if (amp > 0.0) {
      centres.push_back(0.5 * (t[b] + t[e - 1]));
      logs.push_back(std::log(amp));
    }
  }
  Real gamma0 = 0.0;
  Real a0 = std::sqrt(2.0) * rms(r);
  if (centres.size() >= 2) {
    Eigen::MatrixXd ld(static_cast<Eigen::Index>(centres.size()), 2);
    Eigen::VectorXd lv(static_cast<Eigen::Index>(centres.size()));
    for (std::size_t i = 0; i < centres.size(); ++i) {
      ld(static_cast<Eigen::Index>(i), 0) = 1.0;
      ld(static_cast<Eigen::Index>(i), 1) = centres[i] - t[0];
      lv[static_cast<Eigen::Index>(i)] = logs[i];
    }
    const Eigen::Vector2d fit = ld.colPivHouseholderQr().solve(lv);
    gamma0 = -fit[1];
    a0 = std::exp(fit[0]);
  }
  // Shift the envelope reference from t[0] to t = 0.
  a0 *= std::exp(gamma0 * t[0]);
  Complex weighted = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    weighted += r[i] * std::exp(-gamma0 * t[i]) * std::polar(1.0, -omega0 * t[i]);
  }
  const Real phi0 = std::arg(weighted);

  Eigen::VectorXd q(6);
  q << line[0], line[1], a0, gamma0, omega0, phi0;
  DampedCosine functor{t, y};
  Eigen::LevenbergMarquardt<DampedCosine> lm(functor);
  lm.parameters.maxfev = options.max_evaluations;
  const auto status = lm.minimize(q);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation) {
    std::ostringstream os;
    os << "fit_zb: Levenberg-Marquardt did not converge (status " << static_cast<int>(status) << ")";
    throw FitError(os.str());
  }
  if (!q.allFinite()) throw FitError("fit_zb: non-finite fit parameters");

  ZbSummary s;
  s.axis = axis;
  s.evaluations = static_cast<int>(lm.nfev);
  s.offset = q[0];
  s.amplitude = q[2];
  s.omega = q[4];
  s.phase = q[5];
  if (s.omega < 0.0) {
    s.omega = -s.omega;
    s.phase = -s.phase;
  }
  if (s.amplitude < 0.0) {
    s.amplitude = -s.amplitude;
    s.phase += kPi;
  }
  s.phase = std::remainder(s.phase, 2.0 * kPi);
  s.tau = q[3] > 0.0 ? 1.0 / q[3] : std::numeric_limits<Real>::infinity();
  // The other component only gets a straight-line slope.
  const Axis other = axis == Axis::x ? Axis::z : Axis::x;
  const Eigen::VectorXd y_other =
      Eigen::Map<const Eigen::VectorXd>(series.position(other).data(), static_cast<Eigen::Index>(n));
  const Eigen::Vector2d line_other = design.colPivHouseholderQr().solve(y_other);
  s.drift_velocity(axis == Axis::x ? 0 : 1) = q[1];
  s.drift_velocity(axis == Axis::x ? 1 : 0) = line_other[1];

  Eigen::VectorXd resid(t.size());
  functor(q, resid);
  const Real base = rms(r);
  s.fit_residual = base > 0.0 ? std::clamp(rms(resid) / base, 0.0, 1.0) : 0.0;
  return s;
}

}  // namespace zitterlab
