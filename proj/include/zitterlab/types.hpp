#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace zitterlab {

using Real = double;
using Complex = std::complex<Real>;

using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Spinor = Eigen::Matrix<Complex, 2, 1>;
using Mat2c = Eigen::Matrix<Complex, 2, 2>;

/// Per-mode amplitudes over a momentum grid, indexed (ix, iz).
using ModeArray = Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using RealArray = Eigen::Array<Real, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr Real kPi = 3.141592653589793238462643383279502884;

namespace pauli {

template <typename Scalar = Real>
Eigen::Matrix<std::complex<Scalar>, 2, 2> identity() {
  return Eigen::Matrix<std::complex<Scalar>, 2, 2>::Identity();
}

template <typename Scalar = Real>
Eigen::Matrix<std::complex<Scalar>, 2, 2> x() {
  Eigen::Matrix<std::complex<Scalar>, 2, 2> m;
  m << 0, 1, 1, 0;
  return m;
}

template <typename Scalar = Real>
Eigen::Matrix<std::complex<Scalar>, 2, 2> y() {
  using C = std::complex<Scalar>;
  Eigen::Matrix<C, 2, 2> m;
  m << C(0), C(0, -1), C(0, 1), C(0);
  return m;
}

template <typename Scalar = Real>
Eigen::Matrix<std::complex<Scalar>, 2, 2> z() {
  Eigen::Matrix<std::complex<Scalar>, 2, 2> m;
  m << 1, 0, 0, -1;
  return m;
}

}  // namespace pauli

enum class Axis { x, z };

inline const char* to_string(Axis axis) { return axis == Axis::x ? "x" : "z"; }

/// Rejected input: violated preconditions on user-supplied values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejected configuration (stepper constraints, scenario keys, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Wavefunction weight sits too close to a grid or window edge.
class BoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The drive sits on a CDT point where a prediction is undefined.
class CdtPointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NoOscillationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace zitterlab
