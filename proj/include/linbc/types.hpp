#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace linbc {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Profile = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// The two components of the boundary: s = -T and s = +T.
enum class Side { Lower = 0, Upper = 1 };

inline constexpr int side_index(Side side) { return static_cast<int>(side); }

inline std::string_view to_string(Side side) {
  return side == Side::Lower ? "-T" : "+T";
}

class InvalidParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A boundary specification that violates its own invariants.
class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Boundary rows that do not have full rank on one side.
class DegenerateSpecError : public std::runtime_error {
 public:
  DegenerateSpecError(const std::string& what, Side side)
      : std::runtime_error(what), side_(side) {}
  Side side() const { return side_; }

 private:
  Side side_;
};

class DegenerateMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace linbc
