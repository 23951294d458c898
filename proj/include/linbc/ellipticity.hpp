#pragma once

// Shapiro-Lopatinskij test for the conformal boundary family. Exponentially
// decaying half-space solutions c e^{i xi.x} e^{-|xi| s} that satisfy (a)-(c)
// form a one-parameter family; the scalar condition (d) then reduces to
//   |xi| (2 C2 + tr S - S(xi^, xi^)) tr(c_SigmaSigma) = 0.

#include <optional>
#include <vector>

#include "linbc/boundary.hpp"

namespace linbc {

struct SLVerdict {
  bool elliptic = true;
  std::optional<Vec3> witness;  // unit direction where the reduced coefficient vanishes
  double margin = 0.0;          // min over unit xi of |2 C2 + tr S - S(xi, xi)|
};

/// 2 C2 |xi| + S^{ij} (|xi| delta_ij - xi_i xi_j / |xi|). Throws DomainError for xi = 0.
double sl_reduced_coefficient(double c2, const Mat3& s, const Vec3& xi);

/// Exact verdict from the eigenvalues s1 <= s2 <= s3 of S: elliptic iff 0 is
/// outside [2 C2 + tr S - s3, 2 C2 + tr S - s1].
SLVerdict sl_check(double c2, const Mat3& s);

struct HalfSpaceKernel {
  int dimension = 0;
  std::vector<Eigen::Matrix<cplx, 10, 1>> basis;  // coefficients c in tensor component order
  Eigen::Matrix<cplx, 10, 10> system;             // the boundary conditions acting on c
  Eigen::VectorXd singular_values;
};

/// Null space of the 10 boundary conditions on the flat half-space, evaluated
/// on decaying exponentials. The coefficients of `side` are used; the spec is
/// not validated so that degenerate scalar conditions can be studied.
/// Singular values below kHalfSpaceTolerance * sigma_max count as zero.
inline constexpr double kHalfSpaceTolerance = 1e-10;
HalfSpaceKernel half_space_kernel(const BoundaryConditionSpec& spec, const Vec3& xi,
                                  Side side = Side::Lower);

struct SLScanRow {
  double c2 = 0.0;
  Mat3 s = Mat3::Zero();
  SLVerdict verdict;
};

/// One verdict per (c2, S) pair; C2 varies slowest. Row order is the grid order
/// for any number of jobs.
std::vector<SLScanRow> sl_scan(const std::vector<double>& c2_values,
                               const std::vector<Mat3>& s_family, int jobs = 1);

/// n evenly spaced values from lo to hi (n = 1 gives lo, n = 0 nothing).
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace linbc
