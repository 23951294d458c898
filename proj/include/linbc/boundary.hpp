#pragma once

// Boundary conditions at s = +-T. The conformal family consists of
//   (a) d_s u_ss - delta_Sigma u_sSigma - tr k u_ss + <k, u_SigmaSigma> = 0
//   (b) d_s u_sSigma - (1/2) delta_Sigma u_SigmaSigma - tr k u_sSigma = 0
//   (c) traceless part of u_SigmaSigma = 0 (5 entries)
//   (d) C1 (u_ss + tr/3) + C2 (d_s tr - d_s u_ss - (4/3) tr tr k)
//       + <V, d_Sigma(u_ss + tr/3)>
//       + <S, d_s u_SigmaSigma - 2 d_Sigma u_sSigma - gamma (d_s u_ss + (2/3) tr tr k)> = 0
// with tr = tr_gamma(u_SigmaSigma). Linearised Anderson conditions are the
// member C1 = 3 tr k, C2 = 1, V = S = 0.

#include <array>
#include <string>
#include <vector>

#include "linbc/geometry.hpp"
#include "linbc/tensor_ops.hpp"

namespace linbc {

enum class BoundaryKind { Dirichlet, Anderson, GeneralConformal };

std::string to_string(BoundaryKind kind);

/// Coefficients of the scalar condition (d) on one side. V and S carry lower
/// coordinate indices.
struct ConformalCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  Vec3 v = Vec3::Zero();
  Mat3 s = Mat3::Zero();
};

class BoundaryConditionSpec {
 public:
  static BoundaryConditionSpec dirichlet();
  static BoundaryConditionSpec anderson();
  static BoundaryConditionSpec general(const ConformalCoefficients& both_sides);
  static BoundaryConditionSpec general(const ConformalCoefficients& lower,
                                       const ConformalCoefficients& upper);

  BoundaryKind kind() const { return kind_; }
  /// Stored coefficients (only meaningful for GeneralConformal).
  const ConformalCoefficients& coefficients(Side side) const {
    return coefficients_[side_index(side)];
  }

 private:
  BoundaryConditionSpec(BoundaryKind kind, std::array<ConformalCoefficients, 2> coefficients);

  BoundaryKind kind_;
  std::array<ConformalCoefficients, 2> coefficients_;
};

/// Coefficients of (d) actually used on `side`: Anderson expands to
/// C1 = 3 tr k, C2 = 1, V = S = 0. Throws for Dirichlet.
ConformalCoefficients effective_coefficients(const BoundaryConditionSpec& spec,
                                             const GeometrySpec& geom, Side side);

/// Frobenius distance from S to span(gamma) at the given side.
double proportionality_deviation(const Mat3& s, const Mat3& gamma);

struct SpecDiagnostics {
  bool ok = true;
  std::array<double, 2> deviation{0.0, 0.0};
  std::vector<std::string> messages;
};

SpecDiagnostics validate_spec(const BoundaryConditionSpec& spec, const GeometrySpec& geom);

/// Residuals at one side. For the conformal kinds `values` holds
/// [a, b1, b2, b3, c11, c22, c12, c13, c23, d]; for Dirichlet it holds the ten
/// components of u in tensor order.
struct BoundaryResidual {
  Side side = Side::Lower;
  BoundaryKind kind = BoundaryKind::Dirichlet;
  Eigen::Matrix<cplx, 10, 1> values = Eigen::Matrix<cplx, 10, 1>::Zero();

  cplx a() const { return values[0]; }
  cplx b(int i) const { return values[1 + i]; }
  /// Traceless entries in the order 11, 22, 12, 13, 23.
  cplx c(int k) const { return values[4 + k]; }
  cplx d() const { return values[9]; }
  /// Traceless symmetric matrix rebuilt from res_c (33 entry = -11 - 22).
  Eigen::Matrix3cd c_matrix() const;
  double sup_norm() const { return values.cwiseAbs().maxCoeff(); }
};

/// Evaluates the conditions on a sampled field. k-terms come from slice_data,
/// so warped backgrounds are supported. Throws InvalidSpecError for invalid
/// GeneralConformal coefficients.
BoundaryResidual boundary_residual(const ModeTensor2& u, const BoundaryConditionSpec& spec,
                                   const GeometrySpec& geom, const ModeIndex& mode,
                                   const Grid1D& grid, Side side);

/// Discrete boundary rows for one side, stored on the nodes they touch.
/// Column (c * width + k) multiplies component c at node `nodes[k]`.
struct ConstraintBlock {
  Side side = Side::Lower;
  std::vector<int> nodes;
  Eigen::MatrixXcd rows;  // 10 x (10 * nodes.size())

  /// Same rows as a dense 10 x (10 M) matrix over the flattened unknowns.
  Eigen::MatrixXcd to_dense(int points) const;
  /// Apply to a flattened field.
  Eigen::Matrix<cplx, 10, 1> apply(const ModeTensor2& u) const;
};

/// Rows reproducing boundary_residual (same order as BoundaryResidual::values).
/// Throws DegenerateSpecError when a side has rank < 10.
std::array<ConstraintBlock, 2> constraint_rows(const BoundaryConditionSpec& spec,
                                               const GeometrySpec& geom, const ModeIndex& mode,
                                               const Grid1D& grid);

/// Numerical rank of a block, singular values below rel_tol * sigma_max count as zero.
int block_rank(const Eigen::MatrixXcd& rows, double rel_tol = 1e-10);

}  // namespace linbc
