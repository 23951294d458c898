#pragma once

// Mean curvature of the slice s = s0 under g^ = g + lambda h, exactly and to
// first order in lambda. Coordinates are (x^0 = s, x^1, x^2, x^3) with the
// background g = ds^2 + a(s)^2 delta.

#include <vector>

#include "linbc/geometry.hpp"

namespace linbc {

using Mat4 = Eigen::Matrix4d;

/// h_{mu nu} at the evaluation point and its coordinate derivatives
/// d[rho](mu, nu) = d_rho h_{mu nu}.
struct Perturbation {
  Mat4 h = Mat4::Zero();
  std::array<Mat4, 4> d{Mat4::Zero(), Mat4::Zero(), Mat4::Zero(), Mat4::Zero()};

  double h00() const { return h(0, 0); }
  Vec3 h0i() const { return h.block<1, 3>(0, 1).transpose(); }
  Mat3 hij() const { return h.block<3, 3>(1, 1); }

  /// Throws InvalidParameterError if h or any derivative is not symmetric.
  void validate() const;

  /// Constant perturbation assembled from its blocks.
  static Perturbation from_blocks(double h00, const Vec3& h0i, const Mat3& hij);
};

/// tr_{gamma^}(k^) for the slice of g + lambda h through s0, with
/// k^_ij = Gamma^0_ij (g^{00})^{-1/2} and the trace taken with the inverse of the
/// induced metric g^_ij. Throws DegenerateMetricError if g^ is singular or
/// g^{00} <= 0.
double mean_curvature_exact(const GeometrySpec& geom, const Perturbation& pert, double lambda,
                            double s0);

/// nabla^i h_i0 - (1/2) d_s(gamma^{ij} h_ij) - h^{ij} k_ij + (1/2) tr k h_00, the
/// last term only when include_h00_term is set.
double linearised_mean_curvature(const GeometrySpec& geom, const Perturbation& pert, double s0,
                                 bool include_h00_term = true);

struct LinearisationReport {
  double formula_value = 0.0;
  std::vector<std::pair<double, double>> fd_values;  // (lambda, difference quotient)
  double richardson_limit = 0.0;
  double discrepancy = 0.0;
  double dropped_term_value = 0.0;  // (1/2) tr k h_00
};

/// Difference quotients (H(lambda) - H(0)) / lambda, extrapolated to lambda = 0
/// by polynomial (Neville) extrapolation through all supplied points.
LinearisationReport fd_linearisation_check(const GeometrySpec& geom, const Perturbation& pert,
                                           double s0, const std::vector<double>& lambdas,
                                           bool include_h00_term = true);

/// h_ij - (1/3)(gamma^{kl} h_kl) gamma_ij at s0.
Mat3 linearised_conformal_class(const Mat3& hij, const GeometrySpec& geom, double s0);

}  // namespace linbc
