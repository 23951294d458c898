#pragma once

// Gauge parameters omega with omega = 0 on the boundary and D1 omega = 0 in a
// collar of each end, and checks that u = K omega satisfies the boundary
// conditions. omega'(s) and omega''(s) are carried analytically.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "linbc/boundary.hpp"

namespace linbc {

struct GaugeField {
  ModeIndex mode;
  ModeTensor1 omega;
  ModeTensor1 d_omega;
  ModeTensor1 dd_omega;
  double collar_width = 0.0;  // 0 for fields built from an arbitrary profile
  std::string construction;

  explicit GaugeField(int points) : omega(points), d_omega(points), dd_omega(points) {}
};

using CollarGaugeField = GaugeField;

/// Per component c: amplitudes[c] * sinh(|xi| (s -+ T)) near s = +-T (the linear
/// profile s -+ T when xi = 0), blended by a quintic smoothstep equal to 1 on
/// the collar [T - w, T] (and its mirror) and to 0 below T - 2w, into the
/// interior profile interior[c] * cos(pi s / 2T). Requires 0 < w < T/2.
CollarGaugeField make_collar_gauge_field(const ModeIndex& mode, const GeometrySpec& geom,
                                         const Grid1D& grid,
                                         const std::array<cplx, 4>& amplitudes,
                                         double collar_width,
                                         const std::array<cplx, 4>& interior = {});

/// Default collar width T/4.
CollarGaugeField make_collar_gauge_field(const ModeIndex& mode, const GeometrySpec& geom,
                                         const Grid1D& grid,
                                         const std::array<cplx, 4>& amplitudes);

struct ScalarProfile {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> ddf;
};

/// omega = amplitude * profile(s) in one component, zero elsewhere.
GaugeField make_profile_gauge_field(const ModeIndex& mode, const Grid1D& grid, int component,
                                    const ScalarProfile& profile, cplx amplitude = 1.0);

/// omega_s = (s^2 - T^2)^2: vanishes on the boundary but D1 omega != 0 there.
GaugeField make_quartic_gauge_field(const ModeIndex& mode, const Grid1D& grid);

/// Collar field with amplitudes and interior coefficients drawn from the unit
/// complex box and a width in [T/8, T/4].
CollarGaugeField random_collar_field(const ModeIndex& mode, const GeometrySpec& geom,
                                     const Grid1D& grid, std::mt19937_64& rng);

/// GeneralConformal spec with independent per-side C1, C2, V, S drawn from
/// [-2, 2]; redrawn until validate_spec accepts it.
BoundaryConditionSpec random_general_spec(const GeometrySpec& geom, std::mt19937_64& rng);

/// u = K omega with the analytic s-derivative of omega.
ModeTensor2 gauge_tensor(const GaugeField& field);

/// Max over both sides of the sup-norm of boundary_residual(K omega).
double gauge_invariance_residual(const GaugeField& field, const BoundaryConditionSpec& spec,
                                 const GeometrySpec& geom, const Grid1D& grid);

struct RelationsReport {
  // differences[side][r], r = 0..7 in the order
  // u_ss, u_sSigma, u_SigmaSigma, tr u_SigmaSigma,
  // d_s u_ss, d_s u_sSigma, d_s u_SigmaSigma, d_s tr u_SigmaSigma.
  std::array<std::array<double, 8>, 2> differences{};
  double max_difference() const;
};

/// Left/right differences of the boundary relations between u = K omega and
/// omega (flat background). s-derivatives of u use the boundary stencil.
RelationsReport relations_check(const GaugeField& field, const GeometrySpec& geom,
                                const Grid1D& grid);

struct Eq2Report {
  // Per side: residual (a), residuals (b), and the D1 omega expressions
  // -omega_s'' and -omega_Sigma'' they should equal up to the factor 1/2.
  std::array<cplx, 2> res_a{};
  std::array<Eigen::Vector3cd, 2> res_b{Eigen::Vector3cd::Zero(), Eigen::Vector3cd::Zero()};
  std::array<cplx, 2> eq2_s{};
  std::array<Eigen::Vector3cd, 2> eq2_sigma{Eigen::Vector3cd::Zero(), Eigen::Vector3cd::Zero()};
  /// max |res_a + eq2_s / 2|, |res_b + eq2_sigma / 2| over both sides.
  double max_mismatch = 0.0;
};

Eq2Report eq2_check(const GaugeField& field, const GeometrySpec& geom, const Grid1D& grid);

}  // namespace linbc
