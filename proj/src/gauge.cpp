#include "linbc/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace linbc {

namespace {

struct Jet {
  double f = 0.0, df = 0.0, ddf = 0.0;
};

Jet operator*(const Jet& a, const Jet& b) {
  return {a.f * b.f, a.df * b.f + a.f * b.df, a.ddf * b.f + 2.0 * a.df * b.df + a.f * b.ddf};
}

Jet operator+(const Jet& a, const Jet& b) { return {a.f + b.f, a.df + b.df, a.ddf + b.ddf}; }

// 6x^5 - 15x^4 + 10x^3 on [0, 1], clamped outside; x = (s - offset) / width * sign.
Jet smoothstep(double s, double offset, double width, double sign) {
  const double x = sign * (s - offset) / width;
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  if (x >= 1.0) return {1.0, 0.0, 0.0};
  const double q = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
  const double dq = 30.0 * x * x * (1.0 - x) * (1.0 - x);
  const double ddq = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
  return {q, dq * sign / width, ddq / (width * width)};
}

// sinh(kappa (s - end)) or the linear limit (s - end).
Jet collar_profile(double s, double end, double kappa) {
  if (kappa == 0.0) return {s - end, 1.0, 0.0};
  const double x = kappa * (s - end);
  return {std::sinh(x), kappa * std::cosh(x), kappa * kappa * std::sinh(x)};
}

void set_jet(GaugeField& field, int c, int j, cplx scale, const Jet& jet) {
  field.omega(c, j) += scale * jet.f;
  field.d_omega(c, j) += scale * jet.df;
  field.dd_omega(c, j) += scale * jet.ddf;
}

}  // namespace

CollarGaugeField make_collar_gauge_field(const ModeIndex& mode, const GeometrySpec& geom,
                                         const Grid1D& grid,
                                         const std::array<cplx, 4>& amplitudes,
                                         double collar_width,
                                         const std::array<cplx, 4>& interior) {
  const double T = geom.half_width();
  if (std::abs(grid.half_width() - T) > 1e-12 * T) {
    throw InvalidParameterError("grid and geometry disagree on T");
  }
  if (!(collar_width > 0.0) || !(collar_width < 0.5 * T)) {
    throw InvalidParameterError("collar width must lie in (0, T/2)");
  }
  const double kappa = mode.xi_norm();
  const double w = collar_width;
  CollarGaugeField field(grid.size());
  field.mode = mode;
  field.collar_width = w;
  std::ostringstream desc;
  desc << (kappa == 0.0 ? "linear" : "sinh") << " collars of width " << w
       << ", cos(pi s/2T) interior";
  field.construction = desc.str();

  for (int j = 0; j < grid.size(); ++j) {
    const double s = grid.s(j);
    const Jet upper = smoothstep(s, T - 2.0 * w, w, 1.0);
    const Jet lower = smoothstep(s, -(T - 2.0 * w), w, -1.0);
    const Jet blend_in = {1.0 - upper.f - lower.f, -upper.df - lower.df, -upper.ddf - lower.ddf};
    const double arg = std::numbers::pi * s / (2.0 * T);
    const double rate = std::numbers::pi / (2.0 * T);
    const Jet bump = {std::cos(arg), -rate * std::sin(arg), -rate * rate * std::cos(arg)};
    const Jet collars =
        upper * collar_profile(s, T, kappa) + lower * collar_profile(s, -T, kappa);
    const Jet inner = blend_in * bump;
    for (int c = 0; c < kTensor1Components; ++c) {
      set_jet(field, c, j, amplitudes[c], collars);
      set_jet(field, c, j, interior[c], inner);
    }
  }
  // Exact zeros at the ends (sinh(0) and cos(pi/2) already give ~1e-17).
  for (int c = 0; c < kTensor1Components; ++c) {
    field.omega(c, 0) = 0.0;
    field.omega(c, grid.size() - 1) = 0.0;
  }
  return field;
}

CollarGaugeField make_collar_gauge_field(const ModeIndex& mode, const GeometrySpec& geom,
                                         const Grid1D& grid,
                                         const std::array<cplx, 4>& amplitudes) {
  return make_collar_gauge_field(mode, geom, grid, amplitudes, 0.25 * geom.half_width(),
                                 amplitudes);
}

CollarGaugeField random_collar_field(const ModeIndex& mode, const GeometrySpec& geom,
                                     const Grid1D& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::array<cplx, 4> amplitudes, interior;
  for (int c = 0; c < 4; ++c) {
    amplitudes[c] = {unit(rng), unit(rng)};
    interior[c] = {unit(rng), unit(rng)};
  }
  const double T = geom.half_width();
  const double width = T * (0.1875 + 0.0625 * unit(rng));
  return make_collar_gauge_field(mode, geom, grid, amplitudes, width, interior);
}

BoundaryConditionSpec random_general_spec(const GeometrySpec& geom, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  auto draw = [&] {
    ConformalCoefficients c;
    c.c1 = coef(rng);
    c.c2 = coef(rng);
    for (int i = 0; i < 3; ++i) c.v[i] = coef(rng);
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) c.s(i, j) = c.s(j, i) = coef(rng);
    }
    return c;
  };
  for (;;) {
    const ConformalCoefficients lower = draw();
    const ConformalCoefficients upper = draw();
    BoundaryConditionSpec spec = BoundaryConditionSpec::general(lower, upper);
    if (validate_spec(spec, geom).ok) return spec;
  }
}

GaugeField make_profile_gauge_field(const ModeIndex& mode, const Grid1D& grid, int component,
                                    const ScalarProfile& profile, cplx amplitude) {
  if (component < 0 || component >= kTensor1Components) {
    throw InvalidParameterError("covector component out of range");
  }
  GaugeField field(grid.size());
  field.mode = mode;
  field.construction = "explicit profile";
  for (int j = 0; j < grid.size(); ++j) {
    const double s = grid.s(j);
    set_jet(field, component, j, amplitude, {profile.f(s), profile.df(s), profile.ddf(s)});
  }
  return field;
}

GaugeField make_quartic_gauge_field(const ModeIndex& mode, const Grid1D& grid) {
  const double T2 = grid.half_width() * grid.half_width();
  ScalarProfile p{[T2](double s) { return (s * s - T2) * (s * s - T2); },
                  [T2](double s) { return 4.0 * s * (s * s - T2); },
                  [T2](double s) { return 12.0 * s * s - 4.0 * T2; }};
  GaugeField field = make_profile_gauge_field(mode, grid, 0, p);
  field.construction = "omega_s = (s^2 - T^2)^2";
  return field;
}

ModeTensor2 gauge_tensor(const GaugeField& field) {
  return gauge_potential(field.omega, field.d_omega, field.mode);
}

double gauge_invariance_residual(const GaugeField& field, const BoundaryConditionSpec& spec,
                                 const GeometrySpec& geom, const Grid1D& grid) {
  const ModeTensor2 u = gauge_tensor(field);
  double worst = 0.0;
  for (Side side : {Side::Lower, Side::Upper}) {
    worst = std::max(worst, boundary_residual(u, spec, geom, field.mode, grid, side).sup_norm());
  }
  return worst;
}

namespace {

cplx stencil(const ModeTensor2& u, int comp, const Grid1D& grid, Side side) {
  cplx acc = 0.0;
  for (int k = 0; k < fd::kEndStencilWidth; ++k) {
    acc += fd::end_stencil_weight(side, k, grid.spacing()) *
           u(comp, fd::end_stencil_node(side, k, grid.size()));
  }
  return acc;
}

void require_flat(const GeometrySpec& geom, const char* what) {
  if (!geom.is_flat()) throw InvalidParameterError(std::string(what) + " needs flat geometry");
}

}  // namespace

double RelationsReport::max_difference() const {
  double out = 0.0;
  for (const auto& side : differences) {
    for (double v : side) out = std::max(out, v);
  }
  return out;
}

RelationsReport relations_check(const GaugeField& field, const GeometrySpec& geom,
                                const Grid1D& grid) {
  require_flat(geom, "relations_check");
  const ModeTensor2 u = gauge_tensor(field);
  const Vec3& xi = field.mode.xi;
  RelationsReport out;
  for (Side side : {Side::Lower, Side::Upper}) {
    const int b = grid.boundary_node(side);
    auto& diff = out.differences[side_index(side)];
    const cplx ws1 = field.d_omega(0, b);
    const cplx ws2 = field.dd_omega(0, b);
    Eigen::Vector3cd wsig1, wsig2;
    for (int i = 0; i < 3; ++i) {
      wsig1[i] = field.d_omega(1 + i, b);
      wsig2[i] = field.dd_omega(1 + i, b);
    }
    // d_s delta_Sigma omega_Sigma
    const cplx ds_div = -kI * (xi.cast<cplx>().transpose() * wsig1)(0);
    const cplx tr = u(k11, b) + u(k22, b) + u(k33, b);
    const cplx ds_tr = stencil(u, k11, grid, side) + stencil(u, k22, grid, side) +
                       stencil(u, k33, grid, side);

    diff[0] = std::abs(u(kSS, b) - 0.5 * ws1);
    diff[3] = std::abs(tr + 1.5 * ws1);
    diff[4] = std::abs(stencil(u, kSS, grid, side) - 0.5 * (ws2 + ds_div));
    diff[7] = std::abs(ds_tr - (-1.5 * ws2 + 0.5 * ds_div));
    for (int i = 0; i < 3; ++i) {
      diff[1] = std::max(diff[1], std::abs(u(s_component(i), b) - 0.5 * wsig1[i]));
      diff[5] = std::max(diff[5], std::abs(stencil(u, s_component(i), grid, side) -
                                           0.5 * (wsig2[i] + kI * xi[i] * ws1)));
      for (int j = 0; j < 3; ++j) {
        const double delta = i == j ? 1.0 : 0.0;
        const int c = sigma_component(i, j);
        diff[2] = std::max(diff[2], std::abs(u(c, b) + 0.5 * delta * ws1));
        const cplx rhs =
            0.5 * kI * (xi[i] * wsig1[j] + xi[j] * wsig1[i]) - 0.5 * delta * (ws2 - ds_div);
        diff[6] = std::max(diff[6], std::abs(stencil(u, c, grid, side) - rhs));
      }
    }
  }
  return out;
}

Eq2Report eq2_check(const GaugeField& field, const GeometrySpec& geom, const Grid1D& grid) {
  require_flat(geom, "eq2_check");
  const ModeTensor2 u = gauge_tensor(field);
  const BoundaryConditionSpec spec = BoundaryConditionSpec::anderson();
  Eq2Report out;
  for (Side side : {Side::Lower, Side::Upper}) {
    const int idx = side_index(side);
    const int b = grid.boundary_node(side);
    const BoundaryResidual res = boundary_residual(u, spec, geom, field.mode, grid, side);
    out.res_a[idx] = res.a();
    out.eq2_s[idx] = -field.dd_omega(0, b);
    out.max_mismatch = std::max(out.max_mismatch, std::abs(res.a() + 0.5 * out.eq2_s[idx]));
    for (int i = 0; i < 3; ++i) {
      out.res_b[idx][i] = res.b(i);
      out.eq2_sigma[idx][i] = -field.dd_omega(1 + i, b);
      out.max_mismatch =
          std::max(out.max_mismatch, std::abs(res.b(i) + 0.5 * out.eq2_sigma[idx][i]));
    }
  }
  return out;
}

}  // namespace linbc
