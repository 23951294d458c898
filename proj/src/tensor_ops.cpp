#include "linbc/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace linbc {

ModeIndex make_mode(const GeometrySpec& geom, const std::array<int, 3>& n) {
  ModeIndex mode;
  mode.n = n;
  for (int i = 0; i < 3; ++i) {
    mode.xi[i] = 2.0 * std::numbers::pi * n[i] / geom.periods()[i];
  }
  return mode;
}

Grid1D::Grid1D(double half_width, int points)
    : half_width_(half_width), points_(points), spacing_(0.0) {
  if (!(half_width > 0.0)) throw InvalidParameterError("grid half-width must be positive");
  if (points < kMinPoints) {
    throw InvalidParameterError("grid needs at least " + std::to_string(kMinPoints) + " points");
  }
  spacing_ = 2.0 * half_width / (points - 1);
  values_ = Eigen::VectorXd::LinSpaced(points, -half_width, half_width);
  values_[0] = -half_width;
  values_[points - 1] = half_width;
}

namespace fd {

double end_stencil_weight(Side side, int k, double h) {
  const double w = kEndFirstDerivative[k] / h;
  return side == Side::Lower ? w : -w;
}

int end_stencil_node(Side side, int k, int points) {
  return side == Side::Lower ? k : points - 1 - k;
}

Profile first_derivative(const Profile& f, double h) {
  const Eigen::Index M = f.size();
  if (M < Grid1D::kMinPoints) throw ShapeError("profile too short for the stencils");
  Profile out(M);
  for (Eigen::Index j = 1; j + 1 < M; ++j) out[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
  cplx lo = 0.0, hi = 0.0;
  for (int k = 0; k < kEndStencilWidth; ++k) {
    lo += end_stencil_weight(Side::Lower, k, h) * f[k];
    hi += end_stencil_weight(Side::Upper, k, h) * f[M - 1 - k];
  }
  out[0] = lo;
  out[M - 1] = hi;
  return out;
}

Profile second_derivative(const Profile& f, double h) {
  const Eigen::Index M = f.size();
  if (M < Grid1D::kMinPoints) throw ShapeError("profile too short for the stencils");
  const double h2 = h * h;
  Profile out(M);
  for (Eigen::Index j = 1; j + 1 < M; ++j) out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2;
  out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
  out[M - 1] = (2.0 * f[M - 1] - 5.0 * f[M - 2] + 4.0 * f[M - 3] - f[M - 4]) / h2;
  return out;
}

}  // namespace fd

namespace {

Profile row(const ModeTensor2& u, int c) { return u.component(c).transpose(); }
Profile row(const ModeTensor1& w, int c) { return w.component(c).transpose(); }

void check_points(int have, const Grid1D& grid) {
  if (have != grid.size()) throw ShapeError("profile length does not match the grid");
}

ModeTensor1 s_derivative(const ModeTensor1& w, const Grid1D& grid) {
  ModeTensor1 out(w.points());
  for (int c = 0; c < kTensor1Components; ++c) {
    out.component(c) = fd::first_derivative(row(w, c), grid.spacing()).transpose();
  }
  return out;
}

}  // namespace

Profile metric_trace(const ModeTensor2& u) {
  return row(u, kSS) + row(u, k11) + row(u, k22) + row(u, k33);
}

ModeTensor2 trace_reverse(const ModeTensor2& u) {
  ModeTensor2 out = u;
  const Profile half_trace = 0.5 * metric_trace(u);
  for (int c : {kSS, k11, k22, k33}) out.component(c) -= half_trace.transpose();
  return out;
}

ModeTensor1 divergence(const ModeTensor2& u, const ModeIndex& mode, const Grid1D& grid) {
  check_points(u.points(), grid);
  const double h = grid.spacing();
  ModeTensor1 out(u.points());
  Profile acc = fd::first_derivative(row(u, kSS), h);
  for (int j = 0; j < 3; ++j) acc += kI * mode.xi[j] * row(u, s_component(j));
  out.component(0) = (-2.0 * acc).transpose();
  for (int i = 0; i < 3; ++i) {
    acc = fd::first_derivative(row(u, s_component(i)), h);
    for (int j = 0; j < 3; ++j) acc += kI * mode.xi[j] * row(u, sigma_component(j, i));
    out.component(1 + i) = (-2.0 * acc).transpose();
  }
  return out;
}

ModeTensor2 sym_gradient(const ModeTensor1& omega, const ModeTensor1& d_omega,
                         const ModeIndex& mode) {
  if (omega.points() != d_omega.points()) throw ShapeError("omega and d_omega differ in length");
  ModeTensor2 out(omega.points());
  const Profile w_s = row(omega, 0);
  out.component(kSS) = d_omega.component(0);
  for (int i = 0; i < 3; ++i) {
    out.component(s_component(i)) =
        (0.5 * (row(d_omega, 1 + i) + kI * mode.xi[i] * w_s)).transpose();
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      out.component(sigma_component(i, j)) =
          (0.5 * kI * (mode.xi[i] * row(omega, 1 + j) + mode.xi[j] * row(omega, 1 + i)))
              .transpose();
    }
  }
  return out;
}

ModeTensor2 sym_gradient(const ModeTensor1& omega, const ModeIndex& mode, const Grid1D& grid) {
  check_points(omega.points(), grid);
  return sym_gradient(omega, s_derivative(omega, grid), mode);
}

ModeTensor2 gauge_potential(const ModeTensor1& omega, const ModeTensor1& d_omega,
                            const ModeIndex& mode) {
  return trace_reverse(sym_gradient(omega, d_omega, mode));
}

ModeTensor2 gauge_potential(const ModeTensor1& omega, const ModeIndex& mode, const Grid1D& grid) {
  return trace_reverse(sym_gradient(omega, mode, grid));
}

namespace {

void require_flat(const GeometrySpec& geom, const char* what) {
  if (!geom.is_flat()) {
    throw InvalidParameterError(std::string(what) + " supports the flat torus product only");
  }
}

}  // namespace

ModeTensor1 apply_D1(const ModeTensor1& omega, const ModeIndex& mode, const Grid1D& grid,
                     const GeometrySpec& geom) {
  require_flat(geom, "apply_D1");
  check_points(omega.points(), grid);
  const double mass = mode.xi_norm2() - geom.cosmological_constant();
  ModeTensor1 out(omega.points());
  for (int c = 0; c < kTensor1Components; ++c) {
    const Profile w = row(omega, c);
    out.component(c) = (-fd::second_derivative(w, grid.spacing()) + mass * w).transpose();
  }
  return out;
}

ModeTensor2 riemann_operator(const ModeTensor2& u, const GeometrySpec& geom) {
  require_flat(geom, "riemann_operator");
  return ModeTensor2(u.points());
}

ModeTensor2 apply_D2(const ModeTensor2& u, const ModeIndex& mode, const Grid1D& grid,
                     const GeometrySpec& geom) {
  require_flat(geom, "apply_D2");
  check_points(u.points(), grid);
  const double mass = mode.xi_norm2();
  ModeTensor2 out(u.points());
  for (int c = 0; c < kTensor2Components; ++c) {
    const Profile v = row(u, c);
    out.component(c) = (-fd::second_derivative(v, grid.spacing()) + mass * v).transpose();
  }
  out.data() += 2.0 * riemann_operator(u, geom).data();
  return out;
}

const std::array<double, kTensor2Components>& v2_component_weights() {
  static constexpr std::array<double, kTensor2Components> kWeights = {1, 2, 2, 2, 1,
                                                                      1, 1, 2, 2, 2};
  return kWeights;
}

cplx inner_product_V2(const ModeTensor2& u, const ModeTensor2& v, const Grid1D& grid,
                      const GeometrySpec& geom) {
  if (u.points() != v.points()) throw ShapeError("inner product of tensors on different grids");
  check_points(u.points(), grid);
  require_flat(geom, "inner_product_V2");
  const int M = grid.size();
  const double h = grid.spacing();
  const auto& weights = v2_component_weights();
  cplx sum = 0.0;
  for (int c = 0; c < kTensor2Components; ++c) {
    cplx acc = 0.0;
    for (int j = 0; j < M; ++j) {
      const double w = (j == 0 || j == M - 1) ? 0.5 * h : h;
      acc += w * std::conj(u(c, j)) * v(c, j);
    }
    sum += weights[c] * acc;
  }
  return 2.0 * geom.torus_volume() * sum;
}

cplx inner_product_I(const ModeTensor2& u, const ModeTensor2& v, const Grid1D& grid,
                     const GeometrySpec& geom) {
  return inner_product_V2(u, trace_reverse(v), grid, geom);
}

ModeTensor1 random_smooth_covector(const Grid1D& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double T = grid.half_width();
  ModeTensor1 out(grid.size());
  for (int c = 0; c < kTensor1Components; ++c) {
    for (int k = 1; k <= 3; ++k) {
      const cplx amp(unit(rng), unit(rng));
      const double freq = 0.5 * k * std::numbers::pi / T;
      const double shift = phase(rng);
      for (int j = 0; j < grid.size(); ++j) out(c, j) += amp * std::sin(freq * grid.s(j) + shift);
    }
  }
  return out;
}

IntertwiningErrors intertwining_errors(const ModeTensor1& omega, const ModeIndex& mode,
                                       const Grid1D& grid, const GeometrySpec& geom) {
  const ModeTensor2 k_omega = gauge_potential(omega, mode, grid);
  const ModeTensor1 d1_omega = apply_D1(omega, mode, grid, geom);
  const ModeTensor1 lhs1 = divergence(k_omega, mode, grid);
  const ModeTensor2 lhs2 = gauge_potential(d1_omega, mode, grid);
  const ModeTensor2 rhs2 = apply_D2(k_omega, mode, grid, geom);
  const int M = grid.size();
  IntertwiningErrors out;
  for (int j = 2; j <= M - 3; ++j) {
    for (int c = 0; c < kTensor1Components; ++c) {
      out.delta_k = std::max(out.delta_k, std::abs(lhs1(c, j) - d1_omega(c, j)));
    }
    for (int c = 0; c < kTensor2Components; ++c) {
      out.k_d1 = std::max(out.k_d1, std::abs(lhs2(c, j) - rhs2(c, j)));
    }
  }
  return out;
}

}  // namespace linbc
