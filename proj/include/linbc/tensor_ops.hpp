#pragma once

// Per-Fourier-mode calculus of symmetric tensors on the flat product
// [-T, T] x T^3. A field u(s) e^{i xi.x} is stored as complex profiles in s;
// spatial derivatives are multiplication by i xi, s-derivatives are finite
// differences on a uniform grid.

#include <array>
#include <random>

#include "linbc/geometry.hpp"
#include "linbc/types.hpp"

namespace linbc {

/// Component order of a symmetric 2-tensor on the 4-manifold. Every matrix in
/// the library indexes unknowns as component * M + node.
enum Component : int {
  kSS = 0,
  kS1 = 1,
  kS2 = 2,
  kS3 = 3,
  k11 = 4,
  k22 = 5,
  k33 = 6,
  k12 = 7,
  k13 = 8,
  k23 = 9,
};

inline constexpr int kTensor2Components = 10;
inline constexpr int kTensor1Components = 4;

/// u_{s i}, i = 0..2
constexpr int s_component(int i) { return kS1 + i; }

/// u_{ij} for spatial i, j = 0..2 (either order).
constexpr int sigma_component(int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  if (i == j) return k11 + i;
  if (i == 0) return j == 1 ? k12 : k13;
  return k23;
}

struct ModeIndex {
  std::array<int, 3> n{0, 0, 0};
  Vec3 xi = Vec3::Zero();

  double xi_norm() const { return xi.norm(); }
  double xi_norm2() const { return xi.squaredNorm(); }
};

/// xi_i = 2 pi n_i / L_i.
ModeIndex make_mode(const GeometrySpec& geom, const std::array<int, 3>& n);

/// Uniform grid on [-T, T] with M points; both ends are nodes.
class Grid1D {
 public:
  static constexpr int kMinPoints = 6;

  Grid1D(double half_width, int points);

  int size() const { return points_; }
  double spacing() const { return spacing_; }
  double half_width() const { return half_width_; }
  double s(int j) const { return values_[j]; }
  const Eigen::VectorXd& values() const { return values_; }
  int boundary_node(Side side) const { return side == Side::Lower ? 0 : points_ - 1; }

 private:
  double half_width_;
  int points_;
  double spacing_;
  Eigen::VectorXd values_;
};

/// Row-major (components x M) storage so that the flattened vector is
/// component-major.
using ComponentMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <int Components>
class ModeTensor {
 public:
  static constexpr int kComponents = Components;

  explicit ModeTensor(int points) : data_(ComponentMatrix::Zero(Components, points)) {}

  int points() const { return static_cast<int>(data_.cols()); }

  auto component(int c) { return data_.row(c); }
  auto component(int c) const { return data_.row(c); }
  cplx& operator()(int c, int j) { return data_(c, j); }
  cplx operator()(int c, int j) const { return data_(c, j); }

  ComponentMatrix& data() { return data_; }
  const ComponentMatrix& data() const { return data_; }

  Eigen::VectorXcd flatten() const {
    return Eigen::Map<const Eigen::VectorXcd>(data_.data(), data_.size());
  }

  static ModeTensor from_flat(const Eigen::VectorXcd& flat, int points) {
    if (flat.size() != static_cast<Eigen::Index>(Components) * points) {
      throw ShapeError("flattened tensor has wrong length");
    }
    ModeTensor out(points);
    out.data_ = Eigen::Map<const ComponentMatrix>(flat.data(), Components, points);
    return out;
  }

  ModeTensor& operator+=(const ModeTensor& other) {
    data_ += other.data_;
    return *this;
  }
  ModeTensor& operator-=(const ModeTensor& other) {
    data_ -= other.data_;
    return *this;
  }
  friend ModeTensor operator+(ModeTensor a, const ModeTensor& b) { return a += b; }
  friend ModeTensor operator-(ModeTensor a, const ModeTensor& b) { return a -= b; }
  friend ModeTensor operator*(cplx scale, ModeTensor a) {
    a.data_ *= scale;
    return a;
  }

  /// Max modulus over all components and nodes.
  double max_abs() const { return data_.cwiseAbs().maxCoeff(); }

 private:
  ComponentMatrix data_;
};

/// Covector field omega = omega_s ds + omega_Sigma (components s, 1, 2, 3).
using ModeTensor1 = ModeTensor<kTensor1Components>;
/// Symmetric 2-tensor in the fixed order ss, s1, s2, s3, 11, 22, 33, 12, 13, 23.
using ModeTensor2 = ModeTensor<kTensor2Components>;

// Finite differences on a uniform grid: second-order central in the interior,
// one-sided 5-point stencils (fourth order) for the first derivative at the two
// end nodes, one-sided 4-point (second order) for the second derivative.
namespace fd {

inline constexpr std::array<double, 5> kEndFirstDerivative = {-25.0 / 12.0, 4.0, -3.0,
                                                              4.0 / 3.0, -0.25};
inline constexpr int kEndStencilWidth = 5;

Profile first_derivative(const Profile& f, double h);
Profile second_derivative(const Profile& f, double h);

/// Weights w_k for d/ds at the boundary node of `side`, acting on the nodes
/// returned by end_stencil_node(side, k, M).
double end_stencil_weight(Side side, int k, double h);
int end_stencil_node(Side side, int k, int points);

}  // namespace fd

/// tr_g u = u_ss + delta^{ij} u_ij, pointwise.
Profile metric_trace(const ModeTensor2& u);

/// I u = u - (1/2) tr_g(u) g.
ModeTensor2 trace_reverse(const ModeTensor2& u);

/// (delta u)_mu = -2 nabla^lambda u_{lambda mu}.
ModeTensor1 divergence(const ModeTensor2& u, const ModeIndex& mode, const Grid1D& grid);

/// (d omega)_{ab} = (1/2)(nabla_a omega_b + nabla_b omega_a), s-derivative by
/// finite differences.
ModeTensor2 sym_gradient(const ModeTensor1& omega, const ModeIndex& mode, const Grid1D& grid);

/// Same with the s-derivative of omega supplied.
ModeTensor2 sym_gradient(const ModeTensor1& omega, const ModeTensor1& d_omega,
                         const ModeIndex& mode);

/// K = I o d.
ModeTensor2 gauge_potential(const ModeTensor1& omega, const ModeIndex& mode, const Grid1D& grid);
ModeTensor2 gauge_potential(const ModeTensor1& omega, const ModeTensor1& d_omega,
                            const ModeIndex& mode);

/// D1 = -Delta_1 - Lambda: componentwise -omega'' + |xi|^2 omega - Lambda omega.
ModeTensor1 apply_D1(const ModeTensor1& omega, const ModeIndex& mode, const Grid1D& grid,
                     const GeometrySpec& geom);

/// D2 = -Delta_2 + 2 Riem: componentwise -u'' + |xi|^2 u plus the curvature
/// term, which vanishes on the flat torus product.
ModeTensor2 apply_D2(const ModeTensor2& u, const ModeIndex& mode, const Grid1D& grid,
                     const GeometrySpec& geom);

/// Riem_g(u)_{ab} = R^c_{ab}^d u_{cd} for the background. Zero for flat Sigma.
ModeTensor2 riemann_operator(const ModeTensor2& u, const GeometrySpec& geom);

/// Per-component weights of the pointwise V2 pairing for the flat metric:
/// 1 for ss, 2 for each s-i (the 2 gamma^{-1} term), 1 for diagonal ij and 2
/// for off-diagonal ij (both orderings).
const std::array<double, kTensor2Components>& v2_component_weights();

/// (u, v)_{V2} = 2 int ds int_Sigma (conj(u_ss) v_ss + 2 gamma^{-1}(...) + ...).
/// Trapezoid rule in s; the Sigma integral of e^{-i xi.x} e^{i xi.x} is the
/// torus volume (both profiles are coefficients of the same mode).
cplx inner_product_V2(const ModeTensor2& u, const ModeTensor2& v, const Grid1D& grid,
                      const GeometrySpec& geom);

/// (u, I v)_{V2}.
cplx inner_product_I(const ModeTensor2& u, const ModeTensor2& v, const Grid1D& grid,
                     const GeometrySpec& geom);

/// Random smooth covector: each component a short sum of sinusoids in s with
/// complex amplitudes of order 1.
ModeTensor1 random_smooth_covector(const Grid1D& grid, std::mt19937_64& rng);

struct IntertwiningErrors {
  double delta_k = 0.0;  // max |delta K omega - D1 omega|
  double k_d1 = 0.0;     // max |K D1 omega - D2 K omega|
};

/// Both identities with every derivative taken by finite differences, measured
/// on nodes 2..M-3 where all composed stencils are central.
IntertwiningErrors intertwining_errors(const ModeTensor1& omega, const ModeIndex& mode,
                                       const Grid1D& grid, const GeometrySpec& geom);

}  // namespace linbc
