#include "linbc/boundary.hpp"

#include <cmath>
#include <sstream>

namespace linbc {

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::Dirichlet:
      return "dirichlet";
    case BoundaryKind::Anderson:
      return "anderson";
    case BoundaryKind::GeneralConformal:
      return "general";
  }
  return "unknown";
}

BoundaryConditionSpec::BoundaryConditionSpec(BoundaryKind kind,
                                             std::array<ConformalCoefficients, 2> coefficients)
    : kind_(kind), coefficients_(std::move(coefficients)) {}

BoundaryConditionSpec BoundaryConditionSpec::dirichlet() {
  return BoundaryConditionSpec(BoundaryKind::Dirichlet, {});
}

BoundaryConditionSpec BoundaryConditionSpec::anderson() {
  return BoundaryConditionSpec(BoundaryKind::Anderson, {});
}

BoundaryConditionSpec BoundaryConditionSpec::general(const ConformalCoefficients& both_sides) {
  return general(both_sides, both_sides);
}

BoundaryConditionSpec BoundaryConditionSpec::general(const ConformalCoefficients& lower,
                                                     const ConformalCoefficients& upper) {
  return BoundaryConditionSpec(BoundaryKind::GeneralConformal, {lower, upper});
}

namespace {

double side_coordinate(const GeometrySpec& geom, Side side) {
  return side == Side::Lower ? -geom.half_width() : geom.half_width();
}

}  // namespace

ConformalCoefficients effective_coefficients(const BoundaryConditionSpec& spec,
                                             const GeometrySpec& geom, Side side) {
  switch (spec.kind()) {
    case BoundaryKind::Dirichlet:
      throw InvalidParameterError("Dirichlet conditions have no conformal coefficients");
    case BoundaryKind::Anderson: {
      ConformalCoefficients out;
      out.c1 = 3.0 * slice_data(geom, side_coordinate(geom, side)).trace_k;
      out.c2 = 1.0;
      return out;
    }
    case BoundaryKind::GeneralConformal:
      return spec.coefficients(side);
  }
  throw InvalidParameterError("unknown boundary kind");
}

double proportionality_deviation(const Mat3& s, const Mat3& gamma) {
  const double scale = (s.cwiseProduct(gamma)).sum() / gamma.squaredNorm();
  return (s - scale * gamma).norm();
}

SpecDiagnostics validate_spec(const BoundaryConditionSpec& spec, const GeometrySpec& geom) {
  SpecDiagnostics out;
  if (spec.kind() == BoundaryKind::Dirichlet) return out;
  for (Side side : {Side::Lower, Side::Upper}) {
    const ConformalCoefficients coeffs = effective_coefficients(spec, geom, side);
    const SliceData slice = slice_data(geom, side_coordinate(geom, side));
    const double deviation = proportionality_deviation(coeffs.s, slice.gamma);
    out.deviation[side_index(side)] = deviation;

    const bool finite = std::isfinite(coeffs.c1) && std::isfinite(coeffs.c2) &&
                        coeffs.v.allFinite() && coeffs.s.allFinite();
    if (!finite) {
      out.ok = false;
      out.messages.push_back("non-finite coefficient at s = " + std::string(to_string(side)));
      continue;
    }
    if ((coeffs.s - coeffs.s.transpose()).norm() > 1e-12 * (1.0 + coeffs.s.norm())) {
      out.ok = false;
      out.messages.push_back("S is not symmetric at s = " + std::string(to_string(side)));
    }
    const double tol = 1e-12 * std::max(1.0, coeffs.s.norm());
    if (coeffs.c2 == 0.0 && deviation <= tol) {
      std::ostringstream msg;
      msg << "C2 = 0 and S is proportional to gamma at s = " << to_string(side)
          << " (deviation " << deviation << "): condition (d) degenerates";
      out.ok = false;
      out.messages.push_back(msg.str());
    }
  }
  return out;
}

Eigen::Matrix3cd BoundaryResidual::c_matrix() const {
  Eigen::Matrix3cd m;
  m(0, 0) = c(0);
  m(1, 1) = c(1);
  m(2, 2) = -c(0) - c(1);
  m(0, 1) = m(1, 0) = c(2);
  m(0, 2) = m(2, 0) = c(3);
  m(1, 2) = m(2, 1) = c(4);
  return m;
}

namespace {

constexpr std::array<std::pair<int, int>, 5> kTracelessEntries = {
    {{0, 0}, {1, 1}, {0, 1}, {0, 2}, {1, 2}}};

// Local geometry at the boundary node and its stencil nodes.
struct BoundaryFrame {
  Side side;
  int node;
  std::array<int, fd::kEndStencilWidth> nodes;
  std::array<double, fd::kEndStencilWidth> weights;
  std::array<double, fd::kEndStencilWidth> inv_a2;  // a(s)^{-2} at stencil nodes
  SliceData slice;
  Mat3 gamma_inv;
};

BoundaryFrame make_frame(const GeometrySpec& geom, const Grid1D& grid, Side side) {
  BoundaryFrame f;
  f.side = side;
  f.node = grid.boundary_node(side);
  for (int k = 0; k < fd::kEndStencilWidth; ++k) {
    f.nodes[k] = fd::end_stencil_node(side, k, grid.size());
    f.weights[k] = fd::end_stencil_weight(side, k, grid.spacing());
    const double a = geom.warp().value(grid.s(f.nodes[k]));
    f.inv_a2[k] = 1.0 / (a * a);
  }
  f.slice = slice_data(geom, grid.s(f.node));
  f.gamma_inv = f.slice.gamma.inverse();
  return f;
}

void require_valid(const BoundaryConditionSpec& spec, const GeometrySpec& geom) {
  const SpecDiagnostics diag = validate_spec(spec, geom);
  if (!diag.ok) {
    throw InvalidSpecError("invalid boundary spec: " +
                           (diag.messages.empty() ? std::string("?") : diag.messages.front()));
  }
}

}  // namespace

BoundaryResidual boundary_residual(const ModeTensor2& u, const BoundaryConditionSpec& spec,
                                   const GeometrySpec& geom, const ModeIndex& mode,
                                   const Grid1D& grid, Side side) {
  if (u.points() != grid.size()) throw ShapeError("field length does not match the grid");
  BoundaryResidual out;
  out.side = side;
  out.kind = spec.kind();
  const BoundaryFrame f = make_frame(geom, grid, side);
  const int b = f.node;

  if (spec.kind() == BoundaryKind::Dirichlet) {
    for (int c = 0; c < kTensor2Components; ++c) out.values[c] = u(c, b);
    return out;
  }
  require_valid(spec, geom);
  const ConformalCoefficients co = effective_coefficients(spec, geom, side);

  auto ds = [&](int comp) {
    cplx acc = 0.0;
    for (int k = 0; k < fd::kEndStencilWidth; ++k) acc += f.weights[k] * u(comp, f.nodes[k]);
    return acc;
  };
  auto trace_at = [&](int node, double inv_a2) {
    return inv_a2 * (u(k11, node) + u(k22, node) + u(k33, node));
  };
  cplx ds_trace = 0.0;
  for (int k = 0; k < fd::kEndStencilWidth; ++k) {
    ds_trace += f.weights[k] * trace_at(f.nodes[k], f.inv_a2[k]);
  }

  Eigen::Matrix3cd U;
  Eigen::Vector3cd us;
  for (int i = 0; i < 3; ++i) {
    us[i] = u(s_component(i), b);
    for (int j = 0; j < 3; ++j) U(i, j) = u(sigma_component(i, j), b);
  }
  const Mat3& gi = f.gamma_inv;
  const Mat3& gamma = f.slice.gamma;
  const double trk = f.slice.trace_k;
  const Eigen::Vector3cd ixi_up = kI * (gi * mode.xi).cast<cplx>();  // i gamma^{il} xi_l
  const cplx tr = (gi.cast<cplx>().cwiseProduct(U)).sum();
  const cplx uss = u(kSS, b);
  const cplx ds_uss = ds(kSS);

  // (a)
  const Mat3 k_up = gi * f.slice.k * gi;
  out.values[0] = ds_uss + (ixi_up.transpose() * us)(0) - trk * uss +
                  (k_up.cast<cplx>().cwiseProduct(U)).sum();
  // (b)
  for (int j = 0; j < 3; ++j) {
    out.values[1 + j] = ds(s_component(j)) + (ixi_up.transpose() * U.col(j))(0) - trk * us[j];
  }
  // (c)
  const Eigen::Matrix3cd P = U - (tr / 3.0) * gamma.cast<cplx>();
  for (int k = 0; k < 5; ++k) {
    out.values[4 + k] = P(kTracelessEntries[k].first, kTracelessEntries[k].second);
  }
  // (d)
  const cplx conformal = uss + tr / 3.0;
  cplx d = co.c1 * conformal + co.c2 * (ds_trace - ds_uss - (4.0 / 3.0) * tr * trk);
  d += (ixi_up.transpose() * co.v.cast<cplx>())(0) * conformal;
  const Mat3 s_up = gi * co.s * gi;
  cplx s_term = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const cplx x = ds(sigma_component(i, j)) -
                     kI * (mode.xi[i] * us[j] + mode.xi[j] * us[i]) -
                     gamma(i, j) * (ds_uss + (2.0 / 3.0) * tr * trk);
      s_term += s_up(i, j) * x;
    }
  }
  out.values[9] = d + s_term;
  return out;
}

namespace {

// Accumulates linear functionals over (component, local stencil node).
class RowBuilder {
 public:
  explicit RowBuilder(const BoundaryFrame& frame)
      : frame_(frame), rows_(Eigen::MatrixXcd::Zero(10, 10 * fd::kEndStencilWidth)) {}

  void value(int row, int comp, cplx coef) { at(row, comp, 0) += coef; }

  void derivative(int row, int comp, cplx coef) {
    for (int k = 0; k < fd::kEndStencilWidth; ++k) at(row, comp, k) += coef * frame_.weights[k];
  }

  void trace_value(int row, cplx coef) {
    for (int i = 0; i < 3; ++i) {
      for (int l = 0; l < 3; ++l) {
        value(row, sigma_component(i, l), coef * frame_.gamma_inv(i, l));
      }
    }
  }

  void trace_derivative(int row, cplx coef) {
    // d_s of a(s)^{-2} (u11 + u22 + u33), stencil applied to the product.
    for (int k = 0; k < fd::kEndStencilWidth; ++k) {
      const cplx w = coef * frame_.weights[k] * frame_.inv_a2[k];
      for (int i = 0; i < 3; ++i) at(row, sigma_component(i, i), k) += w;
    }
  }

  Eigen::MatrixXcd take() { return std::move(rows_); }

 private:
  cplx& at(int row, int comp, int k) { return rows_(row, comp * fd::kEndStencilWidth + k); }

  const BoundaryFrame& frame_;
  Eigen::MatrixXcd rows_;
};

}  // namespace

Eigen::MatrixXcd ConstraintBlock::to_dense(int points) const {
  const int width = static_cast<int>(nodes.size());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(10, kTensor2Components * points);
  for (int c = 0; c < kTensor2Components; ++c) {
    for (int k = 0; k < width; ++k) out.col(c * points + nodes[k]) += rows.col(c * width + k);
  }
  return out;
}

Eigen::Matrix<cplx, 10, 1> ConstraintBlock::apply(const ModeTensor2& u) const {
  const int width = static_cast<int>(nodes.size());
  Eigen::Matrix<cplx, 10, 1> out = Eigen::Matrix<cplx, 10, 1>::Zero();
  for (int c = 0; c < kTensor2Components; ++c) {
    for (int k = 0; k < width; ++k) out += rows.col(c * width + k) * u(c, nodes[k]);
  }
  return out;
}

int block_rank(const Eigen::MatrixXcd& rows, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(rows);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > rel_tol * sv[0]) ++rank;
  }
  return rank;
}

std::array<ConstraintBlock, 2> constraint_rows(const BoundaryConditionSpec& spec,
                                               const GeometrySpec& geom, const ModeIndex& mode,
                                               const Grid1D& grid) {
  std::array<ConstraintBlock, 2> out;
  for (Side side : {Side::Lower, Side::Upper}) {
    const BoundaryFrame f = make_frame(geom, grid, side);
    RowBuilder rb(f);
    if (spec.kind() == BoundaryKind::Dirichlet) {
      for (int c = 0; c < kTensor2Components; ++c) rb.value(c, c, 1.0);
    } else {
      const ConformalCoefficients co = effective_coefficients(spec, geom, side);
      const Mat3& gi = f.gamma_inv;
      const Mat3& gamma = f.slice.gamma;
      const double trk = f.slice.trace_k;
      const Eigen::Vector3cd ixi_up = kI * (gi * mode.xi).cast<cplx>();
      const Mat3 k_up = gi * f.slice.k * gi;

      // (a)
      rb.derivative(0, kSS, 1.0);
      for (int i = 0; i < 3; ++i) rb.value(0, s_component(i), ixi_up[i]);
      rb.value(0, kSS, -trk);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) rb.value(0, sigma_component(i, j), k_up(i, j));
      }
      // (b)
      for (int j = 0; j < 3; ++j) {
        rb.derivative(1 + j, s_component(j), 1.0);
        for (int i = 0; i < 3; ++i) rb.value(1 + j, sigma_component(i, j), ixi_up[i]);
        rb.value(1 + j, s_component(j), -trk);
      }
      // (c)
      for (int k = 0; k < 5; ++k) {
        const auto [i, j] = kTracelessEntries[k];
        rb.value(4 + k, sigma_component(i, j), 1.0);
        rb.trace_value(4 + k, -gamma(i, j) / 3.0);
      }
      // (d)
      const int d = 9;
      const cplx v_term = (ixi_up.transpose() * co.v.cast<cplx>())(0);
      const cplx conformal_coef = co.c1 + v_term;
      rb.value(d, kSS, conformal_coef);
      rb.trace_value(d, conformal_coef / 3.0);
      rb.trace_derivative(d, co.c2);
      rb.derivative(d, kSS, -co.c2);
      rb.trace_value(d, -co.c2 * (4.0 / 3.0) * trk);
      const Mat3 s_up = gi * co.s * gi;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double sij = s_up(i, j);
          if (sij == 0.0) continue;
          rb.derivative(d, sigma_component(i, j), sij);
          rb.value(d, s_component(j), -kI * sij * mode.xi[i]);
          rb.value(d, s_component(i), -kI * sij * mode.xi[j]);
          rb.derivative(d, kSS, -sij * gamma(i, j));
          rb.trace_value(d, -sij * gamma(i, j) * (2.0 / 3.0) * trk);
        }
      }
    }
    ConstraintBlock& block = out[side_index(side)];
    block.side = side;
    block.nodes.assign(f.nodes.begin(), f.nodes.end());
    block.rows = rb.take();
    const int rank = block_rank(block.rows);
    if (rank < 10) {
      throw DegenerateSpecError("boundary rows at s = " + std::string(to_string(side)) +
                                    " have rank " + std::to_string(rank) + " < 10",
                                side);
    }
  }
  return out;
}

}  // namespace linbc
