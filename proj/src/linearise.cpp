#include "linbc/linearise.hpp"

#include <cmath>
#include <sstream>

namespace linbc {

void Perturbation::validate() const {
  auto symmetric = [](const Mat4& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + m.cwiseAbs().maxCoeff());
  };
  if (!symmetric(h)) throw InvalidParameterError("perturbation h must be symmetric");
  for (const Mat4& m : d) {
    if (!symmetric(m)) throw InvalidParameterError("derivatives of h must be symmetric");
  }
}

Perturbation Perturbation::from_blocks(double h00, const Vec3& h0i, const Mat3& hij) {
  Perturbation p;
  p.h(0, 0) = h00;
  p.h.block<1, 3>(0, 1) = h0i.transpose();
  p.h.block<3, 1>(1, 0) = h0i;
  p.h.block<3, 3>(1, 1) = hij;
  return p;
}

namespace {

struct Background {
  double a;
  double da;
  Mat4 g;
  std::array<Mat4, 4> dg;
};

Background background(const GeometrySpec& geom, double s0) {
  Background b;
  b.a = geom.warp().value(s0);
  b.da = geom.warp().derivative(s0);
  b.g = Mat4::Identity();
  b.g.block<3, 3>(1, 1) *= b.a * b.a;
  for (Mat4& m : b.dg) m.setZero();
  b.dg[0].block<3, 3>(1, 1) = 2.0 * b.a * b.da * Mat3::Identity();
  return b;
}

}  // namespace

double mean_curvature_exact(const GeometrySpec& geom, const Perturbation& pert, double lambda,
                            double s0) {
  const Background bg = background(geom, s0);
  const Mat4 g = bg.g + lambda * pert.h;
  std::array<Mat4, 4> dg;
  for (int r = 0; r < 4; ++r) dg[r] = bg.dg[r] + lambda * pert.d[r];

  Eigen::FullPivLU<Mat4> lu(g);
  if (!lu.isInvertible()) throw DegenerateMetricError("perturbed metric is singular");
  const Mat4 ginv = lu.inverse();
  if (!(ginv(0, 0) > 0.0)) throw DegenerateMetricError("perturbed metric has g^00 <= 0");

  Mat3 gamma0;  // Gamma^0_ij
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int r = 0; r < 4; ++r) {
        acc += ginv(0, r) * (dg[i + 1](r, j + 1) + dg[j + 1](r, i + 1) - dg[r](i + 1, j + 1));
      }
      gamma0(i, j) = 0.5 * acc;
    }
  }
  const Mat3 k = gamma0 / std::sqrt(ginv(0, 0));
  const Mat3 induced = g.block<3, 3>(1, 1);
  Eigen::FullPivLU<Mat3> lu3(induced);
  if (!lu3.isInvertible()) throw DegenerateMetricError("induced slice metric is singular");
  return (lu3.inverse().cwiseProduct(k)).sum();
}

double linearised_mean_curvature(const GeometrySpec& geom, const Perturbation& pert, double s0,
                                 bool include_h00_term) {
  const double a = geom.warp().value(s0);
  const double da = geom.warp().derivative(s0);
  const SliceData slice = slice_data(geom, s0);
  const double inv_a2 = 1.0 / (a * a);
  const double hubble = da / a;
  const Mat3 hij = pert.hij();

  // nabla_j h_i0 = d_j h_i0 - Gamma^0_ji h_00 - Gamma^l_j0 h_il
  double div = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double cov = pert.d[i + 1](i + 1, 0) - slice.k(i, i) * pert.h00() - hubble * hij(i, i);
    div += inv_a2 * cov;
  }
  // d_s (a^{-2} sum_i h_ii)
  const double ds_trace =
      -2.0 * da / (a * a * a) * hij.trace() + inv_a2 * pert.d[0].block<3, 3>(1, 1).trace();
  const double hk = inv_a2 * inv_a2 * (hij.cwiseProduct(slice.k)).sum();

  double out = div - 0.5 * ds_trace - hk;
  if (include_h00_term) out += 0.5 * slice.trace_k * pert.h00();
  return out;
}

namespace {

// Value at x = 0 of the interpolating polynomial through (x_k, y_k).
double neville_at_zero(const std::vector<double>& x, std::vector<double> y) {
  const std::size_t n = x.size();
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      y[i] = (x[i + m] * y[i] - x[i] * y[i + 1]) / (x[i + m] - x[i]);
    }
  }
  return y[0];
}

}  // namespace

LinearisationReport fd_linearisation_check(const GeometrySpec& geom, const Perturbation& pert,
                                           double s0, const std::vector<double>& lambdas,
                                           bool include_h00_term) {
  if (lambdas.empty()) throw InvalidParameterError("need at least one lambda");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] > 0.0)) throw InvalidParameterError("lambdas must be positive");
    if (k > 0 && !(lambdas[k] < lambdas[k - 1])) {
      throw InvalidParameterError("lambdas must be strictly decreasing");
    }
  }
  pert.validate();

  LinearisationReport out;
  const double base = mean_curvature_exact(geom, pert, 0.0, s0);
  std::vector<double> quotients;
  for (double lambda : lambdas) {
    double value;
    try {
      value = mean_curvature_exact(geom, pert, lambda, s0);
    } catch (const DegenerateMetricError& e) {
      std::ostringstream msg;
      msg << e.what() << " at lambda = " << lambda;
      throw DegenerateMetricError(msg.str());
    }
    quotients.push_back((value - base) / lambda);
    out.fd_values.emplace_back(lambda, quotients.back());
  }
  out.richardson_limit = neville_at_zero(lambdas, quotients);
  out.formula_value = linearised_mean_curvature(geom, pert, s0, include_h00_term);
  out.discrepancy = std::abs(out.formula_value - out.richardson_limit);
  out.dropped_term_value = 0.5 * slice_data(geom, s0).trace_k * pert.h00();
  return out;
}

Mat3 linearised_conformal_class(const Mat3& hij, const GeometrySpec& geom, double s0) {
  const SliceData slice = slice_data(geom, s0);
  const double trace = (slice.gamma.inverse().cwiseProduct(hij)).sum();
  return hij - (trace / 3.0) * slice.gamma;
}

}  // namespace linbc
