#include "linbc/ellipticity.hpp"

#include <cmath>
#include <stdexcept>

#include <lapacke.h>

#include "linbc/parallel.hpp"

namespace linbc {

namespace {

using Mat10 = Eigen::Matrix<cplx, 10, 10>;

// Singular values (descending) and the full right singular basis of A.
void svd10(const Mat10& A, Eigen::VectorXd& sigma, Mat10& V) {
  Mat10 work = A;
  Mat10 vt;
  double values[10];
  double superb[9];
  const lapack_int info =
      LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'N', 'A', 10, 10,
                     reinterpret_cast<lapack_complex_double*>(work.data()), 10, values, nullptr, 1,
                     reinterpret_cast<lapack_complex_double*>(vt.data()), 10, superb);
  if (info != 0) throw std::runtime_error("half_space_kernel: zgesvd failed");
  sigma = Eigen::Map<Eigen::VectorXd>(values, 10);
  V = vt.adjoint();
}

}  // namespace

double sl_reduced_coefficient(double c2, const Mat3& s, const Vec3& xi) {
  const double norm = xi.norm();
  if (!(norm > 0.0)) throw DomainError("sl_reduced_coefficient: xi must be nonzero");
  const Vec3 dir = xi / norm;
  return norm * (2.0 * c2 + s.trace() - dir.dot(s * dir));
}

SLVerdict sl_check(double c2, const Mat3& s) {
  const Mat3 sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(sym);
  const Vec3 ev = eig.eigenvalues();  // ascending
  const Mat3 vecs = eig.eigenvectors();
  const double t = 2.0 * c2 + sym.trace();
  const double lo = t - ev[2];
  const double hi = t - ev[0];

  SLVerdict out;
  out.elliptic = lo > 0.0 || hi < 0.0;
  out.margin = out.elliptic ? std::min(std::abs(lo), std::abs(hi)) : 0.0;
  if (out.elliptic) return out;

  // Direction with S(x, x) = t. Prefer an eigenvector when t is an eigenvalue,
  // taking the projection of the first coordinate axis that survives.
  const double tol = 1e-12 * std::max(1.0, sym.norm());
  for (int k = 0; k < 3; ++k) {
    if (std::abs(ev[k] - t) > tol) continue;
    Mat3 proj = Mat3::Zero();
    for (int m = 0; m < 3; ++m) {
      if (std::abs(ev[m] - ev[k]) <= tol) proj += vecs.col(m) * vecs.col(m).transpose();
    }
    for (int axis = 0; axis < 3; ++axis) {
      const Vec3 cand = proj.col(axis);
      if (cand.norm() > 1e-6) {
        out.witness = cand.normalized();
        return out;
      }
    }
  }
  const double sin2 = std::clamp((t - ev[0]) / (ev[2] - ev[0]), 0.0, 1.0);
  out.witness = (std::sqrt(1.0 - sin2) * vecs.col(0) + std::sqrt(sin2) * vecs.col(2)).normalized();
  return out;
}

namespace {

constexpr std::array<std::pair<int, int>, 5> kTraceless = {
    {{0, 0}, {1, 1}, {0, 1}, {0, 2}, {1, 2}}};

}  // namespace

HalfSpaceKernel half_space_kernel(const BoundaryConditionSpec& spec, const Vec3& xi, Side side) {
  const double norm = xi.norm();
  if (!(norm > 0.0)) throw DomainError("half_space_kernel: xi must be nonzero");
  // d_s acting on the solution decaying away from the boundary.
  const double d = side == Side::Lower ? -norm : norm;

  HalfSpaceKernel out;
  Eigen::Matrix<cplx, 10, 10>& A = out.system;
  A.setZero();
  if (spec.kind() == BoundaryKind::Dirichlet) {
    A.setIdentity();
  } else {
    ConformalCoefficients co;
    if (spec.kind() == BoundaryKind::Anderson) {
      co.c2 = 1.0;  // C1 = 3 tr k = 0 on the flat model
    } else {
      co = spec.coefficients(side);
    }
    // (a)
    A(0, kSS) = d;
    for (int i = 0; i < 3; ++i) A(0, s_component(i)) = kI * xi[i];
    // (b)
    for (int j = 0; j < 3; ++j) {
      A(1 + j, s_component(j)) = d;
      for (int i = 0; i < 3; ++i) A(1 + j, sigma_component(i, j)) += kI * xi[i];
    }
    // (c)
    for (int k = 0; k < 5; ++k) {
      const auto [i, j] = kTraceless[k];
      A(4 + k, sigma_component(i, j)) += 1.0;
      if (i == j) {
        for (int m = 0; m < 3; ++m) A(4 + k, sigma_component(m, m)) -= 1.0 / 3.0;
      }
    }
    // (d)
    const cplx conformal = co.c1 + kI * co.v.dot(xi);
    A(9, kSS) += conformal + co.c2 * (-d);
    for (int m = 0; m < 3; ++m) A(9, sigma_component(m, m)) += conformal / 3.0 + co.c2 * d;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double sij = co.s(i, j);
        if (sij == 0.0) continue;
        A(9, sigma_component(i, j)) += sij * d;
        A(9, s_component(j)) -= kI * sij * xi[i];
        A(9, s_component(i)) -= kI * sij * xi[j];
        if (i == j) A(9, kSS) -= sij * d;
      }
    }
  }

  Mat10 V;
  svd10(A, out.singular_values, V);
  const double cutoff = kHalfSpaceTolerance * out.singular_values[0];
  for (int k = 0; k < 10; ++k) {
    if (out.singular_values[k] <= cutoff) out.basis.push_back(V.col(k));
  }
  out.dimension = static_cast<int>(out.basis.size());
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  if (n <= 0) return out;
  if (n == 1) return {lo};
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(lo + (hi - lo) * k / (n - 1));
  return out;
}

std::vector<SLScanRow> sl_scan(const std::vector<double>& c2_values,
                               const std::vector<Mat3>& s_family, int jobs) {
  const std::size_t ns = s_family.size();
  std::vector<SLScanRow> rows(c2_values.size() * ns);
  parallel_for(rows.size(), jobs, [&](std::size_t idx) {
    SLScanRow& row = rows[idx];
    row.c2 = c2_values[idx / ns];
    row.s = s_family[idx % ns];
    row.verdict = sl_check(row.c2, row.s);
  });
  return rows;
}

}  // namespace linbc
