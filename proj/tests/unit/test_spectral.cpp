#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "linbc/spectral.hpp"

using namespace linbc;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GeometrySpec box() { return make_flat_torus_product(1.0, {kTwoPi, kTwoPi, kTwoPi}); }

ModeOperator make_op(const BoundaryConditionSpec& spec, const std::array<int, 3>& n, int M) {
  const GeometrySpec g = box();
  return assemble_mode_operator(g, spec, make_mode(g, n), Grid1D(1.0, M));
}

bool is_boundary_row(int r, int M) { return r % M == 0 || r % M == M - 1; }

// Shooting oracle: on the continuum each component solves -u'' + k^2 u = 0, so
// u_c = a_c cosh(k s) + b_c sinh(k s) (a_c + b_c s when k = 0). The 20
// boundary conditions of the flat Anderson problem act on the 20 numbers
// (a_c, b_c); the nullity of that matrix is the kernel dimension of the mode.
Eigen::Matrix<cplx, 20, 20> anderson_shooting_matrix(const Vec3& xi, double T) {
  const double k = xi.norm();
  Eigen::Matrix<cplx, 20, 20> A = Eigen::Matrix<cplx, 20, 20>::Zero();
  for (int side = 0; side < 2; ++side) {
    const double s = side == 0 ? -T : T;
    // value and derivative of the two fundamental solutions
    const double f0 = k > 0 ? std::cosh(k * s) : 1.0;
    const double f1 = k > 0 ? std::sinh(k * s) : s;
    const double d0 = k > 0 ? k * std::sinh(k * s) : 0.0;
    const double d1 = k > 0 ? k * std::cosh(k * s) : 1.0;
    auto val = [&](int row, int comp, cplx w) {
      A(row, 2 * comp) += w * f0;
      A(row, 2 * comp + 1) += w * f1;
    };
    auto der = [&](int row, int comp, cplx w) {
      A(row, 2 * comp) += w * d0;
      A(row, 2 * comp + 1) += w * d1;
    };
    const int r0 = 10 * side;
    // (a) u_ss' + i xi^j u_sj
    der(r0, kSS, 1.0);
    for (int j = 0; j < 3; ++j) val(r0, s_component(j), kI * xi[j]);
    // (b) u_si' + i xi^j u_ij
    for (int i = 0; i < 3; ++i) {
      der(r0 + 1 + i, s_component(i), 1.0);
      for (int j = 0; j < 3; ++j) val(r0 + 1 + i, sigma_component(i, j), kI * xi[j]);
    }
    // (c) traceless part: 11, 22, 12, 13, 23
    for (int q = 0; q < 2; ++q) {
      val(r0 + 4 + q, k11 + q, 1.0);
      for (int c : {k11, k22, k33}) val(r0 + 4 + q, c, -1.0 / 3.0);
    }
    val(r0 + 6, k12, 1.0);
    val(r0 + 7, k13, 1.0);
    val(r0 + 8, k23, 1.0);
    // (d) tr' - u_ss'
    for (int c : {k11, k22, k33}) der(r0 + 9, c, 1.0);
    der(r0 + 9, kSS, -1.0);
  }
  for (int r = 0; r < 20; ++r) A.row(r).normalize();
  return A;
}

int nullity(const Eigen::Matrix<cplx, 20, 20>& A) {
  Eigen::JacobiSVD<Eigen::Matrix<cplx, 20, 20>> svd(A);
  const auto& sv = svd.singularValues();
  return static_cast<int>((sv.array() < 1e-10 * sv[0]).count());
}

}  // namespace

TEST(Assemble, DirichletZeroModeDecouples) {
  const int M = 20;
  const ModeOperator op = make_op(BoundaryConditionSpec::dirichlet(), {0, 0, 0}, M);
  const double h2 = op.grid.spacing() * op.grid.spacing();
  for (int k = 0; k < op.A.outerSize(); ++k) {
    for (SparseMatrixC::InnerIterator it(op.A, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      EXPECT_EQ(r / M, c / M);
      if (is_boundary_row(r, M)) {
        EXPECT_EQ(r, c);
        EXPECT_EQ(it.value(), cplx(1.0));
      } else if (r == c) {
        EXPECT_NEAR(std::abs(it.value() - 2.0 / h2), 0.0, 1e-9);
      } else {
        EXPECT_EQ(std::abs(r - c), 1);
        EXPECT_NEAR(std::abs(it.value() + 1.0 / h2), 0.0, 1e-9);
      }
    }
  }
  EXPECT_EQ(op.B.sum(), 10.0 * (M - 2));
}

TEST(Assemble, AndersonCouplesOnlyThroughBoundaryRows) {
  const int M = 20;
  const ModeOperator op = make_op(BoundaryConditionSpec::anderson(), {0, 0, 0}, M);
  int coupled = 0;
  for (int k = 0; k < op.A.outerSize(); ++k) {
    for (SparseMatrixC::InnerIterator it(op.A, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (r / M != c / M) {
        EXPECT_TRUE(is_boundary_row(r, M));
        ++coupled;
      }
    }
  }
  EXPECT_GT(coupled, 0);
}

TEST(Assemble, MassShiftAtNonzeroMode) {
  const int M = 20;
  const ModeOperator a = make_op(BoundaryConditionSpec::anderson(), {0, 0, 0}, M);
  const ModeOperator b = make_op(BoundaryConditionSpec::anderson(), {1, 0, 0}, M);
  const Eigen::MatrixXcd diff = Eigen::MatrixXcd(b.A) - Eigen::MatrixXcd(a.A);
  for (int r = 0; r < 10 * M; ++r) {
    if (is_boundary_row(r, M)) continue;
    for (int c = 0; c < 10 * M; ++c) {
      EXPECT_NEAR(std::abs(diff(r, c) - (r == c ? 1.0 : 0.0)), 0.0, 1e-9);
    }
  }
}

TEST(Assemble, InteriorRowsMatchD2AndConstraintRowsMatchResiduals) {
  const GeometrySpec g = box();
  const Grid1D grid(1.0, 40);
  const ModeIndex mode = make_mode(g, {1, -1, 2});
  const ModeOperator op = assemble_mode_operator(g, BoundaryConditionSpec::anderson(), mode, grid);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n;
  ModeTensor2 u(40);
  for (int c = 0; c < 10; ++c) {
    for (int j = 0; j < 40; ++j) u(c, j) = cplx(n(rng), n(rng));
  }
  const ModeTensor2 d2 = apply_D2(u, mode, grid, g);
  const ModeTensor2 Au = ModeTensor2::from_flat(op.A * u.flatten(), 40);
  for (int c = 0; c < 10; ++c) {
    for (int j = 1; j < 39; ++j) EXPECT_LT(std::abs(Au(c, j) - d2(c, j)), 1e-8 * (1 + std::abs(d2(c, j))));
  }
  for (Side side : {Side::Lower, Side::Upper}) {
    const BoundaryResidual r = boundary_residual(u, BoundaryConditionSpec::anderson(), g, mode, grid, side);
    for (int row = 0; row < 10; ++row) {
      EXPECT_LT(std::abs(Au(row, grid.boundary_node(side)) - r.values[row]), 1e-9);
    }
  }
  EXPECT_EQ(op.apply_interior(u).component(3)(0), cplx(0.0));
}

TEST(Assemble, Errors) {
  const GeometrySpec warped = make_warped_torus_product(1.0, {1, 1, 1}, warp_preset("exp"));
  EXPECT_THROW(assemble_mode_operator(warped, BoundaryConditionSpec::anderson(),
                                      make_mode(warped, {0, 0, 0}), Grid1D(1.0, 40)),
               InvalidParameterError);
  EXPECT_THROW(make_op(BoundaryConditionSpec::general({}), {0, 0, 0}, 40), InvalidSpecError);
}

TEST(NullspaceBasis, OrthonormalAndAnnihilatedByConstraints) {
  const ModeOperator op = make_op(BoundaryConditionSpec::anderson(), {1, 0, 0}, 30);
  const Eigen::MatrixXcd Z(op.nullspace_basis());
  EXPECT_EQ(Z.cols(), 10 * 30 - 20);
  EXPECT_LT((Z.adjoint() * Z - Eigen::MatrixXcd::Identity(Z.cols(), Z.cols())).norm(), 1e-12);
  for (const ConstraintBlock& blk : op.constraints) {
    EXPECT_LT((blk.to_dense(30) * Z).norm(), 1e-9);
  }
}

TEST(ModeSpectrum, DirichletZeroMode) {
  const SpectralResult r =
      mode_spectrum(make_op(BoundaryConditionSpec::dirichlet(), {0, 0, 0}, 201), 12);
  ASSERT_EQ(r.eigenvalues.size(), 12u);
  const double target = std::pow(std::numbers::pi / 2.0, 2);
  for (int k = 0; k < 10; ++k) {
    EXPECT_NEAR(r.eigenvalues[k].real(), target, 0.01 * target);
    EXPECT_LT(std::abs(r.eigenvalues[k].imag()), 1e-8);
  }
  EXPECT_GT(r.eigenvalues[10].real(), 3.0 * target);
  EXPECT_EQ(r.kernel_dim, 0);
  EXPECT_TRUE(r.converged);
}

TEST(ModeSpectrum, DirichletConvergesAtSecondOrder) {
  std::array<double, 3> prev{};
  for (int M : {101, 201, 401}) {
    const SpectralResult r =
        mode_spectrum(make_op(BoundaryConditionSpec::dirichlet(), {0, 0, 0}, M), 30);
    std::vector<double> re;
    for (const cplx& l : r.eigenvalues) re.push_back(l.real());
    std::sort(re.begin(), re.end());
    for (int n = 1; n <= 3; ++n) {
      const double exact = std::pow(n * std::numbers::pi / 2.0, 2);
      const double err = std::abs(re[10 * (n - 1) + 5] - exact);
      if (M > 101) EXPECT_NEAR(std::log2(prev[n - 1] / err), 2.0, 0.2) << "n = " << n;
      prev[n - 1] = err;
    }
  }
}

TEST(ModeSpectrum, GridParity) {
  const double a = std::abs(
      mode_spectrum(make_op(BoundaryConditionSpec::dirichlet(), {1, 0, 0}, 200), 4).eigenvalues[0]);
  const double b = std::abs(
      mode_spectrum(make_op(BoundaryConditionSpec::dirichlet(), {1, 0, 0}, 201), 4).eigenvalues[0]);
  EXPECT_NEAR(a, b, 1e-4);
}

TEST(ModeSpectrum, AndersonZeroModeKernel) {
  const ModeOperator op = make_op(BoundaryConditionSpec::anderson(), {0, 0, 0}, 101);
  const SpectralResult r = mode_spectrum(op, 8);
  ASSERT_EQ(r.kernel_dim, 5);
  EXPECT_LT(subspace_distance(r.kernel_basis, analytic_zero_modes(op.grid)), 1e-8);
  const GeometrySpec g = box();
  for (const ModeTensor2& u : r.kernel_basis) {
    const double scale = u.max_abs();
    EXPECT_LT(op.apply_interior(u).max_abs(), 1e-6 * scale);
    for (Side side : {Side::Lower, Side::Upper}) {
      EXPECT_LT(boundary_residual(u, op.spec, g, op.mode, op.grid, side).sup_norm(), 1e-6 * scale);
    }
  }
}

TEST(ModeSpectrum, AndersonNonzeroModeHasNoKernel) {
  const SpectralResult r = mode_spectrum(make_op(BoundaryConditionSpec::anderson(), {1, 0, 0}, 101), 6);
  EXPECT_EQ(r.kernel_dim, 0);
  EXPECT_GT(r.smallest_singular, 0.01);
}

TEST(ShootingOracle, KernelCountsPerMode) {
  EXPECT_EQ(nullity(anderson_shooting_matrix(Vec3::Zero(), 1.0)), 5);
  for (const Vec3& xi : {Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(2, -1, 1), Vec3(0, 0, 0.5)}) {
    const auto A = anderson_shooting_matrix(xi, 1.0);
    EXPECT_EQ(nullity(A), 0);
    EXPECT_GT(std::abs(A.determinant()), 1e-10);
  }
}

TEST(DenseReference, AgreesWithIterativePath) {
  for (const BoundaryConditionSpec& spec :
       {BoundaryConditionSpec::anderson(), BoundaryConditionSpec::dirichlet()}) {
    for (const std::array<int, 3> n : {std::array<int, 3>{0, 0, 0}, std::array<int, 3>{1, 1, 0}}) {
      const ModeOperator op = make_op(spec, n, 41);
      const SpectralResult s = mode_spectrum(op, 6);
      const SpectralResult d = mode_spectrum_dense(op, 6);
      EXPECT_EQ(s.kernel_dim, d.kernel_dim);
      EXPECT_NEAR(s.smallest_singular, d.smallest_singular, 1e-8 * (1.0 + d.smallest_singular));
      for (int k = 0; k < 6; ++k) {
        EXPECT_NEAR(std::abs(s.eigenvalues[k]), std::abs(d.eigenvalues[k]),
                    1e-8 * (1.0 + std::abs(d.eigenvalues[k])));
      }
    }
  }
}

TEST(DenseReference, AdjointFreeRandomSpec) {
  ConformalCoefficients c;
  c.c1 = 0.5;
  c.c2 = 1.3;
  c.v = Vec3(0.2, -0.4, 0.1);
  c.s << 0.3, 0.1, 0.0, 0.1, -0.2, 0.4, 0.0, 0.4, 0.6;
  const ModeOperator op = make_op(BoundaryConditionSpec::general(c), {1, 0, -1}, 41);
  const SpectralResult s = mode_spectrum(op, 6);
  const SpectralResult d = mode_spectrum_dense(op, 6);
  for (int k = 0; k < 6; ++k) {
    EXPECT_NEAR(std::abs(s.eigenvalues[k]), std::abs(d.eigenvalues[k]), 1e-7);
  }
}

TEST(KernelReport, GeneralSpecKeepsHarmonicOneForms) {
  ConformalCoefficients c;
  c.c2 = 1.0;
  const ModeOperator op = make_op(BoundaryConditionSpec::general(c), {0, 0, 0}, 61);
  const GeometrySpec g = box();
  for (int comp : {kS1, kS2, kS3}) {
    ModeTensor2 u(61);
    u.component(comp).setConstant(1.0);
    for (Side side : {Side::Lower, Side::Upper}) {
      EXPECT_LT(boundary_residual(u, op.spec, g, op.mode, op.grid, side).sup_norm(), 1e-12);
    }
  }
  const KernelReport rep = kernel_report(g, BoundaryConditionSpec::general(c), mode_box(1), 61, 4);
  ASSERT_EQ(rep.results.size(), 27u);
  const SpectralResult& zero = rep.results[13];
  EXPECT_EQ(zero.mode.n, (std::array<int, 3>{0, 0, 0}));
  ASSERT_GE(zero.kernel_dim, 3);
  // Each constant u_sSigma lies in the computed kernel.
  Eigen::MatrixXcd K(10 * 61, zero.kernel_dim);
  for (int k = 0; k < zero.kernel_dim; ++k) K.col(k) = zero.kernel_basis[k].flatten();
  const Eigen::MatrixXcd Q = K.householderQr().householderQ() * Eigen::MatrixXcd::Identity(K.rows(), K.cols());
  for (int comp : {kS1, kS2, kS3}) {
    ModeTensor2 u(61);
    u.component(comp).setConstant(1.0);
    const Eigen::VectorXcd v = u.flatten().normalized();
    EXPECT_LT((v - Q * (Q.adjoint() * v)).norm(), 1e-8);
  }
}

TEST(KernelReport, AndersonSmallBoxDeterministic) {
  const GeometrySpec g = box();
  const auto modes = mode_box(1);
  const KernelReport a = kernel_report(g, BoundaryConditionSpec::anderson(), modes, 41, 4, 1);
  const KernelReport b = kernel_report(g, BoundaryConditionSpec::anderson(), modes, 41, 4, 3);
  EXPECT_EQ(a.total_kernel_dim, 5);
  ASSERT_EQ(a.kernel_modes.size(), 1u);
  EXPECT_EQ(a.kernel_modes[0], (std::array<int, 3>{0, 0, 0}));
  EXPECT_EQ(a.total_kernel_dim, b.total_kernel_dim);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    EXPECT_EQ(a.results[i].mode.n, modes[i]);
    EXPECT_EQ(a.results[i].eigenvalues, b.results[i].eigenvalues);
  }
}

TEST(ModeBox, LexicographicOrder) {
  const auto box1 = mode_box(1);
  ASSERT_EQ(box1.size(), 27u);
  EXPECT_EQ(box1.front(), (std::array<int, 3>{-1, -1, -1}));
  EXPECT_EQ(box1[1], (std::array<int, 3>{-1, -1, 0}));
  EXPECT_EQ(box1.back(), (std::array<int, 3>{1, 1, 1}));
  EXPECT_EQ(mode_box(0).size(), 1u);
}

TEST(SubspaceDistance, Basics) {
  const Grid1D grid(1.0, 20);
  const auto z = analytic_zero_modes(grid);
  EXPECT_LT(subspace_distance(z, z), 1e-14);
  std::vector<ModeTensor2> fewer(z.begin(), z.end() - 1);
  EXPECT_EQ(subspace_distance(z, fewer), 1.0);
}

TEST(SymmetryDefect, AndersonHalvesUnderRefinement) {
  const GeometrySpec g = box();
  double prev = 0.0;
  for (int M : {100, 200, 400}) {
    const ModeOperator op = make_op(BoundaryConditionSpec::anderson(), {1, 0, 0}, M);
    const auto samples = constrained_samples(op, 6, 99);
    for (const ModeTensor2& u : samples) {
      for (const ConstraintBlock& blk : op.constraints) EXPECT_LT(blk.apply(u).norm(), 1e-9);
    }
    const double d = symmetry_defect(op, g, samples);
    if (prev > 0.0) EXPECT_NEAR(prev / d, 2.0, 0.4);
    prev = d;
  }
}

TEST(SymmetryDefect, DirichletPlainPairingIsSymmetric) {
  const GeometrySpec g = box();
  const ModeOperator op = make_op(BoundaryConditionSpec::dirichlet(), {1, 0, 0}, 100);
  const double d = symmetry_defect(op, g, constrained_samples(op, 6, 5), PairingKind::Plain);
  EXPECT_LT(d, 1e-10);
}

TEST(SymmetryDefect, AdversarialVectorDoesNotDecay) {
  const GeometrySpec g = box();
  ConformalCoefficients c;
  c.c2 = 1.0;
  c.v = Vec3(3.0, 0.0, 0.0);
  double first = 0.0, last = 0.0;
  for (int M : {100, 200, 400}) {
    const ModeOperator op = make_op(BoundaryConditionSpec::general(c), {1, 0, 0}, M);
    const double d = symmetry_defect(op, g, constrained_samples(op, 6, 7));
    if (M == 100) first = d;
    last = d;
  }
  EXPECT_GT(last, 0.5 * first);
  EXPECT_GT(last, 1e-3);
}
