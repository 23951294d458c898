#pragma once

// Per-mode boundary value problem for D2 on the flat product. Unknowns are the
// 10 M nodal values of u (index component * M + node). Interior rows carry the
// -d_s^2 + |xi|^2 stencil; the rows at the two end nodes carry the boundary
// conditions. The constraints are eliminated with a sparse orthonormal basis Z
// of their null space, which leaves the square pencil
//   K y = lambda G y,   K = A_int Z,   G = (rows of Z at interior nodes),
// whose eigenpairs give A u = lambda u at interior nodes with u = Z y.

#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "linbc/boundary.hpp"

namespace linbc {

using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;

struct ModeOperator {
  ModeIndex mode;
  Grid1D grid;
  BoundaryConditionSpec spec;
  SparseMatrixC A;          // 10 M x 10 M
  Eigen::VectorXd B;        // 1 on interior rows, 0 on constraint rows
  std::array<ConstraintBlock, 2> constraints;

  int unknowns() const { return static_cast<int>(A.rows()); }
  /// B A u.
  ModeTensor2 apply_interior(const ModeTensor2& u) const;
  /// Null-space basis Z (10 M x (10 M - 20)), orthonormal columns.
  SparseMatrixC nullspace_basis() const;
};

/// Flat geometry only. Propagates DegenerateSpecError from constraint_rows and
/// InvalidSpecError for invalid GeneralConformal coefficients.
ModeOperator assemble_mode_operator(const GeometrySpec& geom, const BoundaryConditionSpec& spec,
                                    const ModeIndex& mode, const Grid1D& grid);

struct SpectralOptions {
  double eigen_shift = -1e-2;      // shift for the eigenvalue iteration
  double singular_shift = 1e-6;    // shift for the augmented singular-value iteration
  int singular_count = 4;          // eigenpairs of the augmented matrix resolved
  int max_iterations = 400;
  double tolerance = 1e-10;        // relative Ritz residual, eigenvalues
  double singular_tolerance = 1e-12; // ||H x - theta x|| / ||K||, singular-value iteration
  double kernel_rel_tol = 1e-8;    // kernel: sigma < kernel_rel_tol * ||K||
  unsigned long long seed = 12345;
};

struct SpectralResult {
  ModeIndex mode;
  std::vector<cplx> eigenvalues;           // sorted by modulus
  std::vector<double> singular_values;     // smallest ones, ascending
  double smallest_singular = 0.0;
  double operator_norm = 0.0;              // estimate of ||K||
  double kernel_tolerance = 0.0;
  int kernel_dim = 0;
  std::vector<ModeTensor2> kernel_basis;
  bool converged = true;
};

/// Sparse shift-invert path.
SpectralResult mode_spectrum(const ModeOperator& op, int count,
                             const SpectralOptions& options = {});

/// Dense reference path (full eigen- and singular value decompositions of the
/// reduced pencil); intended for small grids.
SpectralResult mode_spectrum_dense(const ModeOperator& op, int count,
                                   const SpectralOptions& options = {});

/// All integer triples with |n_i| <= cutoff, lexicographic.
std::vector<std::array<int, 3>> mode_box(int cutoff);

struct KernelReport {
  std::vector<SpectralResult> results;  // same order as the requested modes
  int total_kernel_dim = 0;
  std::vector<std::array<int, 3>> kernel_modes;
  double gap = 0.0;                     // min over modes of the smallest |lambda|
  double min_singular = 0.0;
};

KernelReport kernel_report(const GeometrySpec& geom, const BoundaryConditionSpec& spec,
                           const std::vector<std::array<int, 3>>& modes, int points, int count,
                           int jobs = 1, const SpectralOptions& options = {});

/// Constant u_ss, constant u_s1, u_s2, u_s3 and u_SigmaSigma = Id.
std::vector<ModeTensor2> analytic_zero_modes(const Grid1D& grid);

/// sin of the largest principal angle between span(a) and span(b) in the
/// flattened Euclidean inner product; 1 if the dimensions differ.
double subspace_distance(const std::vector<ModeTensor2>& a, const std::vector<ModeTensor2>& b);

enum class PairingKind { TraceReversed, Plain };

/// Smooth random fields satisfying the constraint rows exactly: random
/// sinusoids corrected near each end by a least-norm combination of localised
/// polynomials.
std::vector<ModeTensor2> constrained_samples(const ModeOperator& op, int samples,
                                             unsigned long long seed);

/// max over sample pairs of |(BAu, Iv) - (Iu, BAv)| / (|u| |v|) (or the plain
/// pairing), norms from (., .)_V2.
double symmetry_defect(const ModeOperator& op, const GeometrySpec& geom,
                       const std::vector<ModeTensor2>& samples,
                       PairingKind pairing = PairingKind::TraceReversed);

}  // namespace linbc
