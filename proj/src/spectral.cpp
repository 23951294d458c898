#include "linbc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <mutex>
#include <random>

#include "linbc/parallel.hpp"
#include "umfpack_lu.hpp"

extern "C" void openblas_set_num_threads(int);

namespace linbc {

namespace {

// One BLAS thread; kernel_report parallelises over modes.
void serial_blas() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

using Triplet = Eigen::Triplet<cplx>;
using DenseC = Eigen::MatrixXcd;

constexpr int kMinSpectralPoints = 12;

int global_index(int comp, int node, int points) { return comp * points + node; }

bool is_interior(int node, int points) { return node > 0 && node < points - 1; }

}  // namespace

ModeTensor2 ModeOperator::apply_interior(const ModeTensor2& u) const {
  if (u.points() != grid.size()) throw ShapeError("field length does not match the operator");
  Eigen::VectorXcd out = A * u.flatten();
  out = out.cwiseProduct(B.cast<cplx>());
  return ModeTensor2::from_flat(out, grid.size());
}

SparseMatrixC ModeOperator::nullspace_basis() const {
  const int M = grid.size();
  const int n = unknowns();
  std::vector<char> touched(n, 0);
  std::vector<Triplet> trip;
  int col = 0;
  auto add_side = [&](const ConstraintBlock& block) {
    const int width = static_cast<int>(block.nodes.size());
    Eigen::JacobiSVD<DenseC> svd(block.rows, Eigen::ComputeFullV);
    const DenseC& V = svd.matrixV();
    for (int k = 10; k < V.cols(); ++k, ++col) {
      for (int c = 0; c < kTensor2Components; ++c) {
        for (int q = 0; q < width; ++q) {
          const cplx v = V(c * width + q, k);
          if (v != cplx(0.0)) trip.emplace_back(global_index(c, block.nodes[q], M), col, v);
        }
      }
    }
    for (int c = 0; c < kTensor2Components; ++c) {
      for (int node : block.nodes) touched[global_index(c, node, M)] = 1;
    }
  };
  add_side(constraints[0]);
  for (const ConstraintBlock& block : constraints) {
    for (int c = 0; c < kTensor2Components; ++c) {
      for (int node : block.nodes) touched[global_index(c, node, M)] = 1;
    }
  }
  for (int r = 0; r < n; ++r) {
    if (!touched[r]) trip.emplace_back(r, col++, 1.0);
  }
  add_side(constraints[1]);
  SparseMatrixC Z(n, col);
  Z.setFromTriplets(trip.begin(), trip.end());
  return Z;
}

ModeOperator assemble_mode_operator(const GeometrySpec& geom, const BoundaryConditionSpec& spec,
                                    const ModeIndex& mode, const Grid1D& grid) {
  if (!geom.is_flat()) throw InvalidParameterError("the spectral solver supports flat geometry only");
  const int M = grid.size();
  if (M < kMinSpectralPoints) {
    throw InvalidParameterError("spectral grids need at least " +
                                std::to_string(kMinSpectralPoints) + " points");
  }
  if (spec.kind() == BoundaryKind::GeneralConformal) {
    const SpecDiagnostics diag = validate_spec(spec, geom);
    if (!diag.ok) throw InvalidSpecError("invalid boundary spec: " + diag.messages.front());
  }
  ModeOperator op{mode, grid, spec, {}, {}, constraint_rows(spec, geom, mode, grid)};

  const int n = kTensor2Components * M;
  const double h2 = grid.spacing() * grid.spacing();
  const double mass = mode.xi_norm2();
  std::vector<Triplet> trip;
  trip.reserve(3 * n + 2 * 10 * 50);
  for (int c = 0; c < kTensor2Components; ++c) {
    for (int j = 1; j + 1 < M; ++j) {
      const int r = global_index(c, j, M);
      trip.emplace_back(r, r - 1, -1.0 / h2);
      trip.emplace_back(r, r, 2.0 / h2 + mass);
      trip.emplace_back(r, r + 1, -1.0 / h2);
    }
  }
  for (const ConstraintBlock& block : op.constraints) {
    const int width = static_cast<int>(block.nodes.size());
    const int node = grid.boundary_node(block.side);
    for (int row = 0; row < 10; ++row) {
      for (int c = 0; c < kTensor2Components; ++c) {
        for (int q = 0; q < width; ++q) {
          const cplx v = block.rows(row, c * width + q);
          if (v != cplx(0.0)) {
            trip.emplace_back(global_index(row, node, M), global_index(c, block.nodes[q], M), v);
          }
        }
      }
    }
  }
  op.A.resize(n, n);
  op.A.setFromTriplets(trip.begin(), trip.end());
  op.A.makeCompressed();
  op.B = Eigen::VectorXd::Ones(n);
  for (int c = 0; c < kTensor2Components; ++c) {
    op.B[global_index(c, 0, M)] = 0.0;
    op.B[global_index(c, M - 1, M)] = 0.0;
  }
  return op;
}

namespace {

struct ReducedPencil {
  SparseMatrixC Z;
  SparseMatrixC K;
  SparseMatrixC G;
};

ReducedPencil reduce(const ModeOperator& op) {
  const int M = op.grid.size();
  const int n = op.unknowns();
  std::vector<Triplet> sel;
  int row = 0;
  for (int r = 0; r < n; ++r) {
    if (is_interior(r % M, M)) sel.emplace_back(row++, r, 1.0);
  }
  SparseMatrixC P(row, n);
  P.setFromTriplets(sel.begin(), sel.end());
  ReducedPencil out;
  out.Z = op.nullspace_basis();
  if (out.Z.cols() != row) {
    throw DegenerateSpecError("constraint elimination is rank deficient", Side::Lower);
  }
  out.G = P * out.Z;
  out.K = SparseMatrixC(P * op.A) * out.Z;
  out.K.makeCompressed();
  out.G.makeCompressed();
  return out;
}

double norm_estimate(const SparseMatrixC& K) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(K.cols());
  Eigen::VectorXd row = Eigen::VectorXd::Zero(K.rows());
  for (int k = 0; k < K.outerSize(); ++k) {
    for (SparseMatrixC::InnerIterator it(K, k); it; ++it) {
      col[it.col()] += std::abs(it.value());
      row[it.row()] += std::abs(it.value());
    }
  }
  return std::sqrt(col.maxCoeff() * row.maxCoeff());
}

DenseC random_block(Eigen::Index rows, Eigen::Index cols, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DenseC X(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = cplx(normal(rng), normal(rng));
  }
  return X;
}

// Classical Gram-Schmidt with one reorthogonalisation pass. Columns that
// collapse are replaced by fresh random directions.
DenseC gram_schmidt(const DenseC& X) {
  const Eigen::Index n = X.rows();
  DenseC Q(n, X.cols());
  std::mt19937_64 rng(X.cols());
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::VectorXcd v = X.col(j);
    const double original = v.norm();
    for (int attempt = 0; attempt < 3; ++attempt) {
      for (int pass = 0; pass < 2 && j > 0; ++pass) {
        v -= Q.leftCols(j) * (Q.leftCols(j).adjoint() * v);
      }
      const double norm = v.norm();
      if (norm > 1e-10 * original && norm > 0.0) {
        Q.col(j) = v / norm;
        break;
      }
      for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(normal(rng), normal(rng));
    }
  }
  return Q;
}

// One Cholesky-QR pass; false when the Gram matrix is too ill-conditioned.
bool cholesky_qr(DenseC& X) {
  Eigen::LLT<DenseC> llt(X.adjoint() * X);
  if (llt.info() != Eigen::Success) return false;
  const auto d = llt.matrixLLT().diagonal().cwiseAbs();
  if (!(d.minCoeff() > 1e-6 * d.maxCoeff())) return false;
  const DenseC R_inv = llt.matrixU().solve(DenseC::Identity(X.cols(), X.cols()));
  X = X * R_inv;
  return true;
}

// Cholesky-QR twice, falling back to Gram-Schmidt.
DenseC orthonormalize(const DenseC& X) {
  DenseC Q = X;
  for (Eigen::Index j = 0; j < Q.cols(); ++j) {
    const double norm = Q.col(j).norm();
    if (norm > 0.0) Q.col(j) /= norm;
  }
  if (cholesky_qr(Q) && cholesky_qr(Q)) return Q;
  return gram_schmidt(X);
}

std::vector<ModeTensor2> kernel_fields(const SparseMatrixC& Z, const DenseC& Y, int points) {
  std::vector<ModeTensor2> out;
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    Eigen::VectorXcd u = Z * Y.col(k);
    u /= u.norm();
    out.push_back(ModeTensor2::from_flat(u, points));
  }
  return out;
}

void sort_by_modulus(std::vector<cplx>& values) {
  std::stable_sort(values.begin(), values.end(), [](cplx a, cplx b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

template <class Values>
std::vector<Eigen::Index> order_by_magnitude(const Values& mu) {
  std::vector<Eigen::Index> order(mu.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(mu[a]) > std::abs(mu[b]);
  });
  return order;
}

struct RitzPairs {
  Eigen::VectorXcd values;  // wanted eigenvalues of the operator, largest modulus first
  DenseC vectors;           // matching unit Ritz vectors
  DenseC block;             // orthonormal iteration block after the last step
  bool converged = false;
};

// Subspace iteration with Rayleigh-Ritz for the eigenvalues of largest
// modulus of `op`. accept(values, vectors, images) decides convergence of the
// wanted pairs.
template <class Op, class Accept>
RitzPairs subspace_iteration(Op&& op, DenseC X, Eigen::Index wanted, bool hermitian,
                             int max_iterations, Accept&& accept) {
  wanted = std::min(wanted, X.cols());
  RitzPairs out;
  for (int it = 0; it < max_iterations && !out.converged; ++it) {
    const DenseC Q = orthonormalize(X);
    X = op(Q);
    const DenseC H = Q.adjoint() * X;
    Eigen::VectorXcd mu;
    DenseC S;
    if (hermitian) {
      Eigen::SelfAdjointEigenSolver<DenseC> es(0.5 * (H + H.adjoint()));
      mu = es.eigenvalues().cast<cplx>();
      S = es.eigenvectors();
    } else {
      Eigen::ComplexEigenSolver<DenseC> ces(H);
      mu = ces.eigenvalues();
      S = ces.eigenvectors();
    }
    const std::vector<Eigen::Index> order = order_by_magnitude(mu);
    DenseC Sk(S.rows(), S.cols());
    for (Eigen::Index k = 0; k < S.cols(); ++k) Sk.col(k) = S.col(order[k]).normalized();
    out.values.resize(wanted);
    for (Eigen::Index k = 0; k < wanted; ++k) out.values[k] = mu[order[k]];
    X = X * Sk;  // Ritz-rotated images
    out.vectors = Q * Sk.leftCols(wanted);
    out.converged = accept(out.values, out.vectors, DenseC(X.leftCols(wanted)));
  }
  out.block = orthonormalize(X);
  return out;
}

// Eigenvalues of K y = lambda G y nearest the shift, by subspace iteration on
// (K - sigma G)^{-1} G. On return `basis` holds the final iteration block.
bool pencil_eigenvalues(const ReducedPencil& pen, int count, const SpectralOptions& opt,
                        std::vector<cplx>& values, DenseC& basis) {
  const Eigen::Index N = pen.K.rows();
  count = static_cast<int>(std::min<Eigen::Index>(count, N));
  values.clear();
  if (count <= 0) return true;
  const Eigen::Index p = std::min<Eigen::Index>(N, count + 10);
  const UmfpackLU lu(SparseMatrixC(pen.K - opt.eigen_shift * pen.G), "K - sigma G");

  const RitzPairs ritz = subspace_iteration(
      [&](const DenseC& Q) { return lu.solve(DenseC(pen.G * Q)); },
      random_block(N, p, opt.seed), count, false, opt.max_iterations,
      [&](const Eigen::VectorXcd& mu, const DenseC& Y, const DenseC& images) {
        for (Eigen::Index k = 0; k < mu.size(); ++k) {
          if (!((images.col(k) - mu[k] * Y.col(k)).norm() <= opt.tolerance * std::abs(mu[k]))) {
            return false;
          }
        }
        return true;
      });
  for (Eigen::Index k = 0; k < ritz.values.size(); ++k) {
    values.push_back(opt.eigen_shift + 1.0 / ritz.values[k]);
  }
  sort_by_modulus(values);
  basis = ritz.block;
  return ritz.converged;
}

struct SingularData {
  Eigen::VectorXd values;  // ascending
  DenseC right;            // matching right singular vectors (reduced coordinates)
  bool converged = true;
};

// Smallest singular values of K from the Hermitian matrix H = [[0, K], [K^H, 0]],
// shift-inverted near zero; the x-halves of the converged Ritz vectors span
// the right singular vectors, which are refined by a small SVD of K W. The
// block starts from `start` (right vectors x, paired with +-K x) when given.
SingularData smallest_singular(const ReducedPencil& pen, const SpectralOptions& opt,
                               double knorm, const DenseC& start) {
  const Eigen::Index N = pen.K.rows();
  const SparseMatrixC KH = pen.K.adjoint();
  int wanted = std::max(1, opt.singular_count);
  std::vector<Triplet> trip;
  trip.reserve(2 * pen.K.nonZeros() + 2 * N);
  for (int k = 0; k < pen.K.outerSize(); ++k) {
    for (SparseMatrixC::InnerIterator it(pen.K, k); it; ++it) {
      trip.emplace_back(it.row(), N + it.col(), it.value());
      trip.emplace_back(N + it.col(), it.row(), std::conj(it.value()));
    }
  }
  for (Eigen::Index i = 0; i < 2 * N; ++i) trip.emplace_back(i, i, -opt.singular_shift);
  SparseMatrixC S(2 * N, 2 * N);
  S.setFromTriplets(trip.begin(), trip.end());
  const UmfpackLU lu(S, "augmented matrix");

  for (;;) {
    const Eigen::Index q = std::min<Eigen::Index>(2 * N, 2 * wanted + 8);
    DenseC X = random_block(2 * N, q, opt.seed + 1);
    const Eigen::Index warm = std::min<Eigen::Index>(start.cols(), q / 2);
    for (Eigen::Index k = 0; k < warm; ++k) {
      Eigen::VectorXcd y = pen.K * start.col(k);
      const double norm = y.norm();
      if (norm > 0.0) y /= norm;
      X.col(2 * k) << y, start.col(k);
      X.col(2 * k + 1) << -y, start.col(k);
    }
    // Convergence on the residual of H itself.
    const RitzPairs ritz = subspace_iteration(
        [&](const DenseC& Q) { return lu.solve(Q); }, X, wanted, true, opt.max_iterations,
        [&](const Eigen::VectorXcd& mu, const DenseC& Y, const DenseC&) {
          for (Eigen::Index k = 0; k < mu.size(); ++k) {
            const double theta = opt.singular_shift + 1.0 / mu[k].real();
            Eigen::VectorXcd r(2 * N);
            r.head(N) = pen.K * Y.col(k).tail(N);
            r.tail(N) = KH * Y.col(k).head(N);
            r -= theta * Y.col(k);
            if (!(r.norm() <= opt.singular_tolerance * knorm)) return false;
          }
          return true;
        });

    // Range of the x-halves.
    const DenseC Xh = ritz.block.bottomRows(N);
    Eigen::JacobiSVD<DenseC> range(Xh, Eigen::ComputeThinU);
    Eigen::Index rank = 0;
    const double top = range.singularValues()[0];
    while (rank < range.singularValues().size() && range.singularValues()[rank] > 1e-6 * top) {
      ++rank;
    }
    const DenseC W = range.matrixU().leftCols(rank);
    Eigen::JacobiSVD<DenseC> svd(DenseC(pen.K * W), Eigen::ComputeThinV);
    SingularData out;
    out.converged = ritz.converged;
    const Eigen::Index r = svd.singularValues().size();
    out.values.resize(r);
    out.right.resize(N, r);
    for (Eigen::Index k = 0; k < r; ++k) {
      out.values[k] = svd.singularValues()[r - 1 - k];
      out.right.col(k) = W * svd.matrixV().col(r - 1 - k);
    }
    // A kernel filling the whole block may hide more: enlarge and retry.
    const double ktol = opt.kernel_rel_tol * knorm;
    Eigen::Index small = 0;
    for (Eigen::Index k = 0; k < r; ++k) small += out.values[k] < ktol ? 1 : 0;
    if (small < std::max<Eigen::Index>(1, wanted - 2) || q >= 2 * N) return out;
    wanted *= 2;
  }
}

}  // namespace

SpectralResult mode_spectrum(const ModeOperator& op, int count, const SpectralOptions& options) {
  serial_blas();
  const ReducedPencil pen = reduce(op);
  SpectralResult out;
  out.mode = op.mode;
  out.operator_norm = norm_estimate(pen.K);
  out.kernel_tolerance = options.kernel_rel_tol * out.operator_norm;
  DenseC basis;
  out.converged = pencil_eigenvalues(pen, count, options, out.eigenvalues, basis);

  const SingularData sd = smallest_singular(pen, options, out.operator_norm, basis);
  out.converged = out.converged && sd.converged;
  out.singular_values.assign(sd.values.data(), sd.values.data() + sd.values.size());
  out.smallest_singular = out.singular_values.empty() ? 0.0 : out.singular_values.front();
  std::vector<Eigen::Index> kernel;
  for (Eigen::Index k = 0; k < sd.values.size(); ++k) {
    if (sd.values[k] < out.kernel_tolerance) kernel.push_back(k);
  }
  out.kernel_dim = static_cast<int>(kernel.size());
  DenseC Y(pen.K.cols(), out.kernel_dim);
  for (int k = 0; k < out.kernel_dim; ++k) Y.col(k) = sd.right.col(kernel[k]);
  out.kernel_basis = kernel_fields(pen.Z, Y, op.grid.size());
  return out;
}

SpectralResult mode_spectrum_dense(const ModeOperator& op, int count,
                                   const SpectralOptions& options) {
  serial_blas();
  const ReducedPencil pen = reduce(op);
  const DenseC K(pen.K);
  const DenseC G(pen.G);
  SpectralResult out;
  out.mode = op.mode;
  out.operator_norm = norm_estimate(pen.K);
  out.kernel_tolerance = options.kernel_rel_tol * out.operator_norm;

  Eigen::ComplexEigenSolver<DenseC> ces(G.partialPivLu().solve(K), false);
  out.eigenvalues.assign(ces.eigenvalues().data(),
                         ces.eigenvalues().data() + ces.eigenvalues().size());
  sort_by_modulus(out.eigenvalues);
  out.eigenvalues.resize(std::min<std::size_t>(out.eigenvalues.size(), std::max(0, count)));

  Eigen::BDCSVD<DenseC> svd(K, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::Index n = sv.size();
  for (Eigen::Index k = n - 1; k >= 0; --k) out.singular_values.push_back(sv[k]);
  out.smallest_singular = out.singular_values.front();
  std::vector<Eigen::Index> kernel;
  for (Eigen::Index k = n - 1; k >= 0 && sv[k] < out.kernel_tolerance; --k) kernel.push_back(k);
  out.kernel_dim = static_cast<int>(kernel.size());
  DenseC Y(K.cols(), out.kernel_dim);
  for (int k = 0; k < out.kernel_dim; ++k) Y.col(k) = svd.matrixV().col(kernel[k]);
  out.kernel_basis = kernel_fields(pen.Z, Y, op.grid.size());
  return out;
}

std::vector<std::array<int, 3>> mode_box(int cutoff) {
  std::vector<std::array<int, 3>> out;
  for (int a = -cutoff; a <= cutoff; ++a) {
    for (int b = -cutoff; b <= cutoff; ++b) {
      for (int c = -cutoff; c <= cutoff; ++c) out.push_back({a, b, c});
    }
  }
  return out;
}

KernelReport kernel_report(const GeometrySpec& geom, const BoundaryConditionSpec& spec,
                           const std::vector<std::array<int, 3>>& modes, int points, int count,
                           int jobs, const SpectralOptions& options) {
  const Grid1D grid(geom.half_width(), points);
  std::vector<std::optional<SpectralResult>> slots(modes.size());
  parallel_for(modes.size(), jobs, [&](std::size_t i) {
    const ModeIndex mode = make_mode(geom, modes[i]);
    slots[i] = mode_spectrum(assemble_mode_operator(geom, spec, mode, grid), count, options);
  });
  KernelReport out;
  out.gap = std::numeric_limits<double>::infinity();
  out.min_singular = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    SpectralResult& r = *slots[i];
    out.total_kernel_dim += r.kernel_dim;
    if (r.kernel_dim > 0) out.kernel_modes.push_back(modes[i]);
    if (!r.eigenvalues.empty()) out.gap = std::min(out.gap, std::abs(r.eigenvalues.front()));
    out.min_singular = std::min(out.min_singular, r.smallest_singular);
    out.results.push_back(std::move(r));
  }
  return out;
}

std::vector<ModeTensor2> analytic_zero_modes(const Grid1D& grid) {
  std::vector<ModeTensor2> out;
  for (int c : {kSS, kS1, kS2, kS3}) {
    ModeTensor2 u(grid.size());
    u.component(c).setConstant(1.0);
    out.push_back(u);
  }
  ModeTensor2 id(grid.size());
  for (int c : {k11, k22, k33}) id.component(c).setConstant(1.0);
  out.push_back(id);
  return out;
}

namespace {

DenseC orthonormal_columns(const std::vector<ModeTensor2>& fields) {
  DenseC X(fields.front().flatten().size(), static_cast<Eigen::Index>(fields.size()));
  for (std::size_t k = 0; k < fields.size(); ++k) X.col(k) = fields[k].flatten();
  return orthonormalize(X);
}

}  // namespace

double subspace_distance(const std::vector<ModeTensor2>& a, const std::vector<ModeTensor2>& b) {
  if (a.size() != b.size() || a.empty()) return 1.0;
  const DenseC Qa = orthonormal_columns(a);
  const DenseC Qb = orthonormal_columns(b);
  const DenseC residual = Qb - Qa * (Qa.adjoint() * Qb);
  Eigen::JacobiSVD<DenseC> svd(residual);
  return std::min(1.0, svd.singularValues()[0]);
}

namespace {

double quintic_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

}  // namespace

std::vector<ModeTensor2> constrained_samples(const ModeOperator& op, int samples,
                                             unsigned long long seed) {
  const Grid1D& grid = op.grid;
  const int M = grid.size();
  const double T = grid.half_width();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  constexpr int kPowers = 3;

  std::vector<ModeTensor2> out;
  for (int n = 0; n < samples; ++n) {
    ModeTensor2 u(M);
    for (int c = 0; c < kTensor2Components; ++c) {
      for (int k = 1; k <= 3; ++k) {
        const cplx amp(unit(rng), unit(rng));
        const double freq = 0.5 * k * std::numbers::pi / T;
        const double shift = phase(rng);
        for (int j = 0; j < M; ++j) u(c, j) += amp * std::sin(freq * grid.s(j) + shift);
      }
    }
    for (const ConstraintBlock& block : op.constraints) {
      const double sb = grid.s(grid.boundary_node(block.side));
      auto basis = [&](int p, double s) {
        const double cutoff = 1.0 - quintic_step(std::abs(s - sb) / (0.5 * T));
        return cutoff * std::pow((s - sb) / T, p);
      };
      const int width = static_cast<int>(block.nodes.size());
      DenseC Bm = DenseC::Zero(10, kTensor2Components * kPowers);
      for (int c = 0; c < kTensor2Components; ++c) {
        for (int p = 0; p < kPowers; ++p) {
          for (int q = 0; q < width; ++q) {
            Bm.col(c * kPowers + p) += block.rows.col(c * width + q) * basis(p, grid.s(block.nodes[q]));
          }
        }
      }
      const Eigen::VectorXcd r = block.apply(u);
      const Eigen::VectorXcd coef =
          Bm.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-r);
      for (int c = 0; c < kTensor2Components; ++c) {
        for (int p = 0; p < kPowers; ++p) {
          const cplx a = coef[c * kPowers + p];
          for (int j = 0; j < M; ++j) u(c, j) += a * basis(p, grid.s(j));
        }
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

double symmetry_defect(const ModeOperator& op, const GeometrySpec& geom,
                       const std::vector<ModeTensor2>& samples, PairingKind pairing) {
  auto pair = [&](const ModeTensor2& x, const ModeTensor2& y) {
    return pairing == PairingKind::TraceReversed ? inner_product_I(x, y, op.grid, geom)
                                                 : inner_product_V2(x, y, op.grid, geom);
  };
  std::vector<ModeTensor2> images;
  std::vector<double> norms;
  for (const ModeTensor2& u : samples) {
    images.push_back(op.apply_interior(u));
    norms.push_back(std::sqrt(std::abs(inner_product_V2(u, u, op.grid, geom))));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const cplx lhs = pair(images[i], samples[j]);
      const cplx rhs = pair(samples[i], images[j]);
      worst = std::max(worst, std::abs(lhs - rhs) / (norms[i] * norms[j]));
    }
  }
  return worst;
}

}  // namespace linbc
