#pragma once

// Sparse LU of a square complex matrix from UMFPACK, P R A Q = L U, with the
// factors copied out so that blocks of right-hand sides can be solved by
// row-oriented substitution.

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace linbc {

class UmfpackLU {
 public:
  using Matrix = Eigen::SparseMatrix<std::complex<double>, Eigen::ColMajor, int>;
  using Block = Eigen::MatrixXcd;

  /// Throws std::runtime_error (naming `what`) if the matrix is singular or
  /// UMFPACK fails.
  UmfpackLU(const Matrix& A, const char* what);

  Block solve(const Block& B) const;
  int size() const { return n_; }

 private:
  int n_ = 0;
  std::vector<int> lp_, lj_, up_, ui_, p_, q_;
  std::vector<std::complex<double>> lx_, ux_;
  std::vector<double> row_scale_;  // multiply row i of A by this
};

}  // namespace linbc
