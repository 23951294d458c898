#include "umfpack_lu.hpp"

#include <stdexcept>
#include <string>

#include <umfpack.h>

namespace linbc {

namespace {

using cplx = std::complex<double>;
using RowBlock = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Symbolic {
  void* ptr = nullptr;
  ~Symbolic() {
    if (ptr) umfpack_zi_free_symbolic(&ptr);
  }
};

struct Numeric {
  void* ptr = nullptr;
  ~Numeric() {
    if (ptr) umfpack_zi_free_numeric(&ptr);
  }
};

[[noreturn]] void fail(const char* what, const char* stage, int status) {
  throw std::runtime_error(std::string("sparse factorization failed: ") + what + " (" + stage +
                           ", status " + std::to_string(status) + ")");
}

// row(dst) -= coeff * row(src) over p contiguous entries, in real arithmetic.
inline void axpy_row(cplx* dst, const cplx* src, cplx coeff, Eigen::Index p) {
  double* d = reinterpret_cast<double*>(dst);
  const double* s = reinterpret_cast<const double*>(src);
  const double cr = coeff.real();
  const double ci = coeff.imag();
  for (Eigen::Index c = 0; c < p; ++c) {
    const double sr = s[2 * c];
    const double si = s[2 * c + 1];
    d[2 * c] -= cr * sr - ci * si;
    d[2 * c + 1] -= cr * si + ci * sr;
  }
}

inline void scale_row(cplx* row, cplx divisor, Eigen::Index p) {
  const cplx inv = 1.0 / divisor;
  double* d = reinterpret_cast<double*>(row);
  for (Eigen::Index c = 0; c < p; ++c) {
    const double r = d[2 * c];
    const double i = d[2 * c + 1];
    d[2 * c] = inv.real() * r - inv.imag() * i;
    d[2 * c + 1] = inv.real() * i + inv.imag() * r;
  }
}

}  // namespace

UmfpackLU::UmfpackLU(const Matrix& A, const char* what) : n_(static_cast<int>(A.rows())) {
  if (A.rows() != A.cols()) throw std::invalid_argument("UmfpackLU needs a square matrix");
  Matrix M = A;
  M.makeCompressed();
  const int* Ap = M.outerIndexPtr();
  const int* Ai = M.innerIndexPtr();
  const double* Ax = reinterpret_cast<const double*>(M.valuePtr());

  double control[UMFPACK_CONTROL];
  umfpack_zi_defaults(control);
  control[UMFPACK_STRATEGY] = UMFPACK_STRATEGY_UNSYMMETRIC;
  control[UMFPACK_ORDERING] = UMFPACK_ORDERING_AMD;
  Symbolic sym;
  int status = umfpack_zi_symbolic(n_, n_, Ap, Ai, Ax, nullptr, &sym.ptr, control, nullptr);
  if (status != UMFPACK_OK) fail(what, "symbolic", status);
  Numeric num;
  status = umfpack_zi_numeric(Ap, Ai, Ax, nullptr, sym.ptr, &num.ptr, control, nullptr);
  if (status != UMFPACK_OK) fail(what, "numeric", status);

  int lnz = 0, unz = 0, rows = 0, cols = 0, nz_udiag = 0;
  umfpack_zi_get_lunz(&lnz, &unz, &rows, &cols, &nz_udiag, num.ptr);
  lp_.resize(n_ + 1);
  lj_.resize(lnz);
  lx_.resize(lnz);
  up_.resize(n_ + 1);
  ui_.resize(unz);
  ux_.resize(unz);
  p_.resize(n_);
  q_.resize(n_);
  row_scale_.resize(n_);
  int do_recip = 0;
  status = umfpack_zi_get_numeric(lp_.data(), lj_.data(), reinterpret_cast<double*>(lx_.data()),
                                  nullptr, up_.data(), ui_.data(),
                                  reinterpret_cast<double*>(ux_.data()), nullptr, p_.data(),
                                  q_.data(), nullptr, nullptr, &do_recip, row_scale_.data(),
                                  num.ptr);
  if (status != UMFPACK_OK) fail(what, "extract", status);
  if (!do_recip) {
    for (double& r : row_scale_) r = 1.0 / r;
  }
}

UmfpackLU::Block UmfpackLU::solve(const Block& B) const {
  if (B.rows() != n_) throw std::invalid_argument("right-hand side has the wrong size");
  const Eigen::Index p = B.cols();
  RowBlock Y(n_, p);
  for (int k = 0; k < n_; ++k) Y.row(k) = row_scale_[p_[k]] * B.row(p_[k]);
  cplx* y = Y.data();

  // L in row form, diagonal last in each row.
  for (int i = 0; i < n_; ++i) {
    const int last = lp_[i + 1] - 1;
    for (int e = lp_[i]; e < last; ++e) axpy_row(y + i * p, y + lj_[e] * p, lx_[e], p);
    scale_row(y + i * p, lx_[last], p);
  }
  // U in column form, diagonal last in each column.
  for (int j = n_ - 1; j >= 0; --j) {
    const int last = up_[j + 1] - 1;
    scale_row(y + j * p, ux_[last], p);
    for (int e = up_[j]; e < last; ++e) axpy_row(y + ui_[e] * p, y + j * p, ux_[e], p);
  }

  Block X(n_, p);
  for (int k = 0; k < n_; ++k) X.row(q_[k]) = Y.row(k);
  return X;
}

}  // namespace linbc
