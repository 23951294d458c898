#include <random>

#include <gtest/gtest.h>

#include "umfpack_lu.hpp"

using linbc::UmfpackLU;
using cplx = std::complex<double>;

TEST(UmfpackLU, SolvesRandomSparseSystem) {
  const int n = 300;
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> col(0, n - 1);
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, cplx(10.0 + g(rng), g(rng)));
    for (int k = 0; k < 4; ++k) trip.emplace_back(i, col(rng), cplx(g(rng), g(rng)));
  }
  UmfpackLU::Matrix A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  const UmfpackLU lu(A, "test");
  EXPECT_EQ(lu.size(), n);
  const Eigen::MatrixXcd B = Eigen::MatrixXcd::Random(n, 7);
  const Eigen::MatrixXcd X = lu.solve(B);
  EXPECT_LT((A * X - B).norm(), 1e-10 * B.norm());
  EXPECT_THROW(lu.solve(Eigen::MatrixXcd::Random(n + 1, 1)), std::invalid_argument);
}

TEST(UmfpackLU, SingularMatrixThrows) {
  UmfpackLU::Matrix A(3, 3);
  A.insert(0, 0) = 1.0;
  A.insert(1, 1) = 1.0;
  EXPECT_THROW(UmfpackLU(A, "singular"), std::runtime_error);
}
