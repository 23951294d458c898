#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "linbc/ellipticity.hpp"

using namespace linbc;

namespace {

Mat3 random_symmetric(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat3 s;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) s(i, j) = s(j, i) = u(rng);
  }
  return s;
}

Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

}  // namespace

TEST(ReducedCoefficient, Examples) {
  const Vec3 e1(1.0, 0.0, 0.0), e3(0.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(sl_reduced_coefficient(1.0, Mat3::Zero(), e1), 2.0);
  EXPECT_DOUBLE_EQ(sl_reduced_coefficient(0.0, Mat3::Zero(), Vec3(0.3, -2.0, 1.0)), 0.0);
  const Mat3 s = Vec3(1.0, 1.0, -1.0).asDiagonal();
  EXPECT_NEAR(sl_reduced_coefficient(0.0, s, e1), 0.0, 1e-15);
  EXPECT_NEAR(sl_reduced_coefficient(0.0, s, e3), 2.0, 1e-15);
  EXPECT_THROW(sl_reduced_coefficient(1.0, s, Vec3::Zero()), DomainError);
}

TEST(ReducedCoefficient, HomogeneousOfDegreeOne) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const Mat3 s = random_symmetric(rng, 2.0);
    const Vec3 xi = 3.0 * random_direction(rng);
    const double c2 = std::uniform_real_distribution<double>(-2, 2)(rng);
    EXPECT_NEAR(sl_reduced_coefficient(c2, s, 2.5 * xi), 2.5 * sl_reduced_coefficient(c2, s, xi),
                1e-12);
  }
}

TEST(ReducedCoefficient, IsotropicS) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const Vec3 xi = 1.7 * random_direction(rng);
    EXPECT_NEAR(sl_reduced_coefficient(0.3, 0.8 * Mat3::Identity(), xi),
                1.7 * (2 * 0.3 + 2 * 0.8), 1e-12);
  }
}

TEST(SlCheck, Examples) {
  const SLVerdict anderson = sl_check(1.0, Mat3::Zero());
  EXPECT_TRUE(anderson.elliptic);
  EXPECT_DOUBLE_EQ(anderson.margin, 2.0);
  EXPECT_FALSE(anderson.witness);

  const SLVerdict zero = sl_check(0.0, Mat3::Zero());
  EXPECT_FALSE(zero.elliptic);
  EXPECT_EQ(zero.margin, 0.0);
  ASSERT_TRUE(zero.witness);
  EXPECT_TRUE(zero.witness->isApprox(Vec3(1.0, 0.0, 0.0)));

  const SLVerdict diag = sl_check(0.0, Vec3(1.0, 1.0, -1.0).asDiagonal());
  EXPECT_FALSE(diag.elliptic);
  ASSERT_TRUE(diag.witness);
  EXPECT_NEAR(std::abs((*diag.witness)[0]), 1.0, 1e-12);
}

TEST(SlCheck, WitnessZeroesTheCoefficient) {
  std::mt19937_64 rng(13);
  int failing = 0;
  for (int t = 0; t < 500; ++t) {
    const Mat3 s = random_symmetric(rng, 2.0);
    const double c2 = std::uniform_real_distribution<double>(-2, 2)(rng);
    const SLVerdict v = sl_check(c2, s);
    EXPECT_EQ(v.elliptic, v.margin > 0.0);
    EXPECT_EQ(v.elliptic, !v.witness.has_value());
    if (v.witness) {
      ++failing;
      EXPECT_NEAR(v.witness->norm(), 1.0, 1e-12);
      EXPECT_NEAR(sl_reduced_coefficient(c2, s, *v.witness), 0.0, 1e-10);
    }
  }
  EXPECT_GT(failing, 0);
}

TEST(HalfSpaceKernel, Examples) {
  const Vec3 e1(1.0, 0.0, 0.0);
  EXPECT_EQ(half_space_kernel(BoundaryConditionSpec::anderson(), e1).dimension, 0);
  EXPECT_EQ(half_space_kernel(BoundaryConditionSpec::dirichlet(), e1).dimension, 0);
  EXPECT_EQ(half_space_kernel(BoundaryConditionSpec::anderson(), e1, Side::Upper).dimension, 0);
  EXPECT_THROW(half_space_kernel(BoundaryConditionSpec::anderson(), Vec3::Zero()), DomainError);
}

// With (d) vanishing identically only the (a)-(c) family survives:
// c_ss = -t/3, c_sSigma = (i t / 3) xi/|xi|, c_SigmaSigma = (t/3) delta.
TEST(HalfSpaceKernel, DegenerateScalarConditionLeavesOneMode) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 20; ++t) {
    const Vec3 xi = 2.0 * random_direction(rng);
    const Vec3 dir = xi.normalized();
    const HalfSpaceKernel k = half_space_kernel(BoundaryConditionSpec::general({}), xi);
    ASSERT_EQ(k.dimension, 1);
    Eigen::Matrix<cplx, 10, 1> c = k.basis[0];
    c /= (c[k11] + c[k22] + c[k33]);
    Eigen::Matrix<cplx, 10, 1> want = Eigen::Matrix<cplx, 10, 1>::Zero();
    want[kSS] = -1.0 / 3.0;
    for (int i = 0; i < 3; ++i) want[s_component(i)] = kI * dir[i] / 3.0;
    want[k11] = want[k22] = want[k33] = 1.0 / 3.0;
    EXPECT_LT((c - want).norm(), 1e-10);
  }
}

TEST(HalfSpaceKernel, AgreesWithSlCheck) {
  std::mt19937_64 rng(15);
  int disagreements = 0, non_elliptic = 0;
  for (int t = 0; t < 300; ++t) {
    ConformalCoefficients co;
    co.c2 = std::uniform_real_distribution<double>(-1, 1)(rng);
    co.s = random_symmetric(rng, 1.5);
    const SLVerdict v = sl_check(co.c2, co.s);
    non_elliptic += v.elliptic ? 0 : 1;
    const BoundaryConditionSpec spec = BoundaryConditionSpec::general(co);
    bool all_zero = true;
    for (int d = 0; d < 50; ++d) {
      all_zero = all_zero && half_space_kernel(spec, random_direction(rng)).dimension == 0;
    }
    if (v.witness) {
      all_zero = all_zero && half_space_kernel(spec, *v.witness).dimension == 0;
    }
    if (all_zero != v.elliptic) ++disagreements;
  }
  EXPECT_EQ(disagreements, 0);
  EXPECT_GT(non_elliptic, 10);
}

TEST(SlScan, Examples) {
  EXPECT_TRUE(sl_scan({}, {Mat3::Zero()}).empty());
  EXPECT_TRUE(sl_scan({1.0}, {}).empty());

  const std::vector<double> c2 = linspace(-1.0, 1.0, 21);
  const auto zero = sl_scan(c2, {Mat3::Zero()});
  ASSERT_EQ(zero.size(), 21u);
  for (const SLScanRow& r : zero) {
    EXPECT_EQ(r.verdict.elliptic, std::abs(r.c2) > 1e-15);
    if (r.verdict.elliptic) EXPECT_NEAR(r.verdict.margin, 2.0 * std::abs(r.c2), 1e-14);
  }

  std::vector<Mat3> family;
  for (double t : linspace(0.0, 1.0, 11)) family.push_back(t * Mat3(Vec3(1, 1, -1).asDiagonal()));
  const auto serial = sl_scan(c2, family, 1);
  const auto threaded = sl_scan(c2, family, 4);
  ASSERT_EQ(serial.size(), c2.size() * family.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].c2, c2[i / family.size()]);
    EXPECT_TRUE(serial[i].s.isApprox(family[i % family.size()]) || family[i % family.size()].isZero());
    const SLVerdict direct = sl_check(serial[i].c2, serial[i].s);
    EXPECT_EQ(serial[i].verdict.elliptic, direct.elliptic);
    EXPECT_EQ(serial[i].verdict.margin, threaded[i].verdict.margin);
  }
}

TEST(Linspace, Endpoints) {
  EXPECT_TRUE(linspace(0, 1, 0).empty());
  EXPECT_EQ(linspace(2, 5, 1), std::vector<double>{2.0});
  const auto v = linspace(-1, 1, 5);
  EXPECT_EQ(v.front(), -1.0);
  EXPECT_EQ(v.back(), 1.0);
  EXPECT_DOUBLE_EQ(v[1], -0.5);
}
