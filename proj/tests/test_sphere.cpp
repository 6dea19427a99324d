#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "swcv/sphere.hpp"

using swcv::Matrix;
using swcv::RowMatrix;
using swcv::SequenceKind;
using swcv::Vector;

namespace {

// x^k mod poly over GF(2); polynomials are bit masks with bit i = coefficient of x^i.
std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t poly, unsigned deg) {
  std::uint64_t r = 0;
  while (b) {
    if (b & 1U) r ^= a;
    b >>= 1;
    a <<= 1;
    if (a & (std::uint64_t{1} << deg)) a ^= poly;
  }
  return r;
}

std::uint64_t powmod_x(std::uint64_t e, std::uint64_t poly, unsigned deg) {
  std::uint64_t result = 1;
  std::uint64_t base = 2;  // x
  if (deg == 1) base = 2 ^ poly;
  while (e) {
    if (e & 1U) result = mulmod(result, base, poly, deg);
    base = mulmod(base, base, poly, deg);
    e >>= 1;
  }
  return result;
}

bool is_primitive(std::uint64_t poly, unsigned deg) {
  const std::uint64_t order = (std::uint64_t{1} << deg) - 1;
  if (powmod_x(order, poly, deg) != 1) return false;
  std::uint64_t rest = order;
  for (std::uint64_t q = 2; q <= rest; ++q) {
    if (rest % q != 0) continue;
    if (powmod_x(order / q, poly, deg) == 1) return false;
    while (rest % q == 0) rest /= q;
  }
  return true;
}

}  // namespace

TEST(SampleUniform, UnitRowsAndDeterminism) {
  const auto a = swcv::sample_uniform(1000, 3, 42);
  const auto b = swcv::sample_uniform(1000, 3, 42);
  EXPECT_TRUE(a.matrix() == b.matrix());
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a.matrix().row(i).norm(), 1.0, 1e-12);
  EXPECT_LT(a.matrix().colwise().mean().norm(), 0.1);
  EXPECT_THROW(swcv::sample_uniform(10, 1, 0), std::invalid_argument);
  EXPECT_EQ(a.provenance().source, swcv::Provenance::Source::monte_carlo);
}

TEST(SampleUniform, SecondMomentIsIsotropic) {
  const auto dirs = swcv::sample_uniform(100000, 3, 7);
  const Matrix second = dirs.matrix().transpose() * dirs.matrix() / 100000.0;
  EXPECT_LT((second - Matrix::Identity(3, 3) / 3.0).norm(), 0.02);
}

TEST(InverseNormal, Accuracy) {
  EXPECT_EQ(swcv::inverse_normal_cdf(0.5), 0.0);
  EXPECT_NEAR(swcv::inverse_normal_cdf(0.975), 1.959963984540054, 1e-9);
  for (double u : {1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.49999, 0.6, 0.9, 0.999, 1 - 1e-9}) {
    const double x = swcv::inverse_normal_cdf(u);
    EXPECT_NEAR(0.5 * std::erfc(-x / std::sqrt(2.0)), u, 1e-9) << u;
    // 1 - u is rounded; compare against the exact complement of what was passed in.
    const double v = 1.0 - u;
    EXPECT_NEAR(swcv::inverse_normal_cdf(v), -swcv::inverse_normal_cdf(1.0 - v), 1e-10 * std::max(1.0, std::abs(x))) << u;
  }
  EXPECT_THROW(swcv::inverse_normal_cdf(0.0), std::domain_error);
  EXPECT_THROW(swcv::inverse_normal_cdf(1.0), std::domain_error);
}

TEST(LowDiscrepancy, HaltonFirstPoints) {
  const RowMatrix u = swcv::low_discrepancy(3, 2, SequenceKind::halton);
  EXPECT_DOUBLE_EQ(u(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(u(0, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(u(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(u(1, 1), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(u(2, 0), 0.75);
  EXPECT_DOUBLE_EQ(u(2, 1), 1.0 / 9.0);
}

TEST(LowDiscrepancy, OpenUnitCube) {
  for (auto kind : {SequenceKind::sobol, SequenceKind::halton}) {
    const RowMatrix u = swcv::low_discrepancy(4096, 21, kind);
    EXPECT_GT(u.minCoeff(), 0.0);
    EXPECT_LT(u.maxCoeff(), 1.0);
    for (Eigen::Index i = 0; i < u.rows(); ++i) EXPECT_FALSE((u.row(i).array() == 0.5).all());
  }
  EXPECT_THROW(swcv::low_discrepancy(10, 22, SequenceKind::sobol), std::invalid_argument);
  EXPECT_NO_THROW(swcv::low_discrepancy(10, 40, SequenceKind::halton));
}

TEST(LowDiscrepancy, SobolEquidistribution) {
  const RowMatrix u = swcv::low_discrepancy(1024, 21, SequenceKind::sobol);
  for (Eigen::Index k = 0; k < 21; ++k) EXPECT_NEAR(u.col(k).mean(), 0.5, 0.01) << "coordinate " << k;
  // Each coordinate of the first 2^10 points hits every dyadic interval of width 2^-10 once.
  for (Eigen::Index k = 0; k < 21; ++k) {
    std::vector<int> hits(1024, 0);
    for (Eigen::Index i = 0; i < 1023; ++i) ++hits[static_cast<std::size_t>(u(i, k) * 1024)];
    EXPECT_LE(*std::max_element(hits.begin(), hits.end()), 1) << "coordinate " << k;
  }
}

TEST(LowDiscrepancy, SobolPolynomialsArePrimitive) {
  for (const auto& poly : swcv::detail::kSobolTable) {
    std::uint64_t mask = (std::uint64_t{1} << poly.s) | 1U;
    for (unsigned j = 1; j < poly.s; ++j) {
      if ((poly.a >> (poly.s - 1 - j)) & 1U) mask |= std::uint64_t{1} << (poly.s - j);
    }
    EXPECT_TRUE(is_primitive(mask, poly.s)) << "degree " << poly.s << " a " << poly.a;
    for (unsigned k = 0; k < poly.s; ++k) {
      EXPECT_EQ(poly.m[k] % 2, 1U);
      EXPECT_LT(poly.m[k], 1U << (k + 1));
    }
  }
}

TEST(QmcDirections, UnitAndCentered) {
  const auto dirs = swcv::qmc_directions(500, 3, SequenceKind::sobol);
  for (Eigen::Index i = 0; i < dirs.size(); ++i) EXPECT_NEAR(dirs.matrix().row(i).norm(), 1.0, 1e-12);
  EXPECT_NEAR(dirs.matrix().col(0).mean(), 0.0, 0.05);
  const auto again = swcv::qmc_directions(500, 3, SequenceKind::sobol);
  EXPECT_TRUE(dirs.matrix() == again.matrix());
}

TEST(Rotation, OrthogonalAndIsometric) {
  for (Eigen::Index d : {2, 3, 5, 10}) {
    const Matrix r = swcv::random_rotation(d, 99 + static_cast<std::uint64_t>(d));
    EXPECT_LE((r.transpose() * r - Matrix::Identity(d, d)).norm(), 1e-10);
    EXPECT_NEAR(std::abs(r.determinant()), 1.0, 1e-8);
  }
  const auto base = swcv::qmc_directions(64, 4, SequenceKind::halton);
  const auto rotated = swcv::rotate(base, swcv::random_rotation(4, 5), {});
  const Matrix g0 = base.matrix() * base.matrix().transpose();
  const Matrix g1 = rotated.matrix() * rotated.matrix().transpose();
  EXPECT_LE((g0 - g1).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Rotation, HaarFirstColumnIsUniform) {
  // The first column of a Haar rotation is uniform on the sphere: its mean vanishes.
  Vector acc = Vector::Zero(3);
  for (std::uint64_t s = 0; s < 4000; ++s) acc += swcv::random_rotation(3, s).col(0);
  EXPECT_LT((acc / 4000.0).norm(), 0.06);
}

TEST(Rqmc, DeterministicAndNearlySymmetric) {
  const auto a = swcv::rqmc_directions(1024, 3, SequenceKind::sobol, 17);
  const auto b = swcv::rqmc_directions(1024, 3, SequenceKind::sobol, 17);
  EXPECT_TRUE(a.matrix() == b.matrix());
  EXPECT_EQ(a.provenance().source, swcv::Provenance::Source::rqmc);
  Vector c(3);
  c << 1.0, -2.0, 0.5;
  EXPECT_LE(std::abs((a.matrix() * c).mean()), 1e-2 * c.norm());
}

TEST(DirectionSetTest, RejectsNonUnitRows) {
  RowMatrix m(2, 2);
  m << 1, 0, 0.5, 0.5;
  EXPECT_THROW(swcv::DirectionSet{m}, std::invalid_argument);
}
