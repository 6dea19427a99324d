#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "swcv/harmonics.hpp"

using swcv::Matrix;
using swcv::RowMatrix;
using swcv::Vector;

namespace {

// Column ranges of each degree block.
std::vector<std::pair<Eigen::Index, Eigen::Index>> block_ranges(const swcv::HarmonicBasis& b) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  Eigen::Index start = 0;
  for (const auto& blk : b.blocks()) {
    out.emplace_back(start, blk.count);
    start += blk.count;
  }
  return out;
}

// Monomial exponents of total degree `deg` in d variables.
void monomials(int d, int deg, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d - 1) {
    cur.push_back(deg);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= deg; ++k) {
    cur.push_back(k);
    monomials(d, deg - k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TEST(Counting, Examples) {
  EXPECT_EQ(swcv::count_degree(3, 2), 5U);
  EXPECT_EQ(swcv::count_degree(2, 5), 2U);
  EXPECT_EQ(swcv::count_degree(5, 2), 14U);
  EXPECT_EQ(swcv::count_degree(7, 0), 1U);
  for (int l = 1; l < 20; ++l) EXPECT_EQ(swcv::count_degree(3, l), static_cast<std::uint64_t>(2 * l + 1));
}

TEST(Counting, CumulativeTable) {
  EXPECT_EQ(swcv::count_even_cumulative(3, 8), 152U);
  EXPECT_EQ(swcv::count_even_cumulative(5, 3), 209U);
  EXPECT_EQ(swcv::count_even_cumulative(6, 2), 125U);
  EXPECT_EQ(swcv::count_even_cumulative(10, 2), 714U);
  EXPECT_EQ(swcv::count_even_cumulative(20, 2), 8854U);
  for (int half = 1; half < 30; ++half) EXPECT_EQ(swcv::count_even_cumulative(2, half), static_cast<std::uint64_t>(2 * half));
}

TEST(Counting, OverflowIsReported) {
  EXPECT_THROW(swcv::count_degree(2000, 2000), std::overflow_error);
  EXPECT_THROW(swcv::count_even_cumulative(500, 500), std::overflow_error);
  EXPECT_THROW(swcv::count_degree(1, 2), std::invalid_argument);
}

TEST(Gegenbauer, MatchesExplicitSum) {
  for (double alpha : {0.5, 1.0, 1.5, 4.0, 9.0}) {
    for (int l = 0; l <= 8; ++l) {
      const swcv::GegenbauerEvaluator g(l, alpha);
      for (double z = -1.0; z <= 1.0; z += 0.05) {
        const double ref = oracle::gegenbauer_sum(l, alpha, z);
        EXPECT_NEAR(g(z), ref, 1e-10 * std::max(1.0, std::abs(ref))) << "l=" << l << " alpha=" << alpha << " z=" << z;
      }
    }
  }
}

TEST(Gegenbauer, SpecialValues) {
  for (double alpha : {0.5, 1.5, 3.0}) {
    EXPECT_EQ(swcv::GegenbauerEvaluator(0, alpha)(0.3), 1.0);
    EXPECT_NEAR(swcv::GegenbauerEvaluator(1, alpha)(0.3), 2.0 * alpha * 0.3, 1e-15);
    for (int l = 0; l < 12; ++l) {
      const double at_one = std::tgamma(2 * alpha + l) / (std::tgamma(2 * alpha) * std::tgamma(l + 1.0));
      EXPECT_NEAR(swcv::GegenbauerEvaluator(l, alpha)(1.0), at_one, 1e-10 * at_one);
    }
  }
  EXPECT_THROW(swcv::GegenbauerEvaluator(2, 1.0)(1.1), std::domain_error);
  EXPECT_NO_THROW(swcv::GegenbauerEvaluator(2, 1.0)(1.0 + 1e-13));
}

TEST(Basis, CircleValues) {
  const auto b = swcv::build_basis(2, 1, 0);
  ASSERT_EQ(b.size(), 2);
  RowMatrix t(1, 2);
  t << 1.0, 0.0;
  const Matrix phi = b.evaluate_rows(t);
  EXPECT_NEAR(phi(0, 0), std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(phi(0, 1), 0.0, 1e-15);
  const auto b4 = swcv::build_basis(2, 3, 0);
  const double ang = 0.7;
  RowMatrix u(1, 2);
  u << std::cos(ang), std::sin(ang);
  const Matrix p4 = b4.evaluate_rows(u);
  for (int k = 0; k < 3; ++k) {
    const int l = 2 * (k + 1);
    EXPECT_NEAR(p4(0, 2 * k), std::numbers::sqrt2 * std::cos(l * ang), 1e-13);
    EXPECT_NEAR(p4(0, 2 * k + 1), std::numbers::sqrt2 * std::sin(l * ang), 1e-13);
  }
}

TEST(Basis, Sizes) {
  EXPECT_EQ(swcv::build_basis(3, 1, 0).size(), 5);
  EXPECT_EQ(swcv::build_basis(3, 8, 0).size(), 152);
  EXPECT_EQ(swcv::build_basis(5, 3, 0).size(), 209);
  for (const auto& blk : swcv::build_basis(4, 3, 0).blocks()) EXPECT_EQ(blk.degree % 2, 0);
}

TEST(Basis, AdditionFormulaConstancy) {
  for (int d : {2, 3, 4, 5, 7}) {
    const auto b = swcv::build_basis(d, 2, 3);
    const auto dirs = swcv::sample_uniform(100, d, 4);
    const Matrix phi = b.evaluate(dirs);
    const auto ranges = block_ranges(b);
    for (std::size_t k = 0; k < ranges.size(); ++k) {
      const auto n_l = static_cast<double>(swcv::count_degree(d, b.blocks()[k].degree));
      for (Eigen::Index i = 0; i < phi.rows(); ++i) {
        const double s = phi.row(i).segment(ranges[k].first, ranges[k].second).squaredNorm();
        EXPECT_NEAR(s / n_l, 1.0, 1e-8) << "d=" << d << " degree " << b.blocks()[k].degree;
      }
    }
  }
}

TEST(Basis, ParityAndFiniteness) {
  for (int d : {2, 3, 5}) {
    const auto b = swcv::build_basis(d, 2, 1);
    const auto dirs = swcv::sample_uniform(50, d, 2);
    const Matrix plus = b.evaluate(dirs);
    const Matrix minus = b.evaluate_rows(-dirs.matrix());
    EXPECT_TRUE(plus.allFinite());
    EXPECT_LE((plus - minus).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Basis, PolesAreFinite) {
  const auto b = swcv::build_basis(3, 4, 0);
  RowMatrix poles(2, 3);
  poles << 0, 0, 1, 0, 0, -1;
  const Matrix phi = b.evaluate_rows(poles);
  EXPECT_TRUE(phi.allFinite());
}

TEST(Basis, EmpiricalOrthonormality) {
  for (int d : {3, 5}) {
    const auto b = swcv::build_basis(d, 2, 9);
    const auto dirs = swcv::sample_uniform(100000, d, 10);
    const Matrix phi = b.evaluate(dirs);
    const Matrix gram = phi.transpose() * phi / 100000.0;
    EXPECT_LE((gram - Matrix::Identity(b.size(), b.size())).cwiseAbs().maxCoeff(), 0.05) << "d=" << d;
    EXPECT_LE(phi.colwise().mean().cwiseAbs().maxCoeff(), 0.02) << "d=" << d;
  }
}

TEST(Basis, QuadratureOrthonormalityOnS2) {
  // Exact quadrature removes sampling noise: the d=3 basis is orthonormal to round-off.
  const auto b = swcv::build_basis(3, 3, 0);
  const Eigen::Index s = b.size();
  Matrix gram = Matrix::Zero(s, s);
  Vector mean = Vector::Zero(s);
  std::vector<double> x;
  std::vector<double> w;
  oracle::gauss_legendre(12, x, w);
  const int nphi = 24;
  for (std::size_t i = 0; i < x.size(); ++i) {
    RowMatrix ring(nphi, 3);
    const double r = std::sqrt(1.0 - x[i] * x[i]);
    for (int k = 0; k < nphi; ++k) {
      const double t = 2.0 * std::numbers::pi * (k + 0.5) / nphi;
      ring.row(k) << r * std::cos(t), r * std::sin(t), x[i];
    }
    const Matrix phi = b.evaluate_rows(ring);
    gram += (w[i] / (2.0 * nphi)) * phi.transpose() * phi;
    mean += (w[i] / (2.0 * nphi)) * phi.colwise().sum().transpose();
  }
  EXPECT_LE((gram - Matrix::Identity(s, s)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Basis, CrossDegreeOrthogonality) {
  const auto b = swcv::build_basis(6, 2, 5);
  const auto dirs = swcv::sample_uniform(100000, 6, 6);
  const Matrix phi = b.evaluate(dirs);
  const auto ranges = block_ranges(b);
  const Matrix cross = phi.middleCols(ranges[0].first, ranges[0].second).transpose() *
                       phi.middleCols(ranges[1].first, ranges[1].second) / 100000.0;
  EXPECT_LE(cross.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Basis, Deterministic) {
  const auto a = swcv::build_basis(5, 2, 77);
  const auto b = swcv::build_basis(5, 2, 77);
  const auto dirs = swcv::sample_uniform(20, 5, 1);
  EXPECT_TRUE(a.evaluate(dirs) == b.evaluate(dirs));
}

TEST(Basis, FundamentalSystemIsHomogeneousPolynomial) {
  // Each degree-l function must match a degree-l homogeneous polynomial fitted by least squares.
  const int d = 4;
  const auto b = swcv::build_basis(d, 2, 13);
  const auto ranges = block_ranges(b);
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const int l = b.blocks()[k].degree;
    std::vector<std::vector<int>> mons;
    std::vector<int> cur;
    monomials(d, l, cur, mons);
    const auto m = static_cast<Eigen::Index>(mons.size());
    const auto pts = swcv::sample_uniform(2 * m, d, 14 + k);
    Matrix design(2 * m, m);
    for (Eigen::Index i = 0; i < 2 * m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        double v = 1.0;
        for (int c = 0; c < d; ++c) v *= std::pow(pts.matrix()(i, c), mons[static_cast<std::size_t>(j)][c]);
        design(i, j) = v;
      }
    }
    const Matrix phi = b.evaluate(pts).middleCols(ranges[k].first, ranges[k].second);
    const auto qr = design.colPivHouseholderQr();
    const Matrix coef = qr.solve(phi);
    EXPECT_LE((design * coef - phi).cwiseAbs().maxCoeff(), 1e-8) << "degree " << l;
  }
}

TEST(Basis, CapKeepsLeadingFunctions) {
  swcv::BasisOptions opts;
  opts.max_functions = 30;
  const auto capped = swcv::build_basis(5, 2, 3, opts);
  EXPECT_EQ(capped.size(), 30);
  const auto full = swcv::build_basis(5, 2, 3);
  const auto dirs = swcv::sample_uniform(10, 5, 2);
  // The degree-2 block is complete in both and built from the same candidate pool.
  EXPECT_LE((capped.evaluate(dirs).leftCols(14) - full.evaluate(dirs).leftCols(14)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Basis, DimensionMismatch) {
  const auto b = swcv::build_basis(3, 1, 0);
  EXPECT_THROW((void)b.evaluate(swcv::sample_uniform(5, 4, 0)), std::invalid_argument);
  EXPECT_THROW(swcv::build_basis(1, 1, 0), std::invalid_argument);
  EXPECT_THROW(swcv::build_basis(3, 0, 0), std::invalid_argument);
}
