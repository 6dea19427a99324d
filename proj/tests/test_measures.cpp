#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "swcv/measures.hpp"

using swcv::DiscreteMeasure;
using swcv::GaussianMeasure;
using swcv::RowMatrix;
using swcv::Vector;

namespace {

RowMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  RowMatrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST(Project, AxisProjection) {
  const auto mu = DiscreteMeasure::uniform(rows({{0, 0}, {1, 0}}));
  const auto p = swcv::project(mu, vec({1, 0}));
  EXPECT_DOUBLE_EQ(p.values[0], 0.0);
  EXPECT_DOUBLE_EQ(p.values[1], 1.0);
  EXPECT_DOUBLE_EQ(p.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(p.weights[1], 0.5);
}

TEST(Project, SecondAxis) {
  const auto mu = DiscreteMeasure::uniform(rows({{0, 0}, {1, 1}}));
  const auto p = swcv::project(mu, vec({0, 1}));
  EXPECT_DOUBLE_EQ(p.values[0], 0.0);
  EXPECT_DOUBLE_EQ(p.values[1], 1.0);
}

TEST(Project, DiagonalDirection) {
  const auto mu = DiscreteMeasure::uniform(rows({{1, 2, 3}}));
  const Vector theta = Vector::Ones(3) / std::sqrt(3.0);
  EXPECT_NEAR(swcv::project(mu, theta).values[0], 6.0 / std::sqrt(3.0), 1e-12);
}

TEST(Project, RejectsBadDirections) {
  const auto mu = DiscreteMeasure::uniform(rows({{0, 0}, {1, 0}}));
  EXPECT_THROW(swcv::project(mu, vec({1, 0, 0})), std::invalid_argument);
  EXPECT_THROW(swcv::project(mu, vec({1, 1})), std::invalid_argument);
}

TEST(Project, TranslationShiftsValues) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  RowMatrix atoms(20, 4);
  for (Eigen::Index i = 0; i < atoms.size(); ++i) atoms.data()[i] = g(rng);
  const auto mu = DiscreteMeasure::uniform(atoms);
  for (int rep = 0; rep < 10; ++rep) {
    Vector theta(4);
    Vector shift(4);
    for (int k = 0; k < 4; ++k) {
      theta[k] = g(rng);
      shift[k] = 3.0 * g(rng);
    }
    theta.normalize();
    const auto base = swcv::project(mu, theta);
    const auto moved = swcv::project(mu.translated(shift), theta);
    for (Eigen::Index i = 0; i < 20; ++i) EXPECT_NEAR(moved.values[i], base.values[i] + theta.dot(shift), 1e-12);
  }
}

TEST(DiscreteMeasureTest, ValidatesWeights) {
  EXPECT_THROW(DiscreteMeasure(rows({{0.0}, {1.0}}), vec({0.5, 0.6})), std::invalid_argument);
  EXPECT_THROW(DiscreteMeasure(rows({{0.0}, {1.0}}), vec({1.5, -0.5})), std::invalid_argument);
  EXPECT_THROW(DiscreteMeasure(rows({{0.0}, {1.0}}), vec({1.0})), std::invalid_argument);
  EXPECT_NO_THROW(DiscreteMeasure(rows({{0.0}, {1.0}}), vec({0.25, 0.75})));
}

TEST(DiscreteMeasureTest, UniformFlag) {
  EXPECT_TRUE(DiscreteMeasure::uniform(rows({{0.0}, {1.0}, {2.0}})).is_uniform());
  EXPECT_FALSE(DiscreteMeasure(rows({{0.0}, {1.0}}), vec({0.25, 0.75})).is_uniform());
}

TEST(ProjectGaussian, Examples) {
  const GaussianMeasure iso(Vector::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  const auto a = swcv::project_gaussian(iso, Vector::Ones(3).normalized());
  EXPECT_NEAR(a.mean, 0.0, 1e-15);
  EXPECT_NEAR(a.variance, 1.0, 1e-15);

  const GaussianMeasure shifted(vec({1, 1}), Eigen::MatrixXd::Identity(2, 2));
  const auto b = swcv::project_gaussian(shifted, vec({1, 0}));
  EXPECT_DOUBLE_EQ(b.mean, 1.0);
  EXPECT_DOUBLE_EQ(b.variance, 1.0);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov.diagonal() << 1.0, 4.0;
  const auto c = swcv::project_gaussian(GaussianMeasure(Vector::Zero(2), cov), vec({0, 1}));
  EXPECT_DOUBLE_EQ(c.mean, 0.0);
  EXPECT_DOUBLE_EQ(c.variance, 4.0);
}

TEST(ProjectGaussian, VarianceMatchesSamples) {
  Eigen::MatrixXd cov(3, 3);
  cov << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const GaussianMeasure g(vec({1, -1, 0.5}), cov);
  const Vector theta = vec({0.3, -0.5, 0.8}).normalized();
  const Eigen::MatrixXd l = cov.llt().matrixL();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  const int n = 100000;
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Vector z(3);
    for (int k = 0; k < 3; ++k) z[k] = normal(rng);
    const double v = theta.dot(g.mean() + l * z);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(var / swcv::project_gaussian(g, theta).variance, 1.0, 0.05);
}

TEST(GaussianMeasureTest, RejectsInvalidCovariance) {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(GaussianMeasure(Vector::Zero(2), asym), std::invalid_argument);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(GaussianMeasure(Vector::Zero(2), indefinite), std::invalid_argument);
}

TEST(Moment, Examples) {
  const auto origin = DiscreteMeasure::uniform(rows({{0.0, 0.0}}));
  for (double p : {1.0, 2.0, 3.5}) EXPECT_EQ(swcv::moment_p(origin, p), 0.0);
  EXPECT_DOUBLE_EQ(swcv::moment_p(DiscreteMeasure::uniform(rows({{3.0, 4.0}})), 2.0), 25.0);
  const GaussianMeasure g(Vector::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_DOUBLE_EQ(swcv::moment_p(g, 2.0), 3.0);
  EXPECT_THROW(swcv::moment_p(g, 1.0), std::invalid_argument);
  EXPECT_THROW(swcv::moment_p(origin, 0.5), std::invalid_argument);
}

TEST(Moment, MatchesDirectLoop) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  RowMatrix atoms(15, 3);
  Vector w(15);
  for (Eigen::Index i = 0; i < atoms.size(); ++i) atoms.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < 15; ++i) w[i] = u(rng) + 2.5;
  w /= w.sum();
  const DiscreteMeasure mu(atoms, w);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    double direct = 0.0;
    for (Eigen::Index i = 0; i < 15; ++i) direct += w[i] * std::pow(atoms.row(i).norm(), p);
    EXPECT_NEAR(swcv::moment_p(mu, p), direct, 1e-12);
  }
}

TEST(Lipschitz, Examples) {
  EXPECT_DOUBLE_EQ(swcv::lipschitz_bound_from_moments(1.0, 2.0, 3.0), 5.0);
  EXPECT_DOUBLE_EQ(swcv::lipschitz_bound_from_moments(2.0, 1.0, 1.0), 8.0);
  const auto origin = DiscreteMeasure::uniform(rows({{0.0, 0.0}}));
  for (double p : {1.0, 2.0, 3.0}) EXPECT_EQ(swcv::lipschitz_bound(origin, origin, p), 0.0);
}

TEST(PointCloud, ParsesCommentsAndWeights) {
  std::istringstream in("# header\n0 0 2\n\n1 0 6\n");
  const auto mu = swcv::parse_point_cloud(in, true);
  EXPECT_EQ(mu.size(), 2);
  EXPECT_EQ(mu.dim(), 2);
  EXPECT_DOUBLE_EQ(mu.weights()[0], 0.25);
  EXPECT_DOUBLE_EQ(mu.weights()[1], 0.75);

  std::istringstream plain("1 2 3\n4 5 6\n");
  const auto nu = swcv::parse_point_cloud(plain, false);
  EXPECT_EQ(nu.dim(), 3);
  EXPECT_TRUE(nu.is_uniform());
}

TEST(PointCloud, RejectsMalformedInput) {
  std::istringstream ragged("1 2\n3\n");
  EXPECT_THROW(swcv::parse_point_cloud(ragged, false), std::invalid_argument);
  std::istringstream negative("1 2 -1\n3 4 2\n");
  EXPECT_THROW(swcv::parse_point_cloud(negative, true), std::invalid_argument);
  std::istringstream junk("1 x\n");
  EXPECT_THROW(swcv::parse_point_cloud(junk, false), std::invalid_argument);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(swcv::parse_point_cloud(empty, false), std::invalid_argument);
}
