#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "swcv/detail/numeric.hpp"
#include "swcv/measures.hpp"
#include "swcv/sphere.hpp"

namespace swcv {

namespace detail {

// Symmetric square root with eigenvalues floored at 1e-14 * largest.
inline Matrix sqrtm_spd(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("sqrtm_spd: eigendecomposition failed");
  Vector ev = es.eigenvalues();
  const double floor = 1e-14 * std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::sqrt(std::max(ev[i], floor));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Slice integrand for every row of `dirs`: (theta^T shift)^2 + (sqrt(theta^T A theta) - sqrt(theta^T B theta))^2.
inline Vector gaussian_integrand_rows(const Eigen::Ref<const RowMatrix>& dirs, const Vector& shift, const Matrix& cov_a,
                                      const Matrix& cov_b) {
  const Vector m = dirs * shift;
  const Vector qa = (dirs * cov_a).cwiseProduct(dirs).rowwise().sum();
  const Vector qb = (dirs * cov_b).cwiseProduct(dirs).rowwise().sum();
  Vector out(dirs.rows());
  for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
    const double sd = std::sqrt(qa[i]) - std::sqrt(qb[i]);
    out[i] = m[i] * m[i] + sd * sd;
  }
  return out;
}

}  // namespace detail

/// W_2^2 between Gaussians: |a-b|^2 + Tr A + Tr B - 2 Tr (A^1/2 B A^1/2)^1/2.
inline double bures_w2_squared(const GaussianMeasure& g1, const GaussianMeasure& g2) {
  if (g1.dim() != g2.dim()) throw std::invalid_argument("bures_w2_squared: dimension mismatch");
  const Matrix root_a = detail::sqrtm_spd(g1.covariance());
  Matrix middle = root_a * g2.covariance() * root_a;
  middle = 0.5 * (middle + middle.transpose());
  const Matrix cross = detail::sqrtm_spd(middle);
  const double value = (g1.mean() - g2.mean()).squaredNorm() + g1.covariance().trace() + g2.covariance().trace() -
                       2.0 * cross.trace();
  if (value < -1e-10) throw std::runtime_error("bures_w2_squared: negative result beyond round-off");
  return std::max(value, 0.0);
}

/// W_2^2 between the two projected Gaussians along theta.
inline double gaussian_integrand(const GaussianMeasure& g1, const GaussianMeasure& g2,
                                 const Eigen::Ref<const Vector>& theta) {
  if (g1.dim() != g2.dim()) throw std::invalid_argument("gaussian_integrand: dimension mismatch");
  const auto p1 = project_gaussian(g1, theta);
  const auto p2 = project_gaussian(g2, theta);
  const double shift = p1.mean - p2.mean;
  const double spread = std::sqrt(p1.variance) - std::sqrt(p2.variance);
  return shift * shift + spread * spread;
}

/// Closed-form SW_2^2 when the second covariance is gamma times the first.
inline double sw2_gaussian_proportional(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                                        const Matrix& cov_a, double gamma, Eigen::Index d) {
  if (!(gamma > 0.0)) throw std::invalid_argument("sw2_gaussian_proportional: gamma must be > 0");
  if (a.size() != d || b.size() != d || cov_a.rows() != d || cov_a.cols() != d) {
    throw std::invalid_argument("sw2_gaussian_proportional: dimension mismatch");
  }
  const double dd = static_cast<double>(d);
  const double spread = 1.0 - std::sqrt(gamma);
  return (a - b).squaredNorm() / dd + spread * spread * cov_a.trace() / dd;
}

struct ReferenceValue {
  double value = 0.0;
  double standard_error = 0.0;
};

/// RQMC reference for SW_2^2 between arbitrary Gaussians: the Sobol point set of size
/// n_ref / 10 is rotated by 10 independent Haar rotations; the standard error comes from
/// the spread of the 10 rotated means.
inline ReferenceValue sw2_gaussian_reference(const GaussianMeasure& g1, const GaussianMeasure& g2, Eigen::Index n_ref,
                                             std::uint64_t seed) {
  if (n_ref < 1'000'000) throw std::invalid_argument("sw2_gaussian_reference: n_ref must be >= 1e6");
  if (g1.dim() != g2.dim()) throw std::invalid_argument("sw2_gaussian_reference: dimension mismatch");
  constexpr int kRotations = 10;
  const Eigen::Index d = g1.dim();
  const Eigen::Index per = n_ref / kRotations;
  const SequenceKind kind = d <= detail::kSobolMaxDim ? SequenceKind::sobol : SequenceKind::halton;
  const DirectionSet base = qmc_directions(per, d, kind);
  const Vector shift = g1.mean() - g2.mean();
  std::array<double, kRotations> means{};
  for (int r = 0; r < kRotations; ++r) {
    const Matrix rot = random_rotation(d, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    // With theta = R v: theta^T S theta = v^T (R^T S R) v.
    const Matrix a = rot.transpose() * g1.covariance() * rot;
    const Matrix b = rot.transpose() * g2.covariance() * rot;
    const Vector s = rot.transpose() * shift;
    detail::CompensatedSum acc;
    constexpr Eigen::Index kBlock = 4096;
    for (Eigen::Index start = 0; start < per; start += kBlock) {
      const Eigen::Index len = std::min(kBlock, per - start);
      const Vector vals = detail::gaussian_integrand_rows(base.matrix().middleRows(start, len), s, a, b);
      for (Eigen::Index i = 0; i < len; ++i) acc.add(vals[i]);
    }
    means[static_cast<std::size_t>(r)] = acc.value() / static_cast<double>(per);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= kRotations;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (kRotations - 1);
  return {mean, std::sqrt(var / kRotations)};
}

}  // namespace swcv
