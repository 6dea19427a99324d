#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swcv/detail/numeric.hpp"

namespace swcv {

inline constexpr double kWeightTolerance = 1e-12;
inline constexpr double kUnitTolerance = 1e-12;

namespace detail {

inline void check_probability_vector(const Vector& w, const char* what) {
  if (w.size() < 1) throw std::invalid_argument(std::string(what) + ": empty weight vector");
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i])) {
      throw std::invalid_argument(std::string(what) + ": weights must be finite and nonnegative");
    }
  }
  const double total = compensated_sum(w);
  if (std::abs(total - 1.0) > kWeightTolerance) {
    throw std::invalid_argument(std::string(what) + ": weights must sum to 1 (got " + std::to_string(total) + ")");
  }
}

inline void check_direction(const Eigen::Ref<const Vector>& theta, Eigen::Index d) {
  if (theta.size() != d) {
    throw std::invalid_argument("direction has dimension " + std::to_string(theta.size()) + ", expected " +
                                std::to_string(d));
  }
  if (std::abs(theta.norm() - 1.0) > kUnitTolerance) {
    throw std::invalid_argument("direction is not unit-norm within 1e-12");
  }
}

}  // namespace detail

/// Weighted point set in R^d; rows of `atoms` are the support points.
class DiscreteMeasure {
 public:
  DiscreteMeasure(RowMatrix atoms, Vector weights) : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (atoms_.rows() < 1 || atoms_.cols() < 1) throw std::invalid_argument("DiscreteMeasure: need m >= 1 and d >= 1");
    if (weights_.size() != atoms_.rows()) throw std::invalid_argument("DiscreteMeasure: weight count != atom count");
    if (!atoms_.allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite atom coordinate");
    detail::check_probability_vector(weights_, "DiscreteMeasure");
    uniform_ = true;
    const double u = 1.0 / static_cast<double>(atoms_.rows());
    for (Eigen::Index i = 0; i < weights_.size() && uniform_; ++i) uniform_ = weights_[i] == u;
  }

  static DiscreteMeasure uniform(RowMatrix atoms) {
    const auto m = atoms.rows();
    if (m < 1) throw std::invalid_argument("DiscreteMeasure: need m >= 1");
    return DiscreteMeasure(std::move(atoms), Vector::Constant(m, 1.0 / static_cast<double>(m)));
  }

  [[nodiscard]] const RowMatrix& atoms() const noexcept { return atoms_; }
  [[nodiscard]] const Vector& weights() const noexcept { return weights_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return atoms_.rows(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return atoms_.cols(); }
  /// True when every weight is exactly 1/m.
  [[nodiscard]] bool is_uniform() const noexcept { return uniform_; }

  [[nodiscard]] Vector mean() const {
    Vector mu = Vector::Zero(dim());
    for (Eigen::Index k = 0; k < dim(); ++k) {
      detail::CompensatedSum s;
      for (Eigen::Index i = 0; i < size(); ++i) s.add(weights_[i] * atoms_(i, k));
      mu[k] = s.value();
    }
    return mu;
  }

  /// Weighted scatter sum_i w_i (x_i - mean)(x_i - mean)^T.
  [[nodiscard]] Matrix scatter() const {
    const Vector mu = mean();
    Matrix centered = atoms_.rowwise() - mu.transpose();
    return centered.transpose() * weights_.asDiagonal() * centered;
  }

  [[nodiscard]] DiscreteMeasure translated(const Eigen::Ref<const Vector>& shift) const {
    if (shift.size() != dim()) throw std::invalid_argument("translated: dimension mismatch");
    RowMatrix moved = atoms_.rowwise() + shift.transpose();
    return DiscreteMeasure(std::move(moved), weights_);
  }

 private:
  RowMatrix atoms_;
  Vector weights_;
  bool uniform_ = false;
};

/// N(mean, covariance) with covariance validated as symmetric positive definite.
class GaussianMeasure {
 public:
  GaussianMeasure(Vector mean, Matrix covariance) : mean_(std::move(mean)), cov_(std::move(covariance)) {
    const auto d = mean_.size();
    if (d < 1) throw std::invalid_argument("GaussianMeasure: empty mean");
    if (cov_.rows() != d || cov_.cols() != d) throw std::invalid_argument("GaussianMeasure: covariance shape mismatch");
    if (!mean_.allFinite() || !cov_.allFinite()) throw std::invalid_argument("GaussianMeasure: non-finite parameter");
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("GaussianMeasure: covariance not symmetric");
    }
    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("GaussianMeasure: covariance not positive definite");
    if (llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
      throw std::invalid_argument("GaussianMeasure: covariance not positive definite");
    }
  }

  [[nodiscard]] const Vector& mean() const noexcept { return mean_; }
  [[nodiscard]] const Matrix& covariance() const noexcept { return cov_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return mean_.size(); }

 private:
  Vector mean_;
  Matrix cov_;
};

struct Projected1D {
  Vector values;
  Vector weights;
};

inline Projected1D project(const DiscreteMeasure& measure, const Eigen::Ref<const Vector>& theta) {
  detail::check_direction(theta, measure.dim());
  return Projected1D{measure.atoms() * theta, measure.weights()};
}

struct ProjectedGaussian {
  double mean;
  double variance;
};

inline ProjectedGaussian project_gaussian(const GaussianMeasure& g, const Eigen::Ref<const Vector>& theta) {
  detail::check_direction(theta, g.dim());
  return {g.mean().dot(theta), theta.dot(g.covariance() * theta)};
}

/// M_p(mu) = sum_i w_i |x_i|^p.
inline double moment_p(const DiscreteMeasure& measure, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("moment_p: p must be >= 1");
  detail::CompensatedSum s;
  for (Eigen::Index i = 0; i < measure.size(); ++i) {
    s.add(measure.weights()[i] * detail::abs_pow(measure.atoms().row(i).norm(), p));
  }
  return s.value();
}

/// Only p = 2 has a closed form here: Tr(Sigma) + |m|^2.
inline double moment_p(const GaussianMeasure& g, double p) {
  if (p != 2.0) throw std::invalid_argument("moment_p: only p = 2 is supported for Gaussian measures");
  return g.covariance().trace() + g.mean().squaredNorm();
}

/// Lipschitz constant bound of the slice integrand in terms of p-th moments.
inline double lipschitz_bound_from_moments(double p, double moment_mu, double moment_nu) {
  if (!(p >= 1.0)) throw std::invalid_argument("lipschitz_bound: p must be >= 1");
  const double biggest = std::max(moment_mu, moment_nu);
  const double lead = p * std::pow(2.0, p - 1.0) * std::pow(biggest, (p - 1.0) / p);
  return lead * (std::pow(moment_mu, 1.0 / p) + std::pow(moment_nu, 1.0 / p));
}

template <class MeasureA, class MeasureB>
double lipschitz_bound(const MeasureA& mu, const MeasureB& nu, double p) {
  return lipschitz_bound_from_moments(p, moment_p(mu, p), moment_p(nu, p));
}

/// Reads whitespace-separated points, one per line. Lines starting with '#' are skipped.
/// With `weighted`, the last column is a nonnegative weight; weights are renormalized to sum 1.
inline DiscreteMeasure parse_point_cloud(std::istream& in, bool weighted) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw std::invalid_argument("point cloud line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      row.push_back(v);
    }
    if (width == 0) width = row.size();
    if (row.size() != width) throw std::invalid_argument("point cloud line " + std::to_string(lineno) + ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("point cloud: no points");
  const std::size_t d = weighted ? width - 1 : width;
  if (d < 1) throw std::invalid_argument("point cloud: need at least one coordinate column");
  RowMatrix atoms(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  Vector w(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) atoms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    w[static_cast<Eigen::Index>(i)] = weighted ? rows[i][d] : 1.0;
  }
  if (!weighted) return DiscreteMeasure::uniform(std::move(atoms));
  if ((w.array() < 0.0).any()) throw std::invalid_argument("point cloud: negative weight");
  const double total = detail::compensated_sum(w);
  if (!(total > 0.0)) throw std::invalid_argument("point cloud: weights sum to zero");
  w /= total;
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

inline DiscreteMeasure load_point_cloud(const std::string& path, bool weighted) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open point cloud file: " + path);
  return parse_point_cloud(in, weighted);
}

}  // namespace swcv
