#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swcv/detail/numeric.hpp"
#include "swcv/sphere.hpp"

namespace swcv {

namespace detail {

inline std::uint64_t checked_u64(unsigned __int128 v, const char* what) {
  if (v > std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error(std::string(what) + ": result overflows 64 bits");
  return static_cast<std::uint64_t>(v);
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays an integer at every step.
    r = r * (n - k + i) / i;
    checked_u64(r, "binomial");
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace detail

/// N_l^d, the dimension of degree-l spherical harmonics on S^{d-1}.
inline std::uint64_t count_degree(int d, int degree) {
  if (d < 2) throw std::invalid_argument("count_degree: d must be >= 2");
  if (degree < 0) throw std::invalid_argument("count_degree: degree must be >= 0");
  if (degree == 0) return 1;
  const auto l = static_cast<std::uint64_t>(degree);
  const auto dd = static_cast<std::uint64_t>(d);
  // (2l + d - 2)(l + d - 3)! / (l! (d - 2)!) = (2l + d - 2) * binom(l + d - 3, l - 1) / l
  const unsigned __int128 numer =
      static_cast<unsigned __int128>(2 * l + dd - 2) * detail::binomial(l + dd - 3, l - 1);
  return detail::checked_u64(numer / l, "count_degree");
}

/// s_{L,d}: number of harmonics of even degree 2, 4, ..., 2L.
inline std::uint64_t count_even_cumulative(int d, int half_degree) {
  if (d < 2) throw std::invalid_argument("count_even_cumulative: d must be >= 2");
  if (half_degree < 1) throw std::invalid_argument("count_even_cumulative: L must be >= 1");
  const auto closed = detail::binomial(static_cast<std::uint64_t>(2 * half_degree + d - 1),
                                       static_cast<std::uint64_t>(d - 1)) - 1;
  unsigned __int128 direct = 0;
  for (int l = 1; l <= half_degree; ++l) direct += count_degree(d, 2 * l);
  if (detail::checked_u64(direct, "count_even_cumulative") != closed) {
    throw std::logic_error("count_even_cumulative: closed form disagrees with direct sum");
  }
  return closed;
}

/// C_l^alpha via the three-term recurrence.
class GegenbauerEvaluator {
 public:
  GegenbauerEvaluator(int degree, double alpha) : degree_(degree), alpha_(alpha) {
    if (degree < 0) throw std::invalid_argument("GegenbauerEvaluator: degree must be >= 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("GegenbauerEvaluator: alpha must be > 0");
  }
  /// Parameter alpha = (d - 2) / 2 used by the addition formula on S^{d-1}.
  static GegenbauerEvaluator for_sphere(int degree, int d) {
    if (d < 3) throw std::invalid_argument("GegenbauerEvaluator: needs d >= 3");
    return {degree, 0.5 * (d - 2)};
  }

  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }

  double operator()(double z) const {
    if (!(std::abs(z) <= 1.0 + 1e-12)) throw std::domain_error("GegenbauerEvaluator: |z| must be <= 1");
    return eval_unchecked(std::clamp(z, -1.0, 1.0));
  }

  [[nodiscard]] double eval_unchecked(double z) const noexcept {
    if (degree_ == 0) return 1.0;
    double prev = 1.0;
    double cur = 2.0 * alpha_ * z;
    for (int k = 1; k < degree_; ++k) {
      const double next = (2.0 * (k + alpha_) * z * cur - (k + 2.0 * alpha_ - 1.0) * prev) / (k + 1.0);
      prev = cur;
      cur = next;
    }
    return cur;
  }

 private:
  int degree_;
  double alpha_;
};

struct BasisOptions {
  /// Candidate pool size per block is pool_factor * (functions in block), capped by max_pool.
  double pool_factor = 50.0;
  Eigen::Index max_pool = 8192;
  int max_attempts = 4;
  /// Keep only the first max_functions basis functions overall (0 = no cap).
  Eigen::Index max_functions = 0;
};

/// One even degree of the basis.
struct HarmonicBlock {
  int degree = 0;
  Eigen::Index full_count = 0;  // N_l^d
  Eigen::Index count = 0;       // functions kept (== full_count unless capped)
  // Fundamental-system data, d >= 4 only.
  RowMatrix points;
  Matrix inv_factor;  // lower triangular T^{-1}, G = T T^T
  double scale = 1.0;
  double min_pivot_ratio = 1.0;
};

/// Orthonormal (w.r.t. the uniform probability measure) even-degree harmonics of degree 2..2L.
class HarmonicBasis {
 public:
  HarmonicBasis(int d, int max_degree, std::vector<HarmonicBlock> blocks)
      : d_(d), max_degree_(max_degree), blocks_(std::move(blocks)) {
    for (const auto& b : blocks_) size_ += b.count;
  }

  [[nodiscard]] int dim() const noexcept { return d_; }
  [[nodiscard]] int max_degree() const noexcept { return max_degree_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return size_; }
  [[nodiscard]] const std::vector<HarmonicBlock>& blocks() const noexcept { return blocks_; }

  [[nodiscard]] Matrix evaluate(const DirectionSet& dirs) const {
    if (dirs.dim() != d_) throw std::invalid_argument("HarmonicBasis::evaluate: dimension mismatch");
    return evaluate_rows(dirs.matrix());
  }

  [[nodiscard]] Matrix evaluate_rows(const Eigen::Ref<const RowMatrix>& dirs) const {
    if (dirs.cols() != d_) throw std::invalid_argument("HarmonicBasis::evaluate: dimension mismatch");
    Matrix phi(dirs.rows(), size_);
    if (d_ == 2) {
      fill_circular(dirs, phi);
    } else if (d_ == 3) {
      fill_legendre(dirs, phi);
    } else {
      fill_fundamental(dirs, phi);
    }
    return phi;
  }

 private:
  void fill_circular(const Eigen::Ref<const RowMatrix>& dirs, Matrix& phi) const {
    for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
      const std::complex<double> z(dirs(i, 0), dirs(i, 1));
      std::complex<double> power(1.0, 0.0);
      int reached = 0;
      Eigen::Index col = 0;
      for (const auto& b : blocks_) {
        while (reached < b.degree) {
          power *= z;
          ++reached;
        }
        const double vals[2] = {std::numbers::sqrt2 * power.real(), std::numbers::sqrt2 * power.imag()};
        for (Eigen::Index k = 0; k < b.count; ++k) phi(i, col + k) = vals[k];
        col += b.count;
      }
    }
  }

  // Real Laplace harmonics from normalized associated Legendre functions; the factor
  // sin^m(polar) is carried by Re/Im of (x + iy)^m so the poles need no special case.
  void fill_legendre(const Eigen::Ref<const RowMatrix>& dirs, Matrix& phi) const {
    const int lmax = max_degree_;
    std::vector<double> q(static_cast<std::size_t>((lmax + 1) * (lmax + 1)));
    auto at = [&](int l, int m) -> double& { return q[static_cast<std::size_t>(l * (lmax + 1) + m)]; };
    std::vector<std::complex<double>> powers(static_cast<std::size_t>(lmax + 1));
    for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
      const double z = std::clamp(dirs(i, 2), -1.0, 1.0);
      const std::complex<double> xy(dirs(i, 0), dirs(i, 1));
      powers[0] = 1.0;
      for (int m = 1; m <= lmax; ++m) powers[static_cast<std::size_t>(m)] = powers[static_cast<std::size_t>(m - 1)] * xy;
      double sectoral = 1.0;
      for (int m = 0; m <= lmax; ++m) {
        if (m > 0) sectoral *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
        at(m, m) = sectoral;
        if (m + 1 <= lmax) at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * z * sectoral;
        for (int l = m + 2; l <= lmax; ++l) {
          const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
          const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                     (4.0 * (l - 1) * (l - 1) - 1.0));
          at(l, m) = a * (z * at(l - 1, m) - b * at(l - 2, m));
        }
      }
      Eigen::Index col = 0;
      for (const auto& blk : blocks_) {
        const int l = blk.degree;
        Eigen::Index k = 0;
        auto put = [&](double v) {
          if (k < blk.count) phi(i, col + k) = v;
          ++k;
        };
        put(at(l, 0));
        for (int m = 1; m <= l; ++m) {
          const double base = std::numbers::sqrt2 * at(l, m);
          put(base * powers[static_cast<std::size_t>(m)].real());
          put(base * powers[static_cast<std::size_t>(m)].imag());
        }
        col += blk.count;
      }
    }
  }

  void fill_fundamental(const Eigen::Ref<const RowMatrix>& dirs, Matrix& phi) const {
    Eigen::Index col = 0;
    for (const auto& blk : blocks_) {
      const GegenbauerEvaluator gegen = GegenbauerEvaluator::for_sphere(blk.degree, d_);
      Matrix kernel = dirs * blk.points.transpose();
      kernel = kernel.unaryExpr([&](double z) { return gegen.eval_unchecked(std::clamp(z, -1.0, 1.0)); });
      phi.middleCols(col, blk.count).noalias() =
          blk.scale * (kernel * blk.inv_factor.transpose().triangularView<Eigen::Upper>());
      col += blk.count;
    }
  }

  int d_;
  int max_degree_;
  std::vector<HarmonicBlock> blocks_;
  Eigen::Index size_ = 0;
};

namespace detail {

// Greedy fundamental system for one degree: pivoted Cholesky of the Gegenbauer kernel over
// a random candidate pool, keeping the candidate with the largest Schur-complement residual.
inline HarmonicBlock build_fundamental_block(int d, int degree, Eigen::Index keep, std::uint64_t seed,
                                             const BasisOptions& opts) {
  const GegenbauerEvaluator gegen = GegenbauerEvaluator::for_sphere(degree, d);
  const double diag = gegen.eval_unchecked(1.0);
  constexpr double kPivotFloor = 1e-8;

  auto pool_size = static_cast<Eigen::Index>(std::ceil(opts.pool_factor * static_cast<double>(keep)));
  pool_size = std::max(std::min(pool_size, opts.max_pool), 2 * keep);
  double last_ratio = 0.0;
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt, pool_size *= 2) {
    const DirectionSet pool = sample_uniform(pool_size, d, derive_seed(seed, {static_cast<std::uint64_t>(degree),
                                                                               static_cast<std::uint64_t>(attempt)}));
    const RowMatrix& cand = pool.matrix();
    Vector residual = Vector::Constant(pool_size, diag);
    Matrix factor(pool_size, keep);
    std::vector<Eigen::Index> chosen;
    chosen.reserve(static_cast<std::size_t>(keep));
    bool ok = true;
    for (Eigen::Index k = 0; k < keep; ++k) {
      Eigen::Index pivot = 0;
      const double best = residual.maxCoeff(&pivot);
      if (!(best > 0.0) || std::sqrt(best) < kPivotFloor * std::sqrt(diag)) {
        last_ratio = best > 0.0 ? std::sqrt(best / diag) : 0.0;
        ok = false;
        break;
      }
      Vector column = (cand * cand.row(pivot).transpose())
                          .unaryExpr([&](double z) { return gegen.eval_unchecked(std::clamp(z, -1.0, 1.0)); });
      if (k > 0) column.noalias() -= factor.leftCols(k) * factor.row(pivot).leftCols(k).transpose();
      column /= std::sqrt(best);
      factor.col(k) = column;
      residual -= column.cwiseAbs2();
      residual[pivot] = -std::numeric_limits<double>::infinity();
      chosen.push_back(pivot);
    }
    if (!ok) continue;

    HarmonicBlock blk;
    blk.degree = degree;
    blk.full_count = static_cast<Eigen::Index>(count_degree(d, degree));
    blk.count = keep;
    blk.points.resize(keep, d);
    for (Eigen::Index k = 0; k < keep; ++k) blk.points.row(k) = cand.row(chosen[static_cast<std::size_t>(k)]);
    Matrix gram = (blk.points * blk.points.transpose())
                      .unaryExpr([&](double z) { return gegen.eval_unchecked(std::clamp(z, -1.0, 1.0)); });
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) continue;
    const Matrix lower = llt.matrixL();
    const Vector dg = lower.diagonal();
    blk.min_pivot_ratio = dg.minCoeff() / dg.maxCoeff();
    if (blk.min_pivot_ratio < kPivotFloor) {
      last_ratio = blk.min_pivot_ratio;
      continue;
    }
    blk.inv_factor = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(keep, keep));
    // Reproducing kernel of degree l w.r.t. the uniform probability measure is
    // (l + alpha) / alpha * C_l^alpha(<x, y>).
    blk.scale = std::sqrt((degree + gegen.alpha()) / gegen.alpha());
    return blk;
  }
  throw std::runtime_error("build_basis: fundamental system of degree " + std::to_string(degree) + " in d=" +
                           std::to_string(d) + " did not reach full rank (pivot ratio " + std::to_string(last_ratio) +
                           ")");
}

}  // namespace detail

/// Even-degree harmonic basis of degrees 2, 4, ..., 2L on S^{d-1}.
inline HarmonicBasis build_basis(int d, int half_degree, std::uint64_t seed, const BasisOptions& opts = {}) {
  if (d < 2) throw std::invalid_argument("build_basis: d must be >= 2");
  if (half_degree < 1) throw std::invalid_argument("build_basis: L must be >= 1");
  const auto total = count_even_cumulative(d, half_degree);
  if (total > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw std::overflow_error("build_basis: too many functions");
  }
  Eigen::Index budget = opts.max_functions > 0 ? opts.max_functions : static_cast<Eigen::Index>(total);
  std::vector<HarmonicBlock> blocks;
  for (int l = 2; l <= 2 * half_degree && budget > 0; l += 2) {
    const auto full = static_cast<Eigen::Index>(count_degree(d, l));
    const Eigen::Index keep = std::min(full, budget);
    budget -= keep;
    if (d >= 4) {
      blocks.push_back(detail::build_fundamental_block(d, l, keep, seed, opts));
    } else {
      HarmonicBlock blk;
      blk.degree = l;
      blk.full_count = full;
      blk.count = keep;
      blocks.push_back(std::move(blk));
    }
  }
  return HarmonicBasis(d, 2 * half_degree, std::move(blocks));
}

}  // namespace swcv
