#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swcv/detail/numeric.hpp"

namespace swcv {

enum class SequenceKind { sobol, halton };

inline const char* to_string(SequenceKind k) noexcept { return k == SequenceKind::sobol ? "sobol" : "halton"; }

/// Where a direction set came from.
struct Provenance {
  enum class Source { monte_carlo, qmc, rqmc, custom };
  Source source = Source::custom;
  std::uint64_t seed = 0;
  SequenceKind kind = SequenceKind::sobol;
};

/// n unit vectors on S^{d-1}, stored one per row.
class DirectionSet {
 public:
  DirectionSet(RowMatrix directions, Provenance provenance = {})
      : dirs_(std::move(directions)), provenance_(provenance) {
    if (dirs_.rows() < 1) throw std::invalid_argument("DirectionSet: need at least one direction");
    if (dirs_.cols() < 1) throw std::invalid_argument("DirectionSet: need dimension >= 1");
    for (Eigen::Index i = 0; i < dirs_.rows(); ++i) {
      if (std::abs(dirs_.row(i).norm() - 1.0) > 1e-12) {
        throw std::invalid_argument("DirectionSet: row " + std::to_string(i) + " is not unit-norm");
      }
    }
  }

  [[nodiscard]] const RowMatrix& matrix() const noexcept { return dirs_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return dirs_.rows(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return dirs_.cols(); }
  [[nodiscard]] auto row(Eigen::Index i) const { return dirs_.row(i); }
  [[nodiscard]] const Provenance& provenance() const noexcept { return provenance_; }

 private:
  RowMatrix dirs_;
  Provenance provenance_;
};

namespace detail {

inline RowMatrix normalize_rows(RowMatrix m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double nrm = m.row(i).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw std::domain_error("cannot normalize a zero or non-finite vector");
    m.row(i) /= nrm;
  }
  return m;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace detail

inline DirectionSet sample_uniform(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_uniform: n must be >= 1");
  if (d < 2) throw std::invalid_argument("sample_uniform: d must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix g(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    do {
      for (Eigen::Index k = 0; k < d; ++k) g(i, k) = normal(rng);
    } while (g.row(i).squaredNorm() == 0.0);
  }
  return DirectionSet(detail::normalize_rows(std::move(g)), {Provenance::Source::monte_carlo, seed, SequenceKind::sobol});
}

/// Standard normal quantile: rational approximation (Acklam) followed by one Halley step
/// against the erfc-based CDF. Absolute CDF error is far below 1e-9 on (0,1).
inline double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("inverse_normal_cdf: argument must lie in (0,1)");
  // Evaluate on the lower half and reflect, which makes the map exactly odd around 1/2.
  if (u > 0.5) return -inverse_normal_cdf(1.0 - u);
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                           1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                           6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                           -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> dd{7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                            3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (u == 0.5) return 0.0;
  double x = 0.0;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = detail::standard_normal_cdf(x) - u;
  const double h = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - h / (1.0 + 0.5 * x * h);
}

namespace detail {

// Primitive polynomial data (degree s, interior coefficients a, initial m_1..m_s) for Sobol
// dimensions 2..21; dimension 1 is the van der Corput sequence.
struct SobolPoly {
  unsigned s;
  unsigned a;
  std::array<std::uint32_t, 8> m;
};

inline constexpr std::array<SobolPoly, 20> kSobolTable{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
}};

inline constexpr int kSobolBits = 32;
inline constexpr Eigen::Index kSobolMaxDim = 1 + static_cast<Eigen::Index>(kSobolTable.size());

inline std::array<std::uint32_t, kSobolBits> sobol_direction_numbers(Eigen::Index dim) {
  std::array<std::uint32_t, kSobolBits> v{};
  if (dim == 0) {
    for (int k = 0; k < kSobolBits; ++k) v[k] = 1u << (kSobolBits - 1 - k);
    return v;
  }
  const SobolPoly& poly = kSobolTable[static_cast<std::size_t>(dim - 1)];
  const unsigned s = poly.s;
  for (unsigned k = 0; k < s; ++k) v[k] = poly.m[k] << (kSobolBits - 1 - static_cast<int>(k));
  for (unsigned k = s; k < kSobolBits; ++k) {
    std::uint32_t vk = v[k - s] ^ (v[k - s] >> s);
    for (unsigned j = 1; j < s; ++j) {
      if ((poly.a >> (s - 1 - j)) & 1u) vk ^= v[k - j];
    }
    v[k] = vk;
  }
  return v;
}

inline std::vector<unsigned> first_primes(Eigen::Index count) {
  std::vector<unsigned> primes;
  for (unsigned c = 2; static_cast<Eigen::Index>(primes.size()) < count; ++c) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

inline double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double scale = 1.0 / base;
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale /= base;
  }
  return result;
}

}  // namespace detail

/// Points 1..n of an unscrambled Sobol or Halton sequence in (0,1)^d. Sobol points are
/// taken at the midpoints of their 2^-32 cells so no coordinate is exactly 0 or 1/2.
inline RowMatrix low_discrepancy(Eigen::Index n, Eigen::Index d, SequenceKind kind) {
  if (n < 1) throw std::invalid_argument("low_discrepancy: n must be >= 1");
  if (d < 2) throw std::invalid_argument("low_discrepancy: d must be >= 2");
  RowMatrix u(n, d);
  if (kind == SequenceKind::sobol) {
    if (d > detail::kSobolMaxDim) {
      throw std::invalid_argument("low_discrepancy: Sobol supports d <= " + std::to_string(detail::kSobolMaxDim));
    }
    if (static_cast<std::uint64_t>(n) >= (std::uint64_t{1} << detail::kSobolBits)) {
      throw std::invalid_argument("low_discrepancy: too many Sobol points");
    }
    constexpr double scale = 1.0 / 4294967296.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto v = detail::sobol_direction_numbers(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto index = static_cast<std::uint64_t>(i + 1);
        const std::uint64_t gray = index ^ (index >> 1);
        std::uint32_t x = 0;
        for (int b = 0; b < detail::kSobolBits; ++b) {
          if ((gray >> b) & 1u) x ^= v[static_cast<std::size_t>(b)];
        }
        u(i, k) = (static_cast<double>(x) + 0.5) * scale;
      }
    }
  } else {
    const auto primes = detail::first_primes(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        u(i, k) = detail::radical_inverse(static_cast<std::uint64_t>(i + 1), primes[static_cast<std::size_t>(k)]);
      }
    }
  }
  return u;
}

/// Deterministic QMC directions: Gaussian-map each low-discrepancy point and normalize.
inline DirectionSet qmc_directions(Eigen::Index n, Eigen::Index d, SequenceKind kind) {
  RowMatrix u = low_discrepancy(n, d, kind);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) u(i, k) = inverse_normal_cdf(u(i, k));
    if (u.row(i).squaredNorm() == 0.0) {
      throw std::domain_error("qmc_directions: point " + std::to_string(i + 1) + " maps to the zero vector");
    }
  }
  return DirectionSet(detail::normalize_rows(std::move(u)), {Provenance::Source::qmc, 0, kind});
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with column signs fixed by diag(R).
inline Matrix random_rotation(Eigen::Index d, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("random_rotation: d must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

/// theta_i = R v_i for every row v_i.
inline DirectionSet rotate(const DirectionSet& dirs, const Matrix& rotation, Provenance provenance) {
  if (rotation.rows() != dirs.dim() || rotation.cols() != dirs.dim()) {
    throw std::invalid_argument("rotate: rotation shape does not match direction dimension");
  }
  RowMatrix out = dirs.matrix() * rotation.transpose();
  return DirectionSet(detail::normalize_rows(std::move(out)), provenance);
}

inline DirectionSet rqmc_directions(Eigen::Index n, Eigen::Index d, SequenceKind kind, std::uint64_t seed) {
  const DirectionSet base = qmc_directions(n, d, kind);
  return rotate(base, random_rotation(d, seed), {Provenance::Source::rqmc, seed, kind});
}

}  // namespace swcv
