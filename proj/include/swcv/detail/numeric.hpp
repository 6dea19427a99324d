#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>

#include <Eigen/Dense>

namespace swcv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

// Neumaier variant of Kahan summation; also robust when a term exceeds the running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double compensated_sum(const Eigen::Ref<const Vector>& xs) noexcept {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < xs.size(); ++i) s.add(xs[i]);
  return s.value();
}

inline double compensated_mean(const Eigen::Ref<const Vector>& xs) noexcept {
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

inline double compensated_dot(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) noexcept {
  CompensatedSum s;
  for (Eigen::Index i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

/// |x|^p with exact fast paths for the common integer orders.
inline double abs_pow(double x, double p) noexcept {
  const double a = std::abs(x);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  return std::pow(a, p);
}

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic seed derivation H(base, parts...): each part is folded in through splitmix64,
/// so distinct tuples map to distinct streams with overwhelming probability.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = detail::mix64(base);
  for (std::uint64_t p : parts) h = detail::mix64(h ^ detail::mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace swcv
