#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "swcv/detail/numeric.hpp"
#include "swcv/gaussian_exact.hpp"
#include "swcv/measures.hpp"
#include "swcv/sphere.hpp"

namespace swcv {

namespace detail {

inline void check_order(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("transport order p must be >= 1");
}

// Both inputs must already be sorted ascending.
inline double w1d_sorted_equal_mass(std::span<const double> xs, std::span<const double> ys, double p) {
  CompensatedSum s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.add(abs_pow(xs[i] - ys[i], p));
  return s.value() / static_cast<double>(xs.size());
}

struct WeightedScratch {
  std::vector<Eigen::Index> order_a;
  std::vector<Eigen::Index> order_b;
};

// Merged-breakpoint evaluation of int_0^1 |F_a^{-1}(t) - F_b^{-1}(t)|^p dt for step quantiles.
inline double w1d_weighted_core(const double* va, const double* wa, Eigen::Index ma, const double* vb, const double* wb,
                                Eigen::Index mb, double p, WeightedScratch& scratch) {
  constexpr double kMergeTolerance = 1e-15;
  auto sort_by_value = [](std::vector<Eigen::Index>& order, const double* v, Eigen::Index m) {
    order.resize(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [v](Eigen::Index l, Eigen::Index r) { return v[l] < v[r]; });
  };
  sort_by_value(scratch.order_a, va, ma);
  sort_by_value(scratch.order_b, vb, mb);
  const auto& oa = scratch.order_a;
  const auto& ob = scratch.order_b;

  CompensatedSum total;
  std::size_t i = 0;
  std::size_t j = 0;
  double ca = wa[oa[0]];
  double cb = wb[ob[0]];
  double t = 0.0;
  while (true) {
    const double next = std::min(ca, cb);
    const double dt = next - t;
    if (dt > 0.0) total.add(abs_pow(va[oa[i]] - vb[ob[j]], p) * dt);
    t = std::max(t, next);
    const bool step_a = ca <= next + kMergeTolerance;
    const bool step_b = cb <= next + kMergeTolerance;
    if (step_a) {
      if (++i == oa.size()) break;
      ca += wa[oa[i]];
    }
    if (step_b) {
      if (++j == ob.size()) break;
      cb += wb[ob[j]];
    }
  }
  return total.value();
}

}  // namespace detail

/// W_p^p between two uniform 1D samples of equal size, via order statistics.
inline double w1d_equal_mass(std::span<const double> xs, std::span<const double> ys, double p) {
  if (xs.size() != ys.size()) throw std::invalid_argument("w1d_equal_mass: length mismatch");
  if (xs.empty()) throw std::invalid_argument("w1d_equal_mass: empty input");
  detail::check_order(p);
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return detail::w1d_sorted_equal_mass(a, b, p);
}

/// Exact W_p^p between two weighted 1D discrete measures.
inline double w1d_weighted(const Projected1D& a, const Projected1D& b, double p) {
  detail::check_order(p);
  if (a.values.size() != a.weights.size() || b.values.size() != b.weights.size()) {
    throw std::invalid_argument("w1d_weighted: values/weights length mismatch");
  }
  detail::check_probability_vector(a.weights, "w1d_weighted");
  detail::check_probability_vector(b.weights, "w1d_weighted");
  detail::WeightedScratch scratch;
  return detail::w1d_weighted_core(a.values.data(), a.weights.data(), a.values.size(), b.values.data(),
                                   b.weights.data(), b.values.size(), p, scratch);
}

/// First and second moments of a measure pair, as used by the quadratic control variates.
struct MomentSummary {
  Vector mean_mu;
  Vector mean_nu;
  Matrix scatter_mu;
  Matrix scatter_nu;
};

/// theta -> W_p^p(theta#mu, theta#nu) for a fixed pair of measures. Cheap to copy.
class Integrand {
 public:
  Integrand(DiscreteMeasure mu, DiscreteMeasure nu, double p)
      : pair_(DiscretePair{std::make_shared<const DiscreteMeasure>(std::move(mu)),
                           std::make_shared<const DiscreteMeasure>(std::move(nu))}),
        p_(p) {
    detail::check_order(p);
    const auto& d = std::get<DiscretePair>(pair_);
    if (d.mu->dim() != d.nu->dim()) throw std::invalid_argument("Integrand: measures live in different dimensions");
  }

  Integrand(GaussianMeasure mu, GaussianMeasure nu, double p = 2.0)
      : pair_(GaussianPair{std::make_shared<const GaussianMeasure>(std::move(mu)),
                           std::make_shared<const GaussianMeasure>(std::move(nu))}),
        p_(p) {
    if (p != 2.0) throw std::invalid_argument("Integrand: Gaussian pairs support only p = 2");
    const auto& g = std::get<GaussianPair>(pair_);
    if (g.mu->dim() != g.nu->dim()) throw std::invalid_argument("Integrand: measures live in different dimensions");
  }

  Integrand(const Integrand& other) : pair_(other.pair_), p_(other.p_), evaluations_(other.evaluations()) {}
  Integrand& operator=(const Integrand& other) {
    pair_ = other.pair_;
    p_ = other.p_;
    evaluations_.store(other.evaluations(), std::memory_order_relaxed);
    return *this;
  }

  [[nodiscard]] double order() const noexcept { return p_; }
  [[nodiscard]] bool is_gaussian() const noexcept { return std::holds_alternative<GaussianPair>(pair_); }
  [[nodiscard]] std::uint64_t evaluations() const noexcept { return evaluations_.load(std::memory_order_relaxed); }

  [[nodiscard]] Eigen::Index dim() const noexcept {
    return std::visit([](const auto& pr) { return pr.mu->dim(); }, pair_);
  }

  [[nodiscard]] const DiscreteMeasure* discrete_source() const noexcept {
    const auto* d = std::get_if<DiscretePair>(&pair_);
    return d ? d->mu.get() : nullptr;
  }
  [[nodiscard]] const DiscreteMeasure* discrete_target() const noexcept {
    const auto* d = std::get_if<DiscretePair>(&pair_);
    return d ? d->nu.get() : nullptr;
  }
  [[nodiscard]] const GaussianMeasure* gaussian_source() const noexcept {
    const auto* g = std::get_if<GaussianPair>(&pair_);
    return g ? g->mu.get() : nullptr;
  }
  [[nodiscard]] const GaussianMeasure* gaussian_target() const noexcept {
    const auto* g = std::get_if<GaussianPair>(&pair_);
    return g ? g->nu.get() : nullptr;
  }

  double operator()(const Eigen::Ref<const Vector>& theta) const {
    detail::check_direction(theta, dim());
    evaluations_.fetch_add(1, std::memory_order_relaxed);
    if (const auto* g = std::get_if<GaussianPair>(&pair_)) return gaussian_integrand(*g->mu, *g->nu, theta);
    const auto& d = std::get<DiscretePair>(pair_);
    const Vector xa = d.mu->atoms() * theta;
    const Vector xb = d.nu->atoms() * theta;
    return evaluate_projected(xa.data(), xb.data());
  }

  /// Integrand values at every direction of `dirs`.
  [[nodiscard]] Vector evaluate(const DirectionSet& dirs) const {
    if (dirs.dim() != dim()) throw std::invalid_argument("Integrand::evaluate: dimension mismatch");
    return evaluate_rows(dirs.matrix());
  }

  /// As evaluate(), for raw unit rows (used for large reference runs without a DirectionSet).
  [[nodiscard]] Vector evaluate_rows(const Eigen::Ref<const RowMatrix>& dirs) const {
    const Eigen::Index n = dirs.rows();
    evaluations_.fetch_add(static_cast<std::uint64_t>(n), std::memory_order_relaxed);
    if (const auto* g = std::get_if<GaussianPair>(&pair_)) {
      return detail::gaussian_integrand_rows(dirs, g->mu->mean() - g->nu->mean(), g->mu->covariance(),
                                             g->nu->covariance());
    }
    const auto& d = std::get<DiscretePair>(pair_);
    Vector out(n);
    constexpr Eigen::Index kBlock = 128;
    Matrix pa;
    Matrix pb;
    for (Eigen::Index start = 0; start < n; start += kBlock) {
      const Eigen::Index len = std::min(kBlock, n - start);
      const auto block = dirs.middleRows(start, len);
      pa.noalias() = d.mu->atoms() * block.transpose();
      pb.noalias() = d.nu->atoms() * block.transpose();
      for (Eigen::Index k = 0; k < len; ++k) out[start + k] = evaluate_projected(pa.col(k).data(), pb.col(k).data());
    }
    return out;
  }

  [[nodiscard]] MomentSummary moment_summary() const {
    if (const auto* g = std::get_if<GaussianPair>(&pair_)) {
      return {g->mu->mean(), g->nu->mean(), g->mu->covariance(), g->nu->covariance()};
    }
    const auto& d = std::get<DiscretePair>(pair_);
    return {d.mu->mean(), d.nu->mean(), d.mu->scatter(), d.nu->scatter()};
  }

 private:
  struct DiscretePair {
    std::shared_ptr<const DiscreteMeasure> mu;
    std::shared_ptr<const DiscreteMeasure> nu;
  };
  struct GaussianPair {
    std::shared_ptr<const GaussianMeasure> mu;
    std::shared_ptr<const GaussianMeasure> nu;
  };

  // Projections of the atoms of mu and nu along one direction.
  double evaluate_projected(const double* xa, const double* xb) const {
    const auto& d = std::get<DiscretePair>(pair_);
    const Eigen::Index ma = d.mu->size();
    const Eigen::Index mb = d.nu->size();
    if (ma == mb && d.mu->is_uniform() && d.nu->is_uniform()) {
      std::vector<double> a(xa, xa + ma);
      std::vector<double> b(xb, xb + mb);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      return detail::w1d_sorted_equal_mass(a, b, p_);
    }
    detail::WeightedScratch scratch;
    return detail::w1d_weighted_core(xa, d.mu->weights().data(), ma, xb, d.nu->weights().data(), mb, p_, scratch);
  }

  std::variant<DiscretePair, GaussianPair> pair_;
  double p_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
};

}  // namespace swcv
