#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "swcv/detail/parallel.hpp"
#include "swcv/estimators.hpp"
#include "swcv/harmonics.hpp"
#include "swcv/measures.hpp"
#include "swcv/sphere.hpp"
#include "swcv/wasserstein1d.hpp"

namespace swcv {

struct GramResult {
  Matrix matrix;
  double gamma = 0.0;
  Method method = Method::mc;
  Eigen::Index n = 0;
  std::chrono::nanoseconds wall_time{0};
  /// Time spent on the shared linear-rule weights (zero for MC).
  std::chrono::nanoseconds weight_time{0};
};

struct GramOptions {
  double p = 2.0;
  unsigned threads = 1;
};

namespace detail {

inline Eigen::Index common_dimension(const std::vector<DiscreteMeasure>& xs, const std::vector<DiscreteMeasure>& ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("gram: empty measure collection");
  const Eigen::Index d = xs.front().dim();
  for (const auto& m : xs) {
    if (m.dim() != d) throw std::invalid_argument("gram: measures live in different dimensions");
  }
  for (const auto& m : ys) {
    if (m.dim() != d) throw std::invalid_argument("gram: measures live in different dimensions");
  }
  return d;
}

// K[i, j] = exp(-gamma * rule(f_ij)) where rule reduces the n integrand values of pair (i, j).
template <class Rule>
Matrix gram_entries(const std::vector<DiscreteMeasure>& xs, const std::vector<DiscreteMeasure>& ys,
                    const DirectionSet& dirs, double gamma, const GramOptions& opts, Rule&& rule) {
  const auto nx = static_cast<Eigen::Index>(xs.size());
  const auto ny = static_cast<Eigen::Index>(ys.size());
  Matrix k(nx, ny);
  parallel_for(static_cast<std::size_t>(nx * ny), opts.threads, [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx) / ny;
    const auto j = static_cast<Eigen::Index>(idx) % ny;
    const Integrand f(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)], opts.p);
    k(i, j) = std::exp(-gamma * rule(f.evaluate(dirs)));
  });
  return k;
}

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gram: gamma must be > 0");
}

}  // namespace detail

/// Gram matrix of exp(-gamma * SW_p^p) with plain MC estimates on one shared direction set.
inline GramResult gram_mc(const std::vector<DiscreteMeasure>& xs, const std::vector<DiscreteMeasure>& ys, double gamma,
                          Eigen::Index n, std::uint64_t seed, const GramOptions& opts = {}) {
  detail::check_gamma(gamma);
  const Eigen::Index d = detail::common_dimension(xs, ys);
  const auto start = std::chrono::steady_clock::now();
  const DirectionSet dirs = sample_uniform(n, d, seed);
  GramResult out;
  out.matrix = detail::gram_entries(xs, ys, dirs, gamma, opts, [](const Vector& f) { return detail::compensated_mean(f); });
  out.gamma = gamma;
  out.method = Method::mc;
  out.n = n;
  out.wall_time = std::chrono::steady_clock::now() - start;
  return out;
}

/// As gram_mc, with the SHCV linear rule computed once and applied to every pair.
inline GramResult gram_shcv(const std::vector<DiscreteMeasure>& xs, const std::vector<DiscreteMeasure>& ys, double gamma,
                            Eigen::Index n, const HarmonicBasis& basis, std::uint64_t seed, const GramOptions& opts = {}) {
  detail::check_gamma(gamma);
  const Eigen::Index d = detail::common_dimension(xs, ys);
  if (basis.dim() != d) throw std::invalid_argument("gram_shcv: basis dimension mismatch");
  const auto start = std::chrono::steady_clock::now();
  const DirectionSet dirs = sample_uniform(n, d, seed);
  const LinearRuleWeights rule = shcv_weights(basis.evaluate(dirs));
  const auto weights_done = std::chrono::steady_clock::now();
  GramResult out;
  out.matrix = detail::gram_entries(xs, ys, dirs, gamma, opts, [&](const Vector& f) { return apply_rule(rule, f); });
  out.gamma = gamma;
  out.method = Method::shcv;
  out.n = n;
  out.wall_time = std::chrono::steady_clock::now() - start;
  out.weight_time = weights_done - start;
  return out;
}

}  // namespace swcv
