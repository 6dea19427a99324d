#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swcv/detail/numeric.hpp"
#include "swcv/harmonics.hpp"
#include "swcv/sphere.hpp"
#include "swcv/wasserstein1d.hpp"

namespace swcv {

enum class Method { mc, shcv, cvlow, cvup, cvnn, qmc, rqmc };

inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::mc: return "mc";
    case Method::shcv: return "shcv";
    case Method::cvlow: return "cvlow";
    case Method::cvup: return "cvup";
    case Method::cvnn: return "cvnn";
    case Method::qmc: return "qmc";
    case Method::rqmc: return "rqmc";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  for (Method m : {Method::mc, Method::shcv, Method::cvlow, Method::cvup, Method::cvnn, Method::qmc, Method::rqmc}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

struct EstimatorReport {
  double estimate = 0.0;
  Method method = Method::mc;
  Eigen::Index n = 0;
  std::optional<Vector> coefficients;
  std::optional<double> residual_variance;
  std::chrono::nanoseconds wall_time{0};
  /// Number of control variates actually used after rank/size reduction.
  Eigen::Index controls_used = 0;
  /// Set when a control-variate method fell back to plain MC.
  bool fallback = false;

  [[nodiscard]] double wall_time_ms() const noexcept { return std::chrono::duration<double, std::milli>(wall_time).count(); }
};

struct LinearRuleWeights {
  Vector weights;
  std::string basis;
  Eigen::Index controls_used = 0;
};

namespace detail {

template <class F>
EstimatorReport timed(F&& body) {
  const auto start = std::chrono::steady_clock::now();
  EstimatorReport r = std::forward<F>(body)();
  r.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start);
  return r;
}

// Number of regressors kept so that n > s + 1; throws when even s = 0 is impossible.
inline Eigen::Index usable_controls(Eigen::Index n, Eigen::Index s, const char* what) {
  if (n < 1) throw std::invalid_argument(std::string(what) + ": need n >= 1");
  if (s == 0) return 0;
  const Eigen::Index keep = std::min(s, n - 2);
  if (keep < 0) throw std::invalid_argument(std::string(what) + ": n <= s + 1 even after dropping controls");
  return keep;
}

inline double sample_variance(const Vector& f, double mean) {
  if (f.size() < 2) return 0.0;
  CompensatedSum s;
  for (Eigen::Index i = 0; i < f.size(); ++i) s.add((f[i] - mean) * (f[i] - mean));
  return s.value() / static_cast<double>(f.size() - 1);
}

constexpr double kRankTolerance = 1e-10;

}  // namespace detail

inline EstimatorReport mc_estimate(const Vector& fvals) {
  if (fvals.size() < 1) throw std::invalid_argument("mc_estimate: empty input");
  EstimatorReport r;
  r.method = Method::mc;
  r.n = fvals.size();
  r.estimate = detail::compensated_mean(fvals);
  r.residual_variance = detail::sample_variance(fvals, r.estimate);
  return r;
}

/// Intercept of the least-squares fit of fvals on [1 | Phi]. Trailing columns are dropped
/// when n <= s + 1; linearly dependent columns get a zero coefficient.
inline EstimatorReport olsmc(const Vector& fvals, const Matrix& phi) {
  const Eigen::Index n = fvals.size();
  if (phi.rows() != n) throw std::invalid_argument("olsmc: Phi has " + std::to_string(phi.rows()) + " rows, expected " + std::to_string(n));
  const Eigen::Index s = phi.cols();
  const Eigen::Index keep = detail::usable_controls(n, s, "olsmc");
  if (keep == 0) {
    EstimatorReport r = mc_estimate(fvals);
    r.method = Method::shcv;
    r.coefficients = Vector::Zero(s);
    return r;
  }
  const double fbar = detail::compensated_mean(fvals);
  Vector colmean(keep);
  for (Eigen::Index j = 0; j < keep; ++j) colmean[j] = detail::compensated_mean(phi.col(j));
  Matrix centered = phi.leftCols(keep).rowwise() - colmean.transpose();
  const Vector fc = fvals.array() - fbar;

  Eigen::ColPivHouseholderQR<Matrix> qr(centered);
  qr.setThreshold(detail::kRankTolerance);
  const Vector beta = qr.solve(fc);
  const Eigen::Index rank = qr.rank();
  if (n - rank - 1 < 1) throw std::invalid_argument("olsmc: n <= rank + 1");

  const Vector resid = fc - centered * beta;
  EstimatorReport r;
  r.method = Method::shcv;
  r.n = n;
  r.estimate = fbar - detail::compensated_dot(colmean, beta);
  r.residual_variance = detail::compensated_dot(resid, resid) / static_cast<double>(n - rank - 1);
  Vector coef = Vector::Zero(s);
  coef.head(keep) = beta;
  r.coefficients = std::move(coef);
  r.controls_used = rank;
  return r;
}

/// Weights w with w^T f equal to the olsmc intercept for every f.
inline LinearRuleWeights shcv_weights(const Matrix& phi, std::string basis_tag = {}) {
  const Eigen::Index n = phi.rows();
  const Eigen::Index keep = detail::usable_controls(n, phi.cols(), "shcv_weights");
  LinearRuleWeights out;
  out.basis = std::move(basis_tag);
  if (keep == 0) {
    out.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
    return out;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(phi.leftCols(keep));
  qr.setThreshold(detail::kRankTolerance);
  const Eigen::Index rank = qr.rank();
  // (I - Pi) 1 = Q [0; (Q^T 1)_{rank:}]
  Vector y = qr.householderQ().transpose() * Vector::Ones(n);
  y.head(rank).setZero();
  const Vector v = qr.householderQ() * y;
  const double denom = detail::compensated_sum(v);
  if (!(denom > 1e-12 * static_cast<double>(n))) {
    throw std::domain_error("shcv_weights: constant function lies in the span of the controls");
  }
  out.weights = v / denom;
  out.controls_used = rank;
  return out;
}

inline double apply_rule(const LinearRuleWeights& rule, const Vector& fvals) {
  if (rule.weights.size() != fvals.size()) throw std::invalid_argument("apply_rule: length mismatch");
  return detail::compensated_dot(rule.weights, fvals);
}

inline EstimatorReport mc_estimate(const Integrand& f, const DirectionSet& dirs) {
  return detail::timed([&] { return mc_estimate(f.evaluate(dirs)); });
}

inline EstimatorReport shcv(const Integrand& f, const DirectionSet& dirs, const HarmonicBasis& basis) {
  if (dirs.dim() != basis.dim() || dirs.dim() != f.dim()) throw std::invalid_argument("shcv: dimension mismatch");
  return detail::timed([&] {
    const Vector fvals = f.evaluate(dirs);
    return olsmc(fvals, basis.evaluate(dirs));
  });
}

struct QuadraticCvOptions {
  /// Use this coefficient instead of the in-sample regression estimate.
  std::optional<double> fixed_coefficient;
};

namespace detail {

// Single quadratic control theta^T M theta with known mean Tr(M) / d.
inline EstimatorReport quadratic_cv(const Vector& fvals, const DirectionSet& dirs, const Matrix& m, Method tag,
                                    const QuadraticCvOptions& opts) {
  const Eigen::Index n = fvals.size();
  const auto d = static_cast<double>(dirs.dim());
  const double b = m.trace() / d;
  const Vector c = (dirs.matrix() * m).cwiseProduct(dirs.matrix()).rowwise().sum();
  const Vector dc = c.array() - b;
  const double mc = compensated_mean(fvals);
  const Vector df = fvals.array() - mc;
  const double css = compensated_dot(dc, dc);
  const double fss = compensated_dot(fvals, fvals);

  EstimatorReport r;
  r.method = tag;
  r.n = n;
  const bool degenerate = !(css > 0.0) || std::sqrt(css) <= 1e-13 * std::sqrt(fss);
  if (degenerate && !opts.fixed_coefficient) {
    r.estimate = mc;
    r.residual_variance = sample_variance(fvals, mc);
    r.coefficients = Vector::Zero(1);
    r.fallback = true;
    return r;
  }
  const double gamma = opts.fixed_coefficient ? *opts.fixed_coefficient : compensated_dot(df, dc) / css;
  r.estimate = mc - gamma * compensated_mean(dc);
  const Vector resid = df - gamma * dc;
  r.residual_variance = n > 2 ? compensated_dot(resid, resid) / static_cast<double>(n - 2) : 0.0;
  r.coefficients = Vector::Constant(1, gamma);
  r.controls_used = 1;
  return r;
}

}  // namespace detail

/// Control (theta^T (mean_mu - mean_nu))^2 with mean |mean_mu - mean_nu|^2 / d.
inline EstimatorReport cv_lower(const Integrand& f, const DirectionSet& dirs, const QuadraticCvOptions& opts = {}) {
  if (dirs.dim() != f.dim()) throw std::invalid_argument("cv_lower: dimension mismatch");
  return detail::timed([&] {
    const MomentSummary mom = f.moment_summary();
    const Vector z = mom.mean_mu - mom.mean_nu;
    return detail::quadratic_cv(f.evaluate(dirs), dirs, z * z.transpose(), Method::cvlow, opts);
  });
}

/// As cv_lower with both weighted scatter matrices added to the quadratic form.
inline EstimatorReport cv_upper(const Integrand& f, const DirectionSet& dirs, const QuadraticCvOptions& opts = {}) {
  if (dirs.dim() != f.dim()) throw std::invalid_argument("cv_upper: dimension mismatch");
  return detail::timed([&] {
    const MomentSummary mom = f.moment_summary();
    const Vector z = mom.mean_mu - mom.mean_nu;
    const Matrix m = z * z.transpose() + mom.scatter_mu + mom.scatter_nu;
    return detail::quadratic_cv(f.evaluate(dirs), dirs, m, Method::cvup, opts);
  });
}

namespace detail {

// For each row of `queries`, the index of the nearest row of `points` (ties go to the lower
// index). Rows are unit vectors, so the nearest point maximizes the inner product.
inline std::vector<Eigen::Index> nearest_rows(const Eigen::Ref<const RowMatrix>& queries,
                                              const Eigen::Ref<const RowMatrix>& points, bool exclude_self) {
  constexpr Eigen::Index kBlock = 512;
  std::vector<Eigen::Index> out(static_cast<std::size_t>(queries.rows()));
  Matrix dots;
  for (Eigen::Index start = 0; start < queries.rows(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, queries.rows() - start);
    dots.noalias() = queries.middleRows(start, len) * points.transpose();
    for (Eigen::Index q = 0; q < len; ++q) {
      Eigen::Index best = -1;
      double best_dot = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < points.rows(); ++j) {
        if (exclude_self && j == start + q) continue;
        if (dots(q, j) > best_dot) {
          best_dot = dots(q, j);
          best = j;
        }
      }
      out[static_cast<std::size_t>(start + q)] = best;
    }
  }
  return out;
}

}  // namespace detail

struct CvnnOptions {
  /// Upper bound on the number of fresh directions (0 = use ceil(n^(1+2/d)) as is).
  Eigen::Index max_fresh = 0;
};

/// Control-neighbors estimator: leave-one-out 1-NN surrogate as control, with its integral
/// estimated on ceil(n^(1+2/d)) fresh uniform directions.
inline EstimatorReport cvnn(const Integrand& f, const DirectionSet& dirs, std::uint64_t seed,
                            const CvnnOptions& opts = {}) {
  if (dirs.size() < 2) throw std::invalid_argument("cvnn: need n >= 2");
  if (dirs.dim() != f.dim()) throw std::invalid_argument("cvnn: dimension mismatch");
  return detail::timed([&] {
    const Eigen::Index n = dirs.size();
    const Eigen::Index d = dirs.dim();
    const Vector fvals = f.evaluate(dirs);
    const auto loo = detail::nearest_rows(dirs.matrix(), dirs.matrix(), true);
    Vector surrogate(n);
    for (Eigen::Index i = 0; i < n; ++i) surrogate[i] = fvals[loo[static_cast<std::size_t>(i)]];

    auto fresh_count = static_cast<Eigen::Index>(
        std::ceil(std::pow(static_cast<double>(n), 1.0 + 2.0 / static_cast<double>(d)) - 1e-9));
    if (opts.max_fresh > 0) fresh_count = std::min(fresh_count, opts.max_fresh);
    const DirectionSet fresh = sample_uniform(fresh_count, d, seed);
    const auto nn = detail::nearest_rows(fresh.matrix(), dirs.matrix(), false);
    detail::CompensatedSum acc;
    for (Eigen::Index j : nn) acc.add(fvals[j]);
    const double surrogate_integral = acc.value() / static_cast<double>(fresh_count);

    EstimatorReport r;
    r.method = Method::cvnn;
    r.n = n;
    const double mc = detail::compensated_mean(fvals);
    r.estimate = mc - (detail::compensated_mean(surrogate) - surrogate_integral);
    const Vector resid = (fvals - surrogate).array() - (mc - detail::compensated_mean(surrogate));
    r.residual_variance = n > 1 ? detail::compensated_dot(resid, resid) / static_cast<double>(n - 1) : 0.0;
    r.controls_used = 1;
    return r;
  });
}

inline EstimatorReport qmc_estimate(const Integrand& f, Eigen::Index n, SequenceKind kind) {
  return detail::timed([&] {
    EstimatorReport r = mc_estimate(f.evaluate(qmc_directions(n, f.dim(), kind)));
    r.method = Method::qmc;
    return r;
  });
}

inline EstimatorReport rqmc_estimate(const Integrand& f, Eigen::Index n, SequenceKind kind, std::uint64_t seed) {
  return detail::timed([&] {
    EstimatorReport r = mc_estimate(f.evaluate(rqmc_directions(n, f.dim(), kind, seed)));
    r.method = Method::rqmc;
    return r;
  });
}

/// Everything a method may need; paired methods read `dirs`, the (R)QMC ones draw their own.
struct MethodInputs {
  const DirectionSet* dirs = nullptr;
  const HarmonicBasis* basis = nullptr;
  Eigen::Index n = 0;
  std::uint64_t seed = 0;
  SequenceKind qmc_kind = SequenceKind::sobol;
  SequenceKind rqmc_kind = SequenceKind::halton;
  CvnnOptions cvnn;
};

inline EstimatorReport run_method(Method method, const Integrand& f, const MethodInputs& in) {
  auto need_dirs = [&]() -> const DirectionSet& {
    if (in.dirs == nullptr) throw std::invalid_argument(std::string(to_string(method)) + ": needs a direction set");
    return *in.dirs;
  };
  switch (method) {
    case Method::mc: return mc_estimate(f, need_dirs());
    case Method::shcv:
      if (in.basis == nullptr) throw std::invalid_argument("shcv: needs a harmonic basis");
      return shcv(f, need_dirs(), *in.basis);
    case Method::cvlow: return cv_lower(f, need_dirs());
    case Method::cvup: return cv_upper(f, need_dirs());
    case Method::cvnn: return cvnn(f, need_dirs(), in.seed, in.cvnn);
    case Method::qmc: return qmc_estimate(f, in.n, in.qmc_kind);
    case Method::rqmc: return rqmc_estimate(f, in.n, in.rqmc_kind, in.seed);
  }
  throw std::logic_error("run_method: unreachable");
}

}  // namespace swcv
