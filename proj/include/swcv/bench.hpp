#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "swcv/detail/numeric.hpp"
#include "swcv/detail/parallel.hpp"
#include "swcv/estimators.hpp"
#include "swcv/gaussian_exact.hpp"
#include "swcv/harmonics.hpp"
#include "swcv/measures.hpp"
#include "swcv/sphere.hpp"
#include "swcv/wasserstein1d.hpp"

namespace swcv {

enum class Scenario { gaussian_exact, gaussian_sampled, pointcloud, two_atom, exactness_check };

inline const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::gaussian_exact: return "gaussian-exact";
    case Scenario::gaussian_sampled: return "gaussian-sampled";
    case Scenario::pointcloud: return "pointcloud";
    case Scenario::two_atom: return "two-atom";
    case Scenario::exactness_check: return "exactness-check";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::gaussian_exact, Scenario::gaussian_sampled, Scenario::pointcloud, Scenario::two_atom,
                     Scenario::exactness_check}) {
    if (name == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

/// SW_2^2 between (1/2)(d_(0,0) + d_(1,0)) and (1/2)(d_(0,0) + d_(1,1)).
inline constexpr double kTwoAtomSw2 = 3.0 / 8.0 - 1.0 / (2.0 * std::numbers::pi);

struct BenchmarkConfig {
  Scenario scenario = Scenario::gaussian_exact;
  Eigen::Index d = 5;
  std::vector<Eigen::Index> n_grid{100, 250, 500, 1000};
  std::vector<Method> methods{Method::mc, Method::shcv};
  int reps = 100;
  std::uint64_t seed = 0;
  /// Maximum harmonic degree 2L (even, >= 2).
  int degree = 4;
  /// Atoms per sampled measure.
  Eigen::Index m = 1000;
  /// Covariance ratio for the proportional (exactness-check) scenario.
  double gamma = 2.0;
  Eigen::Index n_ref = 10'000'000;
  /// Directory for cached reference values; empty disables caching.
  std::string cache_dir;
  /// Point-cloud files; when empty the first two files of data_dir are used.
  std::string cloud_a;
  std::string cloud_b;
  std::string data_dir = "data";
  unsigned threads = 1;
  /// Optional cap on the number of harmonic controls (0 = all).
  Eigen::Index max_controls = 0;
  /// Timed runs per cell; the reported time is their median.
  int timing_repeats = 3;
  /// Upper bound on CVNN fresh directions (0 = no bound).
  Eigen::Index cvnn_max_fresh = 0;

  void validate() const {
    if (reps < 1) throw std::invalid_argument("bench: reps must be >= 1");
    if (methods.empty()) throw std::invalid_argument("bench: methods list is empty");
    if (n_grid.empty()) throw std::invalid_argument("bench: n grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (n_grid[i] < 1) throw std::invalid_argument("bench: n values must be >= 1");
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("bench: n grid must be strictly increasing");
    }
    if (degree < 2 || degree % 2 != 0) throw std::invalid_argument("bench: degree must be an even number >= 2");
    if (d < 2) throw std::invalid_argument("bench: d must be >= 2");
    if (timing_repeats < 1) throw std::invalid_argument("bench: timing_repeats must be >= 1");
  }
};

struct BenchmarkRow {
  Method method = Method::mc;
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  int replication = 0;
  double estimate = 0.0;
  double abs_error = 0.0;
  double squared_error = 0.0;
  double wall_time_ms = 0.0;
};

struct GroundTruth {
  double value = 0.0;
  double standard_error = 0.0;
  std::string source;
};

/// The measure pair and reference value a benchmark runs against.
struct ScenarioInstance {
  Integrand integrand;
  GroundTruth truth;
};

namespace detail {

// Seed-derivation tags. The paired group is shared by MC, CV_low, CV_up, CVNN and SHCV so
// those methods see identical directions within a (n, replication) cell.
inline constexpr std::uint64_t kTagInstance = 1'000;
inline constexpr std::uint64_t kTagBasis = 1'001;
inline constexpr std::uint64_t kTagReference = 1'002;
inline constexpr std::uint64_t kTagPairedDirections = 1'003;

inline bool is_paired(Method m) {
  return m == Method::mc || m == Method::shcv || m == Method::cvlow || m == Method::cvup || m == Method::cvnn;
}

inline std::uint64_t scenario_id(Scenario s) { return static_cast<std::uint64_t>(s) + 1; }

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  void matrix(const double* data, Eigen::Index size) { bytes(data, static_cast<std::size_t>(size) * sizeof(double)); }
  [[nodiscard]] std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string hexfloat(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%a", v);
  return buf.data();
}

inline std::uint64_t integrand_key(const Integrand& f, Eigen::Index n_ref, std::uint64_t seed) {
  Fnv1a h;
  h.text("swcv-reference-v1");
  h.value(f.order());
  h.value(n_ref);
  h.value(seed);
  if (const auto* mu = f.discrete_source()) {
    const auto* nu = f.discrete_target();
    for (const auto* m : {mu, nu}) {
      h.value(m->size());
      h.value(m->dim());
      h.matrix(m->atoms().data(), m->atoms().size());
      h.matrix(m->weights().data(), m->weights().size());
    }
  } else {
    for (const auto* g : {f.gaussian_source(), f.gaussian_target()}) {
      h.value(g->dim());
      h.matrix(g->mean().data(), g->mean().size());
      h.matrix(g->covariance().data(), g->covariance().size());
    }
  }
  return h.digest();
}

inline std::optional<GroundTruth> read_cached_truth(const std::filesystem::path& file, std::uint64_t key) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string key_line;
  std::string value_line;
  std::string se_line;
  std::string check_line;
  if (!std::getline(in, key_line) || !std::getline(in, value_line) || !std::getline(in, se_line) ||
      !std::getline(in, check_line)) {
    return std::nullopt;
  }
  Fnv1a h;
  h.text(key_line);
  h.text(value_line);
  h.text(se_line);
  if (key_line != hex64(key) || check_line != hex64(h.digest())) return std::nullopt;
  try {
    return GroundTruth{std::stod(value_line), std::stod(se_line), "rqmc-cached"};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline void write_cached_truth(const std::filesystem::path& file, std::uint64_t key, const GroundTruth& truth) {
  std::filesystem::create_directories(file.parent_path());
  const std::string key_line = hex64(key);
  const std::string value_line = hexfloat(truth.value);
  const std::string se_line = hexfloat(truth.standard_error);
  Fnv1a h;
  h.text(key_line);
  h.text(value_line);
  h.text(se_line);
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write reference cache file " + tmp);
    out << key_line << '\n' << value_line << '\n' << se_line << '\n' << hex64(h.digest()) << '\n';
  }
  std::filesystem::rename(tmp, file);
}

inline Matrix random_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  }
  return out;
}

// a, b ~ N(1, I); A = S_a S_a^T and B = S_b S_b^T with standard normal S entries.
inline std::pair<GaussianMeasure, GaussianMeasure> random_gaussian_pair(Eigen::Index d, std::uint64_t seed,
                                                                       std::optional<double> proportional) {
  std::mt19937_64 rng(seed);
  const Vector a = Vector::Ones(d) + random_gaussian_matrix(d, 1, rng);
  const Vector b = Vector::Ones(d) + random_gaussian_matrix(d, 1, rng);
  const Matrix sa = random_gaussian_matrix(d, d, rng);
  const Matrix sb = random_gaussian_matrix(d, d, rng);
  Matrix cov_a = sa * sa.transpose();
  cov_a = 0.5 * (cov_a + cov_a.transpose());
  Matrix cov_b = proportional ? Matrix(*proportional * cov_a) : Matrix(sb * sb.transpose());
  cov_b = 0.5 * (cov_b + cov_b.transpose());
  return {GaussianMeasure(a, cov_a), GaussianMeasure(b, cov_b)};
}

inline DiscreteMeasure sample_gaussian(const GaussianMeasure& g, Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix z = random_gaussian_matrix(m, g.dim(), rng);
  const Matrix l = Eigen::LLT<Matrix>(g.covariance()).matrixL();
  RowMatrix atoms = (z * l.transpose()).rowwise() + g.mean().transpose();
  return DiscreteMeasure::uniform(std::move(atoms));
}

inline std::vector<std::filesystem::path> list_cloud_files(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace detail

/// RQMC reference for any integrand: n_ref / 10 low-discrepancy directions under each of
/// 10 Haar rotations; the standard error comes from the spread of the 10 rotated means.
inline GroundTruth rqmc_reference(const Integrand& f, Eigen::Index n_ref, std::uint64_t seed) {
  constexpr int kRotations = 10;
  if (n_ref < kRotations) throw std::invalid_argument("rqmc_reference: n_ref too small");
  if (const auto* g1 = f.gaussian_source(); g1 != nullptr && n_ref >= 1'000'000) {
    const auto ref = sw2_gaussian_reference(*g1, *f.gaussian_target(), n_ref, seed);
    return {ref.value, ref.standard_error, "rqmc"};
  }
  const Eigen::Index d = f.dim();
  const Eigen::Index per = n_ref / kRotations;
  const SequenceKind kind = d <= detail::kSobolMaxDim ? SequenceKind::sobol : SequenceKind::halton;
  const DirectionSet base = qmc_directions(per, d, kind);
  std::array<double, kRotations> means{};
  constexpr Eigen::Index kBlock = 8192;
  for (int r = 0; r < kRotations; ++r) {
    const Matrix rot = random_rotation(d, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    detail::CompensatedSum acc;
    RowMatrix block;
    for (Eigen::Index start = 0; start < per; start += kBlock) {
      const Eigen::Index len = std::min(kBlock, per - start);
      block.noalias() = base.matrix().middleRows(start, len) * rot.transpose();
      block = detail::normalize_rows(std::move(block));
      const Vector vals = f.evaluate_rows(block);
      for (Eigen::Index i = 0; i < len; ++i) acc.add(vals[i]);
    }
    means[static_cast<std::size_t>(r)] = acc.value() / static_cast<double>(per);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= kRotations;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= kRotations - 1;
  return {mean, std::sqrt(var / kRotations), "rqmc"};
}

/// Reference value with an on-disk cache keyed by a content hash of the inputs.
inline GroundTruth cached_reference(const Integrand& f, Eigen::Index n_ref, std::uint64_t seed,
                                    const std::string& cache_dir) {
  if (cache_dir.empty()) return rqmc_reference(f, n_ref, seed);
  const std::uint64_t key = detail::integrand_key(f, n_ref, seed);
  const std::filesystem::path file = std::filesystem::path(cache_dir) / (detail::hex64(key) + ".truth");
  if (auto hit = detail::read_cached_truth(file, key)) return *hit;
  GroundTruth truth = rqmc_reference(f, n_ref, seed);
  detail::write_cached_truth(file, key, truth);
  return truth;
}

/// Builds the measure pair of a scenario and its ground truth.
inline ScenarioInstance make_instance(const BenchmarkConfig& cfg, double p = 2.0) {
  const std::uint64_t sid = detail::scenario_id(cfg.scenario);
  const std::uint64_t inst_seed = derive_seed(cfg.seed, {sid, detail::kTagInstance});
  const std::uint64_t ref_seed = derive_seed(cfg.seed, {sid, detail::kTagReference});
  switch (cfg.scenario) {
    case Scenario::exactness_check: {
      auto [g1, g2] = detail::random_gaussian_pair(cfg.d, inst_seed, cfg.gamma);
      const double truth = sw2_gaussian_proportional(g1.mean(), g2.mean(), g1.covariance(), cfg.gamma, cfg.d);
      return {Integrand(std::move(g1), std::move(g2), p), {truth, 0.0, "closed-form"}};
    }
    case Scenario::gaussian_exact: {
      auto [g1, g2] = detail::random_gaussian_pair(cfg.d, inst_seed, std::nullopt);
      Integrand f(std::move(g1), std::move(g2), p);
      GroundTruth truth = cached_reference(f, cfg.n_ref, ref_seed, cfg.cache_dir);
      return {std::move(f), std::move(truth)};
    }
    case Scenario::gaussian_sampled: {
      const auto [g1, g2] = detail::random_gaussian_pair(cfg.d, inst_seed, std::nullopt);
      Integrand f(detail::sample_gaussian(g1, cfg.m, derive_seed(inst_seed, {1})),
                  detail::sample_gaussian(g2, cfg.m, derive_seed(inst_seed, {2})), p);
      GroundTruth truth = cached_reference(f, cfg.n_ref, ref_seed, cfg.cache_dir);
      return {std::move(f), std::move(truth)};
    }
    case Scenario::pointcloud: {
      std::string a = cfg.cloud_a;
      std::string b = cfg.cloud_b;
      if (a.empty() || b.empty()) {
        const auto files = detail::list_cloud_files(cfg.data_dir);
        if (files.size() < 2) throw std::runtime_error("pointcloud scenario needs two cloud files in " + cfg.data_dir);
        if (a.empty()) a = files[0].string();
        if (b.empty()) b = files[1].string();
      }
      Integrand f(load_point_cloud(a, false), load_point_cloud(b, false), p);
      if (f.dim() != cfg.d) {
        throw std::invalid_argument("pointcloud scenario: clouds have d=" + std::to_string(f.dim()) + ", config says d=" +
                                    std::to_string(cfg.d));
      }
      GroundTruth truth = cached_reference(f, cfg.n_ref, ref_seed, cfg.cache_dir);
      return {std::move(f), std::move(truth)};
    }
    case Scenario::two_atom: {
      if (cfg.d != 2) throw std::invalid_argument("two-atom scenario is defined for d = 2 only");
      if (p != 2.0) throw std::invalid_argument("two-atom closed form is for p = 2 only");
      RowMatrix x(2, 2);
      x << 0.0, 0.0, 1.0, 0.0;
      RowMatrix y(2, 2);
      y << 0.0, 0.0, 1.0, 1.0;
      return {Integrand(DiscreteMeasure::uniform(x), DiscreteMeasure::uniform(y), p), {kTwoAtomSw2, 0.0, "closed-form"}};
    }
  }
  throw std::logic_error("make_instance: unreachable");
}

/// Runs every (method, n, replication) cell; rows come back in that canonical order.
inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg, const ScenarioInstance& inst) {
  cfg.validate();
  const Integrand& f = inst.integrand;
  if (f.dim() != cfg.d) throw std::invalid_argument("run_benchmark: instance dimension does not match config");
  const std::uint64_t sid = detail::scenario_id(cfg.scenario);
  std::optional<HarmonicBasis> basis;
  if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::shcv) != cfg.methods.end()) {
    BasisOptions bopts;
    bopts.max_functions = cfg.max_controls;
    basis.emplace(build_basis(static_cast<int>(cfg.d), cfg.degree / 2, derive_seed(cfg.seed, {sid, detail::kTagBasis}),
                              bopts));
  }
  const std::size_t per_method = cfg.n_grid.size() * static_cast<std::size_t>(cfg.reps);
  std::vector<BenchmarkRow> rows(cfg.methods.size() * per_method);
  detail::parallel_for(rows.size(), cfg.threads, [&](std::size_t idx) {
    const std::size_t k = idx / per_method;
    const std::size_t ni = (idx % per_method) / static_cast<std::size_t>(cfg.reps);
    const int r = static_cast<int>(idx % static_cast<std::size_t>(cfg.reps));
    const Method method = cfg.methods[k];
    const Eigen::Index n = cfg.n_grid[ni];
    const auto un = static_cast<std::uint64_t>(n);
    const auto ur = static_cast<std::uint64_t>(r);
    const std::uint64_t cell_seed = derive_seed(cfg.seed, {sid, static_cast<std::uint64_t>(method), un, ur});

    std::optional<DirectionSet> dirs;
    if (detail::is_paired(method)) {
      dirs.emplace(sample_uniform(n, cfg.d, derive_seed(cfg.seed, {sid, detail::kTagPairedDirections, un, ur})));
    }
    MethodInputs in;
    in.dirs = dirs ? &*dirs : nullptr;
    in.basis = basis ? &*basis : nullptr;
    in.n = n;
    in.seed = cell_seed;
    in.cvnn.max_fresh = cfg.cvnn_max_fresh;

    std::vector<double> times;
    EstimatorReport report;
    for (int t = 0; t < cfg.timing_repeats; ++t) {
      report = run_method(method, f, in);
      times.push_back(report.wall_time_ms());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());

    BenchmarkRow& row = rows[idx];
    row.method = method;
    row.d = cfg.d;
    row.n = n;
    row.replication = r;
    row.estimate = report.estimate;
    row.abs_error = std::abs(report.estimate - inst.truth.value);
    row.squared_error = row.abs_error * row.abs_error;
    row.wall_time_ms = times[times.size() / 2];
  });
  return rows;
}

inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  return run_benchmark(cfg, make_instance(cfg));
}

struct SummaryRow {
  Method method = Method::mc;
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  int count = 0;
  double mse = 0.0;
  double mean_time_ms = 0.0;
  double time_sd_ms = 0.0;

  bool operator==(const SummaryRow&) const = default;
};

/// Per-(method, n) MSE and timing statistics, in order of first appearance.
inline std::vector<SummaryRow> summarize(const std::vector<BenchmarkRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<const BenchmarkRow*>> groups;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.method == row.method && s.n == row.n && s.d == row.d;
    });
    if (it == out.end()) {
      out.push_back({row.method, row.d, row.n});
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&row);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    detail::CompensatedSum se;
    detail::CompensatedSum tm;
    for (const auto* r : groups[g]) {
      se.add(r->squared_error);
      tm.add(r->wall_time_ms);
    }
    const auto count = static_cast<double>(groups[g].size());
    out[g].count = static_cast<int>(groups[g].size());
    out[g].mse = se.value() / count;
    out[g].mean_time_ms = tm.value() / count;
    detail::CompensatedSum var;
    for (const auto* r : groups[g]) var.add((r->wall_time_ms - out[g].mean_time_ms) * (r->wall_time_ms - out[g].mean_time_ms));
    out[g].time_sd_ms = groups[g].size() > 1 ? std::sqrt(var.value() / (count - 1.0)) : 0.0;
  }
  return out;
}

inline constexpr std::string_view kBenchmarkCsvHeader =
    "method,d,n,replication,estimate,abs_error,squared_error,wall_time_ms";

inline void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << kBenchmarkCsvHeader << '\n';
  const auto old = out.precision(17);
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.d << ',' << r.n << ',' << r.replication << ',' << r.estimate << ','
        << r.abs_error << ',' << r.squared_error << ',' << r.wall_time_ms << '\n';
  }
  out.precision(old);
}

inline std::vector<BenchmarkRow> read_benchmark_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kBenchmarkCsvHeader) {
    throw std::invalid_argument("benchmark CSV: missing or unexpected header");
  }
  std::vector<BenchmarkRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw std::invalid_argument("benchmark CSV line " + std::to_string(lineno) + ": expected 8 fields");
    try {
      BenchmarkRow r;
      r.method = parse_method(cells[0]);
      r.d = std::stoll(cells[1]);
      r.n = std::stoll(cells[2]);
      r.replication = std::stoi(cells[3]);
      r.estimate = std::stod(cells[4]);
      r.abs_error = std::stod(cells[5]);
      r.squared_error = std::stod(cells[6]);
      r.wall_time_ms = std::stod(cells[7]);
      rows.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("benchmark CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace swcv
