// Command-line front end: estimate, bench, gram, basis-info.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swcv/swcv.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int half_degree(int degree) {
  if (degree < 2 || degree % 2 != 0) throw std::invalid_argument("--degree must be an even number >= 2");
  return degree / 2;
}

struct EstimateArgs {
  std::string input_a;
  std::string input_b;
  double p = 2.0;
  std::string method = "mc";
  Eigen::Index n = 1000;
  int degree = 4;
  std::uint64_t seed = 0;
  bool weighted = false;
};

int run_estimate(const EstimateArgs& a) {
  const swcv::Method method = swcv::parse_method(a.method);
  swcv::Integrand f(swcv::load_point_cloud(a.input_a, a.weighted), swcv::load_point_cloud(a.input_b, a.weighted), a.p);
  const Eigen::Index d = f.dim();
  std::optional<swcv::DirectionSet> dirs;
  std::optional<swcv::HarmonicBasis> basis;
  if (method != swcv::Method::qmc && method != swcv::Method::rqmc) {
    dirs.emplace(swcv::sample_uniform(a.n, d, swcv::derive_seed(a.seed, {0})));
  }
  if (method == swcv::Method::shcv) {
    basis.emplace(swcv::build_basis(static_cast<int>(d), half_degree(a.degree), swcv::derive_seed(a.seed, {1})));
  }
  swcv::MethodInputs in;
  in.dirs = dirs ? &*dirs : nullptr;
  in.basis = basis ? &*basis : nullptr;
  in.n = a.n;
  in.seed = swcv::derive_seed(a.seed, {2});
  const swcv::EstimatorReport r = swcv::run_method(method, f, in);

  std::cout << std::setprecision(17);
  std::cout << "method " << swcv::to_string(r.method) << '\n';
  std::cout << "d " << d << '\n';
  std::cout << "n " << r.n << '\n';
  std::cout << "p " << a.p << '\n';
  std::cout << "estimate " << r.estimate << '\n';
  if (r.residual_variance) std::cout << "residual_variance " << *r.residual_variance << '\n';
  if (method == swcv::Method::shcv) std::cout << "controls " << r.controls_used << '\n';
  if (r.fallback) std::cout << "fallback mc\n";
  std::cout << "wall_time_ms " << r.wall_time_ms() << '\n';
  return 0;
}

struct BenchArgs {
  std::string scenario = "gaussian-exact";
  Eigen::Index d = 5;
  std::string n_grid = "100,250,500,1000";
  std::string methods = "mc,cvlow,cvup,cvnn,shcv,qmc,rqmc";
  int reps = 100;
  std::uint64_t seed = 0;
  int degree = 4;
  std::string out;
  Eigen::Index m = 1000;
  double gamma = 2.0;
  Eigen::Index n_ref = 10'000'000;
  std::string cache_dir = ".swcv-cache";
  std::string data_dir = "data";
  std::string cloud_a;
  std::string cloud_b;
  unsigned threads = 1;
  Eigen::Index max_controls = 0;
  bool summary = false;
};

int run_bench(const BenchArgs& a) {
  swcv::BenchmarkConfig cfg;
  cfg.scenario = swcv::parse_scenario(a.scenario);
  cfg.d = a.d;
  cfg.n_grid.clear();
  for (const auto& tok : split_csv(a.n_grid)) cfg.n_grid.push_back(std::stoll(tok));
  cfg.methods.clear();
  for (const auto& tok : split_csv(a.methods)) cfg.methods.push_back(swcv::parse_method(tok));
  cfg.reps = a.reps;
  cfg.seed = a.seed;
  cfg.degree = a.degree;
  cfg.m = a.m;
  cfg.gamma = a.gamma;
  cfg.n_ref = a.n_ref;
  cfg.cache_dir = a.cache_dir;
  cfg.data_dir = a.data_dir;
  cfg.cloud_a = a.cloud_a;
  cfg.cloud_b = a.cloud_b;
  cfg.threads = std::max(1U, a.threads);
  cfg.max_controls = a.max_controls;
  cfg.validate();

  const swcv::ScenarioInstance inst = swcv::make_instance(cfg);
  std::cerr << std::setprecision(17) << "ground truth " << inst.truth.value << " (" << inst.truth.source
            << ", standard error " << inst.truth.standard_error << ")\n";
  const auto rows = swcv::run_benchmark(cfg, inst);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.out.empty() && a.out != "-") {
    file.open(a.out, std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open output file " + a.out);
    out = &file;
  }
  swcv::write_benchmark_csv(*out, rows);
  if (a.summary) {
    std::cerr << "method,n,mse,mean_time_ms,time_sd_ms\n" << std::setprecision(6);
    for (const auto& s : swcv::summarize(rows)) {
      std::cerr << swcv::to_string(s.method) << ',' << s.n << ',' << s.mse << ',' << s.mean_time_ms << ','
                << s.time_sd_ms << '\n';
    }
  }
  return 0;
}

struct GramArgs {
  std::string input_dir;
  double gamma = 1.0;
  Eigen::Index n = 100;
  std::string method = "mc";
  int degree = 4;
  std::uint64_t seed = 0;
  double p = 2.0;
  bool weighted = false;
  unsigned threads = 1;
};

int run_gram(const GramArgs& a) {
  std::vector<swcv::DiscreteMeasure> measures;
  for (const auto& path : swcv::detail::list_cloud_files(a.input_dir)) {
    measures.push_back(swcv::load_point_cloud(path.string(), a.weighted));
  }
  if (measures.empty()) throw std::runtime_error("no measure files in " + a.input_dir);
  swcv::GramOptions opts;
  opts.p = a.p;
  opts.threads = std::max(1U, a.threads);
  const std::uint64_t dir_seed = swcv::derive_seed(a.seed, {0});
  swcv::GramResult g;
  const swcv::Method method = swcv::parse_method(a.method);
  if (method == swcv::Method::mc) {
    g = swcv::gram_mc(measures, measures, a.gamma, a.n, dir_seed, opts);
  } else if (method == swcv::Method::shcv) {
    const auto basis = swcv::build_basis(static_cast<int>(measures.front().dim()), half_degree(a.degree),
                                         swcv::derive_seed(a.seed, {1}));
    g = swcv::gram_shcv(measures, measures, a.gamma, a.n, basis, dir_seed, opts);
  } else {
    throw std::invalid_argument("gram: --method must be mc or shcv");
  }
  std::cout << "i,j,k_value\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < g.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.matrix.cols(); ++j) std::cout << i << ',' << j << ',' << g.matrix(i, j) << '\n';
  }
  return 0;
}

int run_basis_info(int d, int degree, std::uint64_t seed) {
  const int half = half_degree(degree);
  std::cout << "d " << d << '\n' << "degree " << degree << '\n';
  for (int l = 2; l <= degree; l += 2) std::cout << "block " << l << " count " << swcv::count_degree(d, l) << '\n';
  const auto total = swcv::count_even_cumulative(d, half);
  std::cout << "s " << total << '\n';
  // Building a fundamental system is quadratic in the block size; skip the diagnostic past this.
  constexpr std::uint64_t kMaxDiagnosed = 2000;
  if (total > kMaxDiagnosed) {
    std::cout << "gram_diagnostic skipped (s > " << kMaxDiagnosed << ")\n";
    return 0;
  }
  const auto basis = swcv::build_basis(d, half, seed);
  if (d >= 4) {
    for (const auto& blk : basis.blocks()) {
      std::cout << "block " << blk.degree << " min_pivot_ratio " << std::setprecision(6) << blk.min_pivot_ratio << '\n';
    }
  }
  // Empirical Gram over uniform directions should be close to the identity.
  const Eigen::Index samples = std::clamp<Eigen::Index>(20 * basis.size(), 20'000, 100'000);
  const auto dirs = swcv::sample_uniform(samples, d, swcv::derive_seed(seed, {7}));
  const swcv::Matrix phi = basis.evaluate(dirs);
  const swcv::Matrix gram = phi.transpose() * phi / static_cast<double>(samples);
  const double dev = (gram - swcv::Matrix::Identity(basis.size(), basis.size())).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<swcv::Matrix> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  std::cout << std::setprecision(6) << "gram_samples " << samples << '\n'
            << "gram_max_abs_deviation " << dev << '\n'
            << "gram_condition " << ev.maxCoeff() / ev.minCoeff() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliced-Wasserstein estimation with spherical-harmonics control variates"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate SW_p^p between two point clouds");
  estimate->add_option("--input-a", est.input_a, "First point cloud")->required()->check(CLI::ExistingFile);
  estimate->add_option("--input-b", est.input_b, "Second point cloud")->required()->check(CLI::ExistingFile);
  estimate->add_option("--p", est.p, "Transport order")->check(CLI::Range(1.0, 1e9));
  estimate->add_option("--method", est.method, "mc, shcv, cvlow, cvup, cvnn, qmc or rqmc")
      ->check(CLI::IsMember({"mc", "shcv", "cvlow", "cvup", "cvnn", "qmc", "rqmc"}));
  estimate->add_option("--n", est.n, "Number of directions")->check(CLI::PositiveNumber);
  estimate->add_option("--degree", est.degree, "Maximum harmonic degree 2L");
  estimate->add_option("--seed", est.seed, "Seed");
  estimate->add_flag("--weighted", est.weighted, "Last column of each file holds weights");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Seeded benchmark; writes one CSV row per replication");
  bench_cmd->add_option("--scenario", bench.scenario)
      ->check(CLI::IsMember({"gaussian-exact", "gaussian-sampled", "pointcloud", "two-atom", "exactness-check"}));
  bench_cmd->add_option("--d", bench.d, "Dimension");
  bench_cmd->add_option("--n-grid", bench.n_grid, "Comma-separated direction counts");
  bench_cmd->add_option("--methods", bench.methods, "Comma-separated methods");
  bench_cmd->add_option("--reps", bench.reps, "Replications per cell");
  bench_cmd->add_option("--seed", bench.seed, "Base seed");
  bench_cmd->add_option("--degree", bench.degree, "Maximum harmonic degree 2L");
  bench_cmd->add_option("--out", bench.out, "Output CSV (default stdout)");
  bench_cmd->add_option("--m", bench.m, "Samples per measure (gaussian-sampled)");
  bench_cmd->add_option("--gamma", bench.gamma, "Covariance ratio (exactness-check)");
  bench_cmd->add_option("--n-ref", bench.n_ref, "Directions for reference values");
  bench_cmd->add_option("--cache-dir", bench.cache_dir, "Reference cache directory (empty disables)");
  bench_cmd->add_option("--data-dir", bench.data_dir, "Directory of bundled point clouds");
  bench_cmd->add_option("--cloud-a", bench.cloud_a, "First point cloud (pointcloud)");
  bench_cmd->add_option("--cloud-b", bench.cloud_b, "Second point cloud (pointcloud)");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads");
  bench_cmd->add_option("--max-cv", bench.max_controls, "Cap on the number of harmonic controls");
  bench_cmd->add_flag("--summary", bench.summary, "Print per-(method, n) MSE and timing to stderr");

  GramArgs gram;
  auto* gram_cmd = app.add_subcommand("gram", "Gram matrix of exp(-gamma SW) over a directory of measures");
  gram_cmd->add_option("--input-dir", gram.input_dir)->required()->check(CLI::ExistingDirectory);
  gram_cmd->add_option("--gamma", gram.gamma)->check(CLI::PositiveNumber);
  gram_cmd->add_option("--n", gram.n)->check(CLI::PositiveNumber);
  gram_cmd->add_option("--method", gram.method)->check(CLI::IsMember({"mc", "shcv"}));
  gram_cmd->add_option("--degree", gram.degree);
  gram_cmd->add_option("--seed", gram.seed);
  gram_cmd->add_option("--p", gram.p, "Transport order")->check(CLI::Range(1.0, 1e9));
  gram_cmd->add_flag("--weighted", gram.weighted);
  gram_cmd->add_option("--threads", gram.threads);

  int info_d = 3;
  int info_degree = 4;
  std::uint64_t info_seed = 0;
  auto* info = app.add_subcommand("basis-info", "Describe the harmonic basis for (d, 2L)");
  info->add_option("--d", info_d)->required();
  info->add_option("--degree", info_degree)->required();
  info->add_option("--seed", info_seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*estimate) return run_estimate(est);
    if (*bench_cmd) return run_bench(bench);
    if (*gram_cmd) return run_gram(gram);
    if (*info) return run_basis_info(info_d, info_degree, info_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
