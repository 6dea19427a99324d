// Compares MC and SHCV on two bundled point clouds.
// Usage: swcv_demo [data-dir]

#include <iomanip>
#include <iostream>
#include <string>

#include "swcv/swcv.hpp"

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data";
  swcv::Integrand f(swcv::load_point_cloud(dir + "/cube.txt", false), swcv::load_point_cloud(dir + "/torus.txt", false),
                    2.0);
  const auto basis = swcv::build_basis(3, 3, 11);
  std::cout << std::setprecision(8);
  for (Eigen::Index n : {100, 400, 1600}) {
    const auto dirs = swcv::sample_uniform(n, 3, 1234 + static_cast<std::uint64_t>(n));
    const auto mc = swcv::mc_estimate(f, dirs);
    const auto sh = swcv::shcv(f, dirs, basis);
    std::cout << "n=" << n << "  mc=" << mc.estimate << "  shcv=" << sh.estimate << '\n';
  }
  const auto ref = swcv::rqmc_reference(f, 1'000'000, 99);
  std::cout << "reference=" << ref.value << " +/- " << ref.standard_error << '\n';
}
