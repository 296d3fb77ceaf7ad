#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "care/kernels.hpp"
#include "care/random.hpp"
#include "care/survival_data.hpp"

namespace fixtures {

using namespace care;

/// n points uniform on [0,1]^d.
inline PointMatrix uniform_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  PointMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    KeyedStream rng(seed, 90, static_cast<std::uint64_t>(i));
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = rng.uniform();
  }
  return x;
}

inline Vector random_vector(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  Vector v(n);
  KeyedStream rng(seed, 91, 0);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.uniform(-1.0, 1.0);
  return v;
}

/// Random survival sample with some tied times and roughly 30% censoring.
inline SurvivalDataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed,
                                      bool ties = true) {
  PointMatrix x = uniform_points(n, d, seed);
  Vector t(static_cast<Eigen::Index>(n));
  std::vector<std::uint8_t> c(n);
  KeyedStream rng(seed, 92, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.02 + 0.98 * rng.uniform();
    if (ties) v = std::ceil(v * 10.0) / 10.0;
    t[static_cast<Eigen::Index>(i)] = v;
    c[i] = rng.uniform() < 0.3 ? 1 : 0;
  }
  return SurvivalDataset(std::move(x), std::move(t), std::move(c));
}

/// Every kernel family, each with a positive shift, for d-dimensional input.
inline std::vector<KernelConfig> kernel_zoo(std::size_t d) {
  std::vector<KernelConfig> out;
  out.push_back(KernelConfig::gaussian(std::vector<double>(d, 0.5), 1.0));
  out.push_back(KernelConfig::polynomial(2, 1.0));
  if (d == 1) {
    out.push_back(KernelConfig::sobolev1(1.0));
    out.push_back(KernelConfig::sobolev2(0.5));
  }
  std::vector<std::size_t> coords;
  std::vector<KernelConfig> parts;
  for (std::size_t j = 0; j < d; ++j) {
    coords.push_back(j);
    parts.push_back(j % 2 == 0 ? KernelConfig::sobolev1(j == 0 ? 1.0 : 0.0)
                               : KernelConfig::sobolev2(0.0));
  }
  out.push_back(KernelConfig::additive(coords, parts));
  return out;
}

/// Fresh scratch directory under the test working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
