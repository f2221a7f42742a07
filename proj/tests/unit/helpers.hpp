#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "tvspec/image.hpp"
#include "tvspec/shapes.hpp"

namespace tvspec::test {

inline ImageGrid random_grid(int w, int h, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  ImageGrid u(w, h);
  for (double& x : u.data()) x = d(rng);
  return u;
}

inline VectorField random_field(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VectorField p(w, h);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p.x[i] = d(rng);
    p.y[i] = d(rng);
  }
  return p;
}

// Closed-form patterns shared with tests/oracles/metrics_and_tv.py.
inline ImageGrid pattern_a(int w, int h, int k) {
  ImageGrid u(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      u.at(x, y) = std::sin(0.37 * (k + 1) * x + 0.23 * y) +
                   0.5 * std::cos(0.19 * x - 0.41 * (k + 2) * y) +
                   0.1 * ((x * 7 + y * 13 + k * 5) % 11);
  return u;
}

inline ImageGrid pattern_b(int w, int h, int k) {
  ImageGrid u = pattern_a(w, h, k);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) u.at(x, y) += 0.35 * std::sin(0.13 * (k + 1) * x + 0.7 * y) - 0.05 * k;
  return u;
}

inline ImageGrid disk_image(int n, double cx, double cy, double r, double height) {
  return render_scene({ShapeSpec::disk(cx, cy, r, height)}, n, n, 0.0);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tvspec_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path natural_image(const std::string& name) {
  return std::filesystem::path(TVSPEC_TEST_DATA) / "natural" / (name + ".png");
}

}  // namespace tvspec::test
