#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tvspec/image.hpp"

namespace tvspec {

enum class ShapeKind { Disk, Ellipse };

/// Axis-aligned disk or ellipse with pixel-centre coordinates.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Disk;
  double cx = 0.0;
  double cy = 0.0;
  double rx = 1.0;
  double ry = 1.0;
  double height = 1.0;

  static ShapeSpec disk(double cx, double cy, double r, double height) {
    return {ShapeKind::Disk, cx, cy, r, r, height};
  }
  static ShapeSpec ellipse(double cx, double cy, double rx, double ry, double height) {
    return {ShapeKind::Ellipse, cx, cy, rx, ry, height};
  }

  bool contains(double x, double y) const;
  double area() const;
  double perimeter() const;  // exact for disks, Ramanujan II for ellipses
};

inline constexpr int kShapeMargin = 2;
inline constexpr double kShapeGap = 2.0;

struct Scene {
  int width = 64;
  int height = 64;
  double background = 0.0;
  std::vector<ShapeSpec> shapes;
  std::uint64_t seed = 0;  // zero for hand-built scenes
};

/// Hard-indicator rendering: background + sum of height * 1_shape. Throws
/// std::invalid_argument if a shape is degenerate, leaves the margin, or
/// (unless allow_overlap) comes closer than kShapeGap pixels to another.
ImageGrid render_scene(const std::vector<ShapeSpec>& shapes, int width, int height,
                       double background, bool allow_overlap = false);
ImageGrid render_scene(const Scene& scene, bool allow_overlap = false);

/// Number of pixels the renderer marks inside the shape.
int pixel_count(const ShapeSpec& shape, int width, int height);

/// Scale of the spectral impulse of an isolated shape on a bounded domain:
/// t* = |h| * area * (1 - area/domain_area) / perimeter. Pass an infinite
/// domain_area for the unbounded limit |h| * area / perimeter.
double predicted_scale(const ShapeSpec& shape,
                       double domain_area = std::numeric_limits<double>::infinity());

struct SceneGeneratorConfig {
  int width = 64;
  int height = 64;
  double background = 0.0;
  double radius_min = 3.0;
  double radius_max = 20.0;
  double height_min = 0.3;
  double height_max = 2.5;
  int shapes_min = 1;
  int shapes_max = 6;
  double ellipse_fraction = 0.0;
  int placement_attempts = 200;
};

/// Seeded random scene of non-overlapping shapes. Deterministic in the seed
/// across platforms (no std:: distributions involved).
Scene random_scene(const SceneGeneratorConfig& cfg, std::uint64_t seed);

void to_json(nlohmann::json& j, const ShapeSpec& s);
void from_json(const nlohmann::json& j, ShapeSpec& s);
void to_json(nlohmann::json& j, const Scene& s);
void from_json(const nlohmann::json& j, Scene& s);

/// Counter-based stream of uniform doubles in [0, 1) built on splitmix64.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
  int uniform_int(int lo, int hi);  // inclusive

 private:
  std::uint64_t state_;
};

}  // namespace tvspec
