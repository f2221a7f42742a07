#include "tvspec/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tvspec {

bool ShapeSpec::contains(double x, double y) const {
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  return dx * dx + dy * dy <= 1.0;
}

double ShapeSpec::area() const { return std::numbers::pi * rx * ry; }

double ShapeSpec::perimeter() const {
  if (kind == ShapeKind::Disk || rx == ry) return 2.0 * std::numbers::pi * rx;
  const double a = std::max(rx, ry);
  const double b = std::min(rx, ry);
  const double h = (a - b) * (a - b) / ((a + b) * (a + b));
  return std::numbers::pi * (a + b) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
}

namespace {

void check_shape(const ShapeSpec& s, int width, int height) {
  if (!(s.rx > 0.0) || !(s.ry > 0.0)) throw std::invalid_argument("shape radii must be positive");
  if (s.kind == ShapeKind::Disk && s.rx != s.ry) {
    throw std::invalid_argument("disk radii must be equal");
  }
  if (s.height == 0.0 || !std::isfinite(s.height)) {
    throw std::invalid_argument("shape height must be finite and nonzero");
  }
  if (s.cx - s.rx < kShapeMargin || s.cx + s.rx > width - 1 - kShapeMargin ||
      s.cy - s.ry < kShapeMargin || s.cy + s.ry > height - 1 - kShapeMargin) {
    throw std::invalid_argument("shape out of bounds: needs a margin of " +
                                std::to_string(kShapeMargin) + " pixels inside " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
}

std::vector<std::uint8_t> mask_of(const ShapeSpec& s, int width, int height) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(width) * height, 0);
  const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - s.rx)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(s.cx + s.rx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - s.ry)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(s.cy + s.ry)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (s.contains(x, y)) m[static_cast<std::size_t>(y) * width + x] = 1;
  return m;
}

// True if some pixel of a lies within kShapeGap of some pixel of b.
bool too_close(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, int width,
               int height) {
  const int r = static_cast<int>(std::ceil(kShapeGap));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!a[static_cast<std::size_t>(y) * width + x]) continue;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= width || yy >= height) continue;
          if (dx * dx + dy * dy > kShapeGap * kShapeGap) continue;
          if (b[static_cast<std::size_t>(yy) * width + xx]) return true;
        }
      }
    }
  }
  return false;
}

bool bounding_far_apart(const ShapeSpec& a, const ShapeSpec& b) {
  const double ra = std::max(a.rx, a.ry), rb = std::max(b.rx, b.ry);
  return std::hypot(a.cx - b.cx, a.cy - b.cy) > ra + rb + kShapeGap + 2.0;
}

}  // namespace

ImageGrid render_scene(const std::vector<ShapeSpec>& shapes, int width, int height,
                       double background, bool allow_overlap) {
  ImageGrid out(width, height, background);
  std::vector<std::vector<std::uint8_t>> masks;
  masks.reserve(shapes.size());
  for (const auto& s : shapes) {
    check_shape(s, width, height);
    masks.push_back(mask_of(s, width, height));
  }
  if (!allow_overlap) {
    for (std::size_t i = 0; i < shapes.size(); ++i)
      for (std::size_t j = i + 1; j < shapes.size(); ++j)
        if (!bounding_far_apart(shapes[i], shapes[j]) && too_close(masks[i], masks[j], width, height))
          throw std::invalid_argument("shapes " + std::to_string(i) + " and " + std::to_string(j) +
                                      " overlap or are closer than the minimum gap");
  }
  auto d = out.data();
  for (std::size_t i = 0; i < shapes.size(); ++i)
    for (std::size_t p = 0; p < d.size(); ++p)
      if (masks[i][p]) d[p] += shapes[i].height;
  return out;
}

ImageGrid render_scene(const Scene& scene, bool allow_overlap) {
  return render_scene(scene.shapes, scene.width, scene.height, scene.background, allow_overlap);
}

int pixel_count(const ShapeSpec& shape, int width, int height) {
  const auto m = mask_of(shape, width, height);
  return static_cast<int>(std::count(m.begin(), m.end(), 1));
}

double predicted_scale(const ShapeSpec& shape, double domain_area) {
  const double area = shape.area();
  const double base = std::abs(shape.height) * area / shape.perimeter();
  if (!std::isfinite(domain_area)) return base;
  if (!(domain_area > area)) throw std::invalid_argument("predicted_scale: shape exceeds domain");
  // Both the shape and its complement move until they meet at the mean.
  return base * (1.0 - area / domain_area);
}

std::uint64_t SeededUniform::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int SeededUniform::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(next_u64() % span);
}

Scene random_scene(const SceneGeneratorConfig& cfg, std::uint64_t seed) {
  SeededUniform rng(seed);
  Scene scene;
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.background = cfg.background;
  scene.seed = seed;
  const int target = rng.uniform_int(cfg.shapes_min, cfg.shapes_max);
  std::vector<std::vector<std::uint8_t>> masks;
  for (int attempt = 0; attempt < cfg.placement_attempts && static_cast<int>(scene.shapes.size()) < target;
       ++attempt) {
    const bool ellipse = rng.next_double() < cfg.ellipse_fraction;
    const double rx = rng.uniform(cfg.radius_min, cfg.radius_max);
    const double ry = ellipse ? rng.uniform(cfg.radius_min, cfg.radius_max) : rx;
    const double h = rng.uniform(cfg.height_min, cfg.height_max);
    const double xlo = kShapeMargin + rx, xhi = cfg.width - 1 - kShapeMargin - rx;
    const double ylo = kShapeMargin + ry, yhi = cfg.height - 1 - kShapeMargin - ry;
    const double ux = rng.next_double();
    const double uy = rng.next_double();
    if (xhi < xlo || yhi < ylo) continue;
    ShapeSpec s = ellipse ? ShapeSpec::ellipse(xlo + (xhi - xlo) * ux, ylo + (yhi - ylo) * uy, rx, ry, h)
                          : ShapeSpec::disk(xlo + (xhi - xlo) * ux, ylo + (yhi - ylo) * uy, rx, h);
    auto m = mask_of(s, cfg.width, cfg.height);
    bool ok = true;
    for (std::size_t i = 0; i < scene.shapes.size() && ok; ++i) {
      if (!bounding_far_apart(s, scene.shapes[i]) && too_close(m, masks[i], cfg.width, cfg.height)) {
        ok = false;
      }
    }
    if (!ok) continue;
    scene.shapes.push_back(s);
    masks.push_back(std::move(m));
  }
  return scene;
}

void to_json(nlohmann::json& j, const ShapeSpec& s) {
  j = nlohmann::json{{"kind", s.kind == ShapeKind::Disk ? "disk" : "ellipse"},
                     {"center", {s.cx, s.cy}},
                     {"radii", {s.rx, s.ry}},
                     {"height", s.height}};
}

void from_json(const nlohmann::json& j, ShapeSpec& s) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "disk") {
    s.kind = ShapeKind::Disk;
  } else if (kind == "ellipse") {
    s.kind = ShapeKind::Ellipse;
  } else {
    throw std::invalid_argument("unknown shape kind: " + kind);
  }
  s.cx = j.at("center").at(0).get<double>();
  s.cy = j.at("center").at(1).get<double>();
  s.rx = j.at("radii").at(0).get<double>();
  s.ry = j.at("radii").at(1).get<double>();
  s.height = j.at("height").get<double>();
}

void to_json(nlohmann::json& j, const Scene& s) {
  j = nlohmann::json{{"width", s.width},     {"height", s.height}, {"background", s.background},
                     {"seed", s.seed},       {"shapes", s.shapes}};
}

void from_json(const nlohmann::json& j, Scene& s) {
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.background = j.value("background", 0.0);
  s.seed = j.value("seed", std::uint64_t{0});
  s.shapes = j.at("shapes").get<std::vector<ShapeSpec>>();
}

}  // namespace tvspec
