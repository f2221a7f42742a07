#include "tvspec/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tvspec {

namespace {

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
  }
}

}  // namespace

ImageGrid::ImageGrid(int width, int height, double fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("ImageGrid: width and height must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

ImageGrid::ImageGrid(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("ImageGrid: width and height must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("ImageGrid: data length does not equal width*height");
  }
}

ImageGrid& ImageGrid::operator+=(const ImageGrid& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ImageGrid& ImageGrid::operator-=(const ImageGrid& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ImageGrid& ImageGrid::operator*=(double a) {
  for (double& v : data_) v *= a;
  return *this;
}

ImageGrid operator+(ImageGrid a, const ImageGrid& b) { return a += b; }
ImageGrid operator-(ImageGrid a, const ImageGrid& b) { return a -= b; }
ImageGrid operator*(double a, ImageGrid u) { return u *= a; }

void gradient_into(const ImageGrid& u, VectorField& out) {
  const int w = u.width();
  const int h = u.height();
  if (out.width != w || out.height != h) out = VectorField(w, h);
  const double* src = u.data().data();
  for (int y = 0; y < h; ++y) {
    const double* row = src + static_cast<std::size_t>(y) * w;
    const double* next = y + 1 < h ? row + w : nullptr;
    double* gx = out.x.data() + static_cast<std::size_t>(y) * w;
    double* gy = out.y.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x + 1 < w; ++x) gx[x] = row[x + 1] - row[x];
    gx[w - 1] = 0.0;
    if (next) {
      for (int x = 0; x < w; ++x) gy[x] = next[x] - row[x];
    } else {
      std::fill(gy, gy + w, 0.0);
    }
  }
}

VectorField gradient(const ImageGrid& u) {
  VectorField g(u.width(), u.height());
  gradient_into(u, g);
  return g;
}

void divergence_into(const VectorField& p, ImageGrid& out) {
  const int w = p.width;
  const int h = p.height;
  if (out.width() != w || out.height() != h) out = ImageGrid(w, h);
  double* dst = out.data().data();
  for (int y = 0; y < h; ++y) {
    const std::size_t base = static_cast<std::size_t>(y) * w;
    const double* px = p.x.data() + base;
    const double* py = p.y.data() + base;
    const double* py_prev = y > 0 ? py - w : nullptr;
    double* d = dst + base;
    // x part: px[x] (x < w-1) minus px[x-1] (x > 0)
    if (w == 1) {
      d[0] = 0.0;
    } else {
      d[0] = px[0];
      for (int x = 1; x + 1 < w; ++x) d[x] = px[x] - px[x - 1];
      d[w - 1] = -px[w - 2];
    }
    if (h > 1) {
      if (y == 0) {
        for (int x = 0; x < w; ++x) d[x] += py[x];
      } else if (y + 1 < h) {
        for (int x = 0; x < w; ++x) d[x] += py[x] - py_prev[x];
      } else {
        for (int x = 0; x < w; ++x) d[x] -= py_prev[x];
      }
    }
  }
}

ImageGrid divergence(const VectorField& p) {
  ImageGrid d(p.width, p.height);
  divergence_into(p, d);
  return d;
}

double tv_value(const ImageGrid& u) {
  const int w = u.width();
  const int h = u.height();
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = u.at(x, y);
      const double dx = x + 1 < w ? u.at(x + 1, y) - c : 0.0;
      const double dy = y + 1 < h ? u.at(x, y + 1) - c : 0.0;
      total += std::sqrt(dx * dx + dy * dy);
    }
  }
  return total;
}

ImageGrid scale_add(double a, const ImageGrid& u, double b, const ImageGrid& v) {
  require_same_shape(u, v, "scale_add");
  ImageGrid out(u.width(), u.height());
  auto du = u.data();
  auto dv = v.data();
  auto dout = out.data();
  for (std::size_t i = 0; i < dout.size(); ++i) dout[i] = a * du[i] + b * dv[i];
  return out;
}

double dot(const ImageGrid& u, const ImageGrid& v) {
  require_same_shape(u, v, "dot");
  double s = 0.0;
  auto du = u.data();
  auto dv = v.data();
  for (std::size_t i = 0; i < du.size(); ++i) s += du[i] * dv[i];
  return s;
}

double dot(const VectorField& p, const VectorField& q) {
  if (p.width != q.width || p.height != q.height) {
    throw std::invalid_argument("dot: vector field dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p.x[i] * q.x[i] + p.y[i] * q.y[i];
  return s;
}

double norm_l2(const ImageGrid& u) { return std::sqrt(dot(u, u)); }

double norm_l1(const ImageGrid& u) {
  double s = 0.0;
  for (double v : u.data()) s += std::abs(v);
  return s;
}

double sum(const ImageGrid& u) {
  double s = 0.0;
  for (double v : u.data()) s += v;
  return s;
}

double mean(const ImageGrid& u) { return u.empty() ? 0.0 : sum(u) / static_cast<double>(u.size()); }

double min_value(const ImageGrid& u) {
  return u.empty() ? 0.0 : *std::min_element(u.data().begin(), u.data().end());
}

double max_value(const ImageGrid& u) {
  return u.empty() ? 0.0 : *std::max_element(u.data().begin(), u.data().end());
}

double relative_l2(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "relative_l2");
  double num = 0.0;
  double den = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    num += d * d;
    den += db[i] * db[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

bool all_finite(const ImageGrid& u) {
  return std::all_of(u.data().begin(), u.data().end(), [](double v) { return std::isfinite(v); });
}

double max_pointwise_norm(const VectorField& p) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m = std::max(m, std::hypot(p.x[i], p.y[i]));
  }
  return m;
}

ImageGrid rotate90(const ImageGrid& u, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return u;
  const int w = u.width();
  const int h = u.height();
  if (turns == 2) {
    ImageGrid out(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(w - 1 - x, h - 1 - y) = u.at(x, y);
    return out;
  }
  ImageGrid out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // counter-clockwise in display orientation (y pointing down)
      if (turns == 1) {
        out.at(y, w - 1 - x) = u.at(x, y);
      } else {
        out.at(h - 1 - y, x) = u.at(x, y);
      }
    }
  }
  return out;
}

ImageGrid crop(const ImageGrid& u, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || width <= 0 || height <= 0 || x0 + width > u.width() ||
      y0 + height > u.height()) {
    throw std::invalid_argument("crop: window outside the image");
  }
  ImageGrid out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.at(x, y) = u.at(x0 + x, y0 + y);
  return out;
}

}  // namespace tvspec
