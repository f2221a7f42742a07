#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tvspec {

/// Dense 2-D scalar field stored row-major, pixel spacing 1.
///
/// ImageGrid carries every image-like quantity of the pipeline: the input,
/// flow states, spectral responses and bands.
class ImageGrid {
 public:
  ImageGrid() = default;
  ImageGrid(int width, int height, double fill = 0.0);
  ImageGrid(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const ImageGrid& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  ImageGrid& operator+=(const ImageGrid& other);
  ImageGrid& operator-=(const ImageGrid& other);
  ImageGrid& operator*=(double a);

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

ImageGrid operator+(ImageGrid a, const ImageGrid& b);
ImageGrid operator-(ImageGrid a, const ImageGrid& b);
ImageGrid operator*(double a, ImageGrid u);

/// Two scalar planes (x and y components) on the same grid as an ImageGrid.
struct VectorField {
  int width = 0;
  int height = 0;
  std::vector<double> x;
  std::vector<double> y;

  VectorField() = default;
  VectorField(int w, int h)
      : width(w), height(h), x(static_cast<std::size_t>(w) * h, 0.0),
        y(static_cast<std::size_t>(w) * h, 0.0) {}

  std::size_t size() const { return x.size(); }
  bool matches(const ImageGrid& u) const { return width == u.width() && height == u.height(); }
};

// Forward differences with Neumann boundary: the last column (row) has a zero
// x (y) difference.
VectorField gradient(const ImageGrid& u);
void gradient_into(const ImageGrid& u, VectorField& out);

// Exact negative adjoint of gradient: <grad u, p> = -<u, div p>.
ImageGrid divergence(const VectorField& p);
void divergence_into(const VectorField& p, ImageGrid& out);

/// Isotropic discrete total variation, sum over pixels of |grad u|.
double tv_value(const ImageGrid& u);

/// Elementwise a*u + b*v. Throws std::invalid_argument on a shape mismatch.
ImageGrid scale_add(double a, const ImageGrid& u, double b, const ImageGrid& v);

double dot(const ImageGrid& u, const ImageGrid& v);
double dot(const VectorField& p, const VectorField& q);
double norm_l2(const ImageGrid& u);
double norm_l1(const ImageGrid& u);
double sum(const ImageGrid& u);
double mean(const ImageGrid& u);
double min_value(const ImageGrid& u);
double max_value(const ImageGrid& u);

/// ||a - b||_2 / ||b||_2, or ||a - b||_2 when b is zero.
double relative_l2(const ImageGrid& a, const ImageGrid& b);

bool all_finite(const ImageGrid& u);

/// Largest pointwise Euclidean norm of the field.
double max_pointwise_norm(const VectorField& p);

// Geometric helpers used by the invariance tests.
ImageGrid rotate90(const ImageGrid& u, int quarter_turns);
ImageGrid crop(const ImageGrid& u, int x0, int y0, int width, int height);

}  // namespace tvspec
