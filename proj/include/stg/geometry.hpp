#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stg {

/// Thrown when two grids that must share a shape do not.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Size2 {
  double w = 0.0;
  double h = 0.0;
  friend bool operator==(const Size2&, const Size2&) = default;
};

/// Axis-aligned box in continuous pixel coordinates. The far edges are
/// exclusive: a box covering pixel (x, y) alone is (x, y, x + 1, y + 1).
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  Size2 size() const { return {width(), height()}; }
  bool valid() const;

  static BBox from_center(Point2 c, Size2 s);

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Row-major 2-D grid. SoftMask and BinaryMask are the two instantiations
/// used throughout; the value-range invariants are enforced by the
/// operations that produce them, not by the container.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width), values_(checked_size(height, width), fill) {}
  Grid(int height, int width, std::vector<T> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (values_.size() != checked_size(height, width)) {
      throw DimensionMismatch("grid payload does not match " + std::to_string(height) + "x" +
                              std::to_string(width));
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(int y, int x) { return values_[index(y, x)]; }
  const T& operator()(int y, int x) const { return values_[index(y, x)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_size(int height, int width) {
    if (height < 0 || width < 0) throw std::invalid_argument("negative grid dimension");
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

using SoftMask = Grid<double>;
using BinaryMask = Grid<std::uint8_t>;
/// Per-pixel object ids, 0 = background.
using LabelMap = Grid<std::uint8_t>;

/// C x H x W real grid, channel-major (innermost dimension is x).
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, double fill = 0.0);
  FeatureMap(int channels, int height, int width, std::vector<double> values);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }

  double& operator()(int c, int y, int x) { return values_[index(c, y, x)]; }
  double operator()(int c, int y, int x) const { return values_[index(c, y, x)]; }

  SoftMask channel(int c) const;
  void set_channel(int c, const SoftMask& plane);

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> values_;
};

enum class Interp { nearest, bilinear };

/// Integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Rounds x_min/y_min down and x_max/y_max up. Not clamped.
PixelRect rasterize(const BBox& b);
PixelRect clamp_rect(PixelRect r, int height, int width);

double iou_box(const BBox& a, const BBox& b);
double iou_mask(const BinaryMask& a, const BinaryMask& b);
std::size_t count_foreground(const BinaryMask& m);
std::optional<BBox> bbox_of_mask(const BinaryMask& m);
BBox expand_box(const BBox& b, double margin, int height, int width);

/// Samples `region` of `grid` onto a target_h x target_w grid using
/// pixel-centre alignment. Throws std::out_of_range when the region misses
/// the grid entirely.
SoftMask crop_resize(const SoftMask& grid, const BBox& region, int target_h, int target_w,
                     Interp mode);
BinaryMask crop_resize(const BinaryMask& grid, const BBox& region, int target_h, int target_w);
FeatureMap crop_resize(const FeatureMap& grid, const BBox& region, int target_h, int target_w,
                       Interp mode = Interp::bilinear);

/// Zero canvas with `crop` resampled into the rasterized `region`. Canvas
/// pixels outside the region (or outside the canvas) stay 0.
SoftMask paste_into_void(const SoftMask& crop, const BBox& region, int height, int width,
                         Interp mode);
BinaryMask paste_into_void(const BinaryMask& crop, const BBox& region, int height, int width);

SoftMask to_soft(const BinaryMask& m);
BinaryMask complement(const BinaryMask& m);

}  // namespace stg
