#include "stg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace stg {

bool BBox::valid() const {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
         std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
}

BBox BBox::from_center(Point2 c, Size2 s) {
  return {c.x - 0.5 * s.w, c.y - 0.5 * s.h, c.x + 0.5 * s.w, c.y + 0.5 * s.h};
}

FeatureMap::FeatureMap(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw std::invalid_argument("negative feature map dimension");
  }
  values_.assign(static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
                     static_cast<std::size_t>(width),
                 fill);
}

FeatureMap::FeatureMap(int channels, int height, int width, std::vector<double> values)
    : FeatureMap(channels, height, width) {
  if (values.size() != values_.size()) {
    throw DimensionMismatch("feature map payload does not match its shape");
  }
  values_ = std::move(values);
}

SoftMask FeatureMap::channel(int c) const {
  const std::size_t plane = static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  const auto first = values_.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(c));
  return SoftMask(height_, width_, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(plane)));
}

void FeatureMap::set_channel(int c, const SoftMask& plane) {
  if (plane.height() != height_ || plane.width() != width_) {
    throw DimensionMismatch("channel plane does not match feature map");
  }
  std::copy(plane.values().begin(), plane.values().end(),
            values_.begin() + static_cast<std::ptrdiff_t>(plane.size() * static_cast<std::size_t>(c)));
}

PixelRect rasterize(const BBox& b) {
  return {static_cast<int>(std::floor(b.x_min)), static_cast<int>(std::floor(b.y_min)),
          static_cast<int>(std::ceil(b.x_max)), static_cast<int>(std::ceil(b.y_max))};
}

PixelRect clamp_rect(PixelRect r, int height, int width) {
  r.x0 = std::clamp(r.x0, 0, width);
  r.x1 = std::clamp(r.x1, 0, width);
  r.y0 = std::clamp(r.y0, 0, height);
  r.y1 = std::clamp(r.y1, 0, height);
  return r;
}

double iou_box(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_mask(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("iou_mask: masks differ in shape");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool fa = a[i] != 0;
    const bool fb = b[i] != 0;
    inter += (fa && fb) ? 1 : 0;
    uni += (fa || fb) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t count_foreground(const BinaryMask& m) {
  return static_cast<std::size_t>(std::count_if(m.values().begin(), m.values().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

std::optional<BBox> bbox_of_mask(const BinaryMask& m) {
  int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m(y, x) == 0) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return BBox{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 + 1),
              static_cast<double>(y1 + 1)};
}

BBox expand_box(const BBox& b, double margin, int height, int width) {
  if (margin < 0.0) throw std::invalid_argument("expand_box: negative margin");
  const double dx = margin * b.width();
  const double dy = margin * b.height();
  return {std::clamp(b.x_min - dx, 0.0, static_cast<double>(width)),
          std::clamp(b.y_min - dy, 0.0, static_cast<double>(height)),
          std::clamp(b.x_max + dx, 0.0, static_cast<double>(width)),
          std::clamp(b.y_max + dy, 0.0, static_cast<double>(height))};
}

namespace {

// Source window for a crop: the rasterized region clamped to the grid.
PixelRect source_window(const BBox& region, int height, int width) {
  if (!region.valid()) throw std::invalid_argument("crop_resize: invalid region");
  const PixelRect r = clamp_rect(rasterize(region), height, width);
  if (r.width() <= 0 || r.height() <= 0) {
    throw std::out_of_range("crop_resize: region lies outside the grid");
  }
  return r;
}

void check_target(int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) throw std::invalid_argument("crop_resize: empty target");
}

// Index of the nearest source sample for destination index `d` when `src`
// cells are mapped onto `dst` cells with pixel-centre alignment.
int nearest_index(int d, int src, int dst) {
  const double s = (d + 0.5) * static_cast<double>(src) / static_cast<double>(dst);
  return std::clamp(static_cast<int>(std::floor(s)), 0, src - 1);
}

struct LinearTap {
  int lo;
  int hi;
  double frac;
};

LinearTap linear_tap(int d, int src, int dst) {
  double s = (d + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(src - 1));
  const int lo = static_cast<int>(std::floor(s));
  const int hi = std::min(lo + 1, src - 1);
  return {lo, hi, s - lo};
}

// Resamples the window `win` of a plane accessed through `at(y, x)` onto
// an out_h x out_w destination, calling `put(y, x, value)`.
template <typename At, typename Put>
void resample(const At& at, const PixelRect& win, int out_h, int out_w, Interp mode,
              const Put& put) {
  const int sh = win.height();
  const int sw = win.width();
  if (mode == Interp::nearest) {
    std::vector<int> xs(static_cast<std::size_t>(out_w));
    for (int x = 0; x < out_w; ++x) xs[static_cast<std::size_t>(x)] = nearest_index(x, sw, out_w);
    for (int y = 0; y < out_h; ++y) {
      const int sy = win.y0 + nearest_index(y, sh, out_h);
      for (int x = 0; x < out_w; ++x) put(y, x, at(sy, win.x0 + xs[static_cast<std::size_t>(x)]));
    }
    return;
  }
  std::vector<LinearTap> xt(static_cast<std::size_t>(out_w));
  for (int x = 0; x < out_w; ++x) xt[static_cast<std::size_t>(x)] = linear_tap(x, sw, out_w);
  for (int y = 0; y < out_h; ++y) {
    const LinearTap ty = linear_tap(y, sh, out_h);
    const int ya = win.y0 + ty.lo;
    const int yb = win.y0 + ty.hi;
    for (int x = 0; x < out_w; ++x) {
      const LinearTap& tx = xt[static_cast<std::size_t>(x)];
      const int xa = win.x0 + tx.lo;
      const int xb = win.x0 + tx.hi;
      const double top = (1.0 - tx.frac) * at(ya, xa) + tx.frac * at(ya, xb);
      const double bot = (1.0 - tx.frac) * at(yb, xa) + tx.frac * at(yb, xb);
      put(y, x, (1.0 - ty.frac) * top + ty.frac * bot);
    }
  }
}

}  // namespace

SoftMask crop_resize(const SoftMask& grid, const BBox& region, int target_h, int target_w,
                     Interp mode) {
  check_target(target_h, target_w);
  const PixelRect win = source_window(region, grid.height(), grid.width());
  SoftMask out(target_h, target_w);
  resample([&](int y, int x) { return grid(y, x); }, win, target_h, target_w, mode,
           [&](int y, int x, double v) { out(y, x) = v; });
  return out;
}

BinaryMask crop_resize(const BinaryMask& grid, const BBox& region, int target_h, int target_w) {
  check_target(target_h, target_w);
  const PixelRect win = source_window(region, grid.height(), grid.width());
  BinaryMask out(target_h, target_w);
  resample([&](int y, int x) { return static_cast<double>(grid(y, x)); }, win, target_h,
           target_w, Interp::nearest,
           [&](int y, int x, double v) { out(y, x) = v != 0.0 ? 1 : 0; });
  return out;
}

FeatureMap crop_resize(const FeatureMap& grid, const BBox& region, int target_h, int target_w,
                       Interp mode) {
  check_target(target_h, target_w);
  const PixelRect win = source_window(region, grid.height(), grid.width());
  FeatureMap out(grid.channels(), target_h, target_w);
  for (int c = 0; c < grid.channels(); ++c) {
    resample([&](int y, int x) { return grid(c, y, x); }, win, target_h, target_w, mode,
             [&](int y, int x, double v) { out(c, y, x) = v; });
  }
  return out;
}

namespace {

template <typename T, typename Sample>
Grid<T> paste_impl(const Grid<T>& crop, const BBox& region, int height, int width,
                   const Sample& sample) {
  Grid<T> canvas(height, width);
  if (crop.empty() || !region.valid()) return canvas;
  const PixelRect r = rasterize(region);
  if (r.width() <= 0 || r.height() <= 0) return canvas;
  const PixelRect c = clamp_rect(r, height, width);
  for (int y = c.y0; y < c.y1; ++y) {
    for (int x = c.x0; x < c.x1; ++x) canvas(y, x) = sample(y - r.y0, x - r.x0, r);
  }
  return canvas;
}

}  // namespace

SoftMask paste_into_void(const SoftMask& crop, const BBox& region, int height, int width,
                         Interp mode) {
  const int ch = crop.height();
  const int cw = crop.width();
  if (mode == Interp::nearest) {
    return paste_impl(crop, region, height, width, [&](int dy, int dx, const PixelRect& r) {
      return crop(nearest_index(dy, ch, r.height()), nearest_index(dx, cw, r.width()));
    });
  }
  return paste_impl(crop, region, height, width, [&](int dy, int dx, const PixelRect& r) {
    const LinearTap ty = linear_tap(dy, ch, r.height());
    const LinearTap tx = linear_tap(dx, cw, r.width());
    const double top = (1.0 - tx.frac) * crop(ty.lo, tx.lo) + tx.frac * crop(ty.lo, tx.hi);
    const double bot = (1.0 - tx.frac) * crop(ty.hi, tx.lo) + tx.frac * crop(ty.hi, tx.hi);
    return (1.0 - ty.frac) * top + ty.frac * bot;
  });
}

BinaryMask paste_into_void(const BinaryMask& crop, const BBox& region, int height, int width) {
  const int ch = crop.height();
  const int cw = crop.width();
  return paste_impl(crop, region, height, width, [&](int dy, int dx, const PixelRect& r) {
    return crop(nearest_index(dy, ch, r.height()), nearest_index(dx, cw, r.width()));
  });
}

SoftMask to_soft(const BinaryMask& m) {
  SoftMask out(m.height(), m.width());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] != 0 ? 1.0 : 0.0;
  return out;
}

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out(m.height(), m.width());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] != 0 ? 0 : 1;
  return out;
}

}  // namespace stg
