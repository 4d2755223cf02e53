#include "stg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stg {

double j_measure(const BinaryMask& pred, const BinaryMask& gt) { return iou_mask(pred, gt); }

BinaryMask boundary(const BinaryMask& m) {
  BinaryMask out(m.height(), m.width());
  const int h = m.height();
  const int w = m.width();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (m(y, x) == 0) continue;
      const bool edge = y == 0 || x == 0 || y == h - 1 || x == w - 1 || m(y - 1, x) == 0 ||
                        m(y + 1, x) == 0 || m(y, x - 1) == 0 || m(y, x + 1) == 0;
      out(y, x) = edge ? 1 : 0;
    }
  }
  return out;
}

int default_tolerance(int height, int width) {
  return static_cast<int>(std::lround(0.008 * std::hypot(height, width)));
}

namespace {

// Square (Chebyshev) dilation by `r`, done as two separable 1-D passes.
BinaryMask dilate_square(const BinaryMask& m, int r) {
  if (r <= 0) return m;
  const int h = m.height();
  const int w = m.width();
  BinaryMask rows(h, w);
  for (int y = 0; y < h; ++y) {
    int last = -1 - r;  // most recent foreground x to the left (inclusive)
    for (int x = 0; x < w; ++x) {
      if (m(y, x)) last = x;
      if (x - last <= r) rows(y, x) = 1;
    }
    last = w + r;
    for (int x = w - 1; x >= 0; --x) {
      if (m(y, x)) last = x;
      if (last - x <= r) rows(y, x) = 1;
    }
  }
  BinaryMask out(h, w);
  for (int x = 0; x < w; ++x) {
    int last = -1 - r;
    for (int y = 0; y < h; ++y) {
      if (rows(y, x)) last = y;
      if (y - last <= r) out(y, x) = 1;
    }
    last = h + r;
    for (int y = h - 1; y >= 0; --y) {
      if (rows(y, x)) last = y;
      if (last - y <= r) out(y, x) = 1;
    }
  }
  return out;
}

// Fraction of `from` pixels that land inside `reach`.
double matched_fraction(const BinaryMask& from, const BinaryMask& reach, std::size_t total) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < from.size(); ++i) hit += (from[i] && reach[i]) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

double f_measure(const BinaryMask& pred, const BinaryMask& gt, int tol) {
  if (!pred.same_shape(gt)) throw DimensionMismatch("f_measure: masks differ in shape");
  if (tol < 0) throw std::invalid_argument("f_measure: negative tolerance");
  const BinaryMask bp = boundary(pred);
  const BinaryMask bg = boundary(gt);
  const std::size_t np = count_foreground(bp);
  const std::size_t ng = count_foreground(bg);
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const double precision = matched_fraction(bp, dilate_square(bg, tol), np);
  const double recall = matched_fraction(bg, dilate_square(bp, tol), ng);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double f_measure(const BinaryMask& pred, const BinaryMask& gt) {
  return f_measure(pred, gt, default_tolerance(gt.height(), gt.width()));
}

SequenceScore evaluate_sequence(const MaskSequence& pred, const MaskSequence& gt,
                                std::optional<int> tol) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("evaluate_sequence: " + std::to_string(pred.size()) +
                                " predicted frames vs " + std::to_string(gt.size()) + " ground truth");
  }
  SequenceScore out;
  for (std::size_t t = 1; t < gt.size(); ++t) {
    if (pred[t].size() != gt[t].size()) {
      throw std::invalid_argument("evaluate_sequence: object sets differ at frame " + std::to_string(t));
    }
    for (const auto& [id, g] : gt[t]) {
      const auto p = pred[t].find(id);
      if (p == pred[t].end()) {
        throw std::invalid_argument("evaluate_sequence: frame " + std::to_string(t) +
                                    " lacks object " + std::to_string(id));
      }
      const int k = tol ? *tol : default_tolerance(g.height(), g.width());
      out.j[id].push_back(j_measure(p->second, g));
      out.f[id].push_back(f_measure(p->second, g, k));
    }
  }
  auto mean_of_means = [](const std::map<int, std::vector<double>>& per_object) {
    if (per_object.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& [id, v] : per_object) {
      double s = 0.0;
      for (double x : v) s += x;
      acc += s / static_cast<double>(v.size());
    }
    return acc / static_cast<double>(per_object.size());
  };
  out.j_mean = mean_of_means(out.j);
  out.f_mean = mean_of_means(out.f);
  out.g_mean = (out.j_mean + out.f_mean) / 2.0;
  return out;
}

}  // namespace stg
