#pragma once

// Test-only reference implementations. Each is written from the defining
// formula with no shared code from the library, trading speed for clarity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stg/geometry.hpp"
#include "stg/spatial_graph.hpp"
#include "stg/temporal_graph.hpp"

namespace oracle {

// Source sample position for destination cell d when src cells are mapped
// onto dst cells, pixel centres aligned.
inline double centre_map(int d, int src, int dst) {
  return (static_cast<double>(d) + 0.5) * static_cast<double>(src) / static_cast<double>(dst);
}

// Resamples a plane given as a lambda over the integer window [x0,x1)x[y0,y1).
template <typename At>
std::vector<double> resample(const At& at, int x0, int y0, int x1, int y1, int th, int tw,
                             bool bilinear) {
  const int sw = x1 - x0;
  const int sh = y1 - y0;
  std::vector<double> out(static_cast<std::size_t>(th * tw));
  for (int oy = 0; oy < th; ++oy) {
    for (int ox = 0; ox < tw; ++ox) {
      double v;
      if (!bilinear) {
        int sx = static_cast<int>(std::floor(centre_map(ox, sw, tw)));
        int sy = static_cast<int>(std::floor(centre_map(oy, sh, th)));
        sx = std::min(std::max(sx, 0), sw - 1);
        sy = std::min(std::max(sy, 0), sh - 1);
        v = at(y0 + sy, x0 + sx);
      } else {
        double fx = centre_map(ox, sw, tw) - 0.5;
        double fy = centre_map(oy, sh, th) - 0.5;
        fx = std::min(std::max(fx, 0.0), sw - 1.0);
        fy = std::min(std::max(fy, 0.0), sh - 1.0);
        // Weighted sum over the four neighbouring samples.
        v = 0.0;
        for (int yy = 0; yy < sh; ++yy) {
          const double wy = std::max(0.0, 1.0 - std::abs(fy - yy));
          if (wy == 0.0) continue;
          for (int xx = 0; xx < sw; ++xx) {
            const double wx = std::max(0.0, 1.0 - std::abs(fx - xx));
            if (wx == 0.0) continue;
            v += wy * wx * at(y0 + yy, x0 + xx);
          }
        }
      }
      out[static_cast<std::size_t>(oy * tw + ox)] = v;
    }
  }
  return out;
}

// Dense normalised-operator form of the spatial graph: A = D^-1 (I + W)
// with D = diag(1 + row sums), applied as A^l to the stacked states.
inline std::vector<stg::SoftMask> spatial(const std::vector<stg::SoftMask>& states,
                                          const std::vector<std::vector<double>>& w, int l) {
  const std::size_t n = states.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t v = 0; v < n; ++v) {
    double d = 1.0;
    for (std::size_t u = 0; u < n; ++u) {
      if (u != v) d += w[v][u];
    }
    for (std::size_t u = 0; u < n; ++u) a[v][u] = ((u == v ? 1.0 : 0.0) + (u == v ? 0.0 : w[v][u])) / d;
  }
  // P = A^l
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) p[i][i] = 1.0;
  for (int k = 0; k < l; ++k) {
    std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < n; ++m) q[i][j] += a[i][m] * p[m][j];
      }
    }
    p = q;
  }
  std::vector<stg::SoftMask> out;
  for (std::size_t v = 0; v < n; ++v) {
    stg::SoftMask o(states[v].height(), states[v].width());
    for (std::size_t px = 0; px < o.size(); ++px) {
      double s = 0.0;
      for (std::size_t u = 0; u < n; ++u) s += p[v][u] * states[u][px];
      o[px] = s;
    }
    out.push_back(o);
  }
  return out;
}

// Quadruple loop over query pixel, memory frame, memory pixel and channel.
// Softmax evaluated directly in long double, no stabilisation.
inline stg::SoftMask retrieve(const stg::FeatureMap& query,
                              const std::vector<stg::MemoryEntry>& memory) {
  const int c = query.channels();
  const int h = query.height();
  const int w = query.width();
  stg::SoftMask out(h, w);
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      long double total = 0.0L;
      for (const auto& r : memory) {
        long double num = 0.0L;
        long double den = 0.0L;
        for (int jy = 0; jy < h; ++jy) {
          for (int jx = 0; jx < w; ++jx) {
            long double dot = 0.0L;
            for (int ch = 0; ch < c; ++ch) {
              dot += static_cast<long double>(query(ch, iy, ix)) * r.key(ch, jy, jx);
            }
            const long double e = std::exp(dot);
            num += e * r.value(jy, jx);
            den += e;
          }
        }
        total += num / den;
      }
      out(iy, ix) = static_cast<double>(total);
    }
  }
  return out;
}

inline bool is_boundary(const stg::BinaryMask& m, int y, int x) {
  if (!m(y, x)) return false;
  const int dy[4] = {-1, 1, 0, 0};
  const int dx[4] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int ny = y + dy[k];
    const int nx = x + dx[k];
    if (ny < 0 || nx < 0 || ny >= m.height() || nx >= m.width()) return true;
    if (!m(ny, nx)) return true;
  }
  return false;
}

// Boundary F-measure by exhaustive pairwise Chebyshev matching.
inline double f_measure(const stg::BinaryMask& pred, const stg::BinaryMask& gt, int tol) {
  std::vector<std::pair<int, int>> bp;
  std::vector<std::pair<int, int>> bg;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (is_boundary(pred, y, x)) bp.push_back({y, x});
      if (is_boundary(gt, y, x)) bg.push_back({y, x});
    }
  }
  if (bp.empty() && bg.empty()) return 1.0;
  if (bp.empty() || bg.empty()) return 0.0;
  auto matched = [tol](const std::vector<std::pair<int, int>>& a,
                       const std::vector<std::pair<int, int>>& b) {
    std::size_t hit = 0;
    for (auto [ay, ax] : a) {
      for (auto [by, bx] : b) {
        if (std::max(std::abs(ay - by), std::abs(ax - bx)) <= tol) {
          ++hit;
          break;
        }
      }
    }
    return static_cast<double>(hit) / static_cast<double>(a.size());
  };
  const double p = matched(bp, bg);
  const double r = matched(bg, bp);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

inline stg::BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double density) {
  std::bernoulli_distribution on(density);
  stg::BinaryMask m(h, w);
  for (auto& v : m.values()) v = on(rng) ? 1 : 0;
  return m;
}

inline stg::BinaryMask rect_mask(int h, int w, int x0, int y0, int x1, int y1) {
  stg::BinaryMask m(h, w);
  for (int y = std::max(0, y0); y < std::min(h, y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(w, x1); ++x) m(y, x) = 1;
  }
  return m;
}

}  // namespace oracle
