#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "stg/geometry.hpp"

using namespace stg;

TEST(IouBox, IdenticalDisjointAndHalfShifted) {
  EXPECT_DOUBLE_EQ(iou_box({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou_box({0, 0, 10, 10}, {20, 20, 30, 30}), 0.0);
  EXPECT_DOUBLE_EQ(iou_box({0, 0, 10, 10}, {5, 0, 15, 10}), 50.0 / 150.0);
}

TEST(IouBox, ZeroAreaUnionIsZero) {
  EXPECT_EQ(iou_box({3, 3, 3, 3}, {3, 3, 3, 3}), 0.0);
  EXPECT_EQ(iou_box({0, 0, 0, 5}, {1, 1, 1, 4}), 0.0);
}

TEST(IouMask, SelfComplementAndHalves) {
  std::mt19937_64 rng(3);
  BinaryMask m = oracle::random_mask(rng, 8, 8, 0.5);
  m(0, 0) = 1;
  EXPECT_DOUBLE_EQ(iou_mask(m, m), 1.0);
  EXPECT_DOUBLE_EQ(iou_mask(m, complement(m)), 0.0);
  const BinaryMask left = oracle::rect_mask(8, 8, 0, 0, 4, 8);
  const BinaryMask top = oracle::rect_mask(8, 8, 0, 0, 8, 4);
  EXPECT_DOUBLE_EQ(iou_mask(left, top), 16.0 / 48.0);
}

TEST(IouMask, BothEmptyIsOneAndShapeMismatchThrows) {
  EXPECT_DOUBLE_EQ(iou_mask(BinaryMask(4, 4), BinaryMask(4, 4)), 1.0);
  EXPECT_THROW(iou_mask(BinaryMask(4, 4), BinaryMask(4, 5)), DimensionMismatch);
}

TEST(BboxOfMask, SinglePixelEmptyAndFull) {
  BinaryMask m(10, 10);
  m(3, 5) = 1;  // row 3, column 5
  EXPECT_EQ(*bbox_of_mask(m), (BBox{5, 3, 6, 4}));
  EXPECT_FALSE(bbox_of_mask(BinaryMask(6, 7)).has_value());
  EXPECT_EQ(*bbox_of_mask(BinaryMask(6, 7, 1)), (BBox{0, 0, 7, 6}));
}

TEST(ExpandBox, ZeroMarginMarginAndClamp) {
  EXPECT_EQ(expand_box({10, 10, 20, 20}, 0.0, 100, 100), (BBox{10, 10, 20, 20}));
  EXPECT_EQ(expand_box({10, 10, 20, 20}, 0.15, 100, 100), (BBox{8.5, 8.5, 21.5, 21.5}));
  EXPECT_EQ(expand_box({0, 0, 20, 20}, 0.5, 15, 15), (BBox{0, 0, 15, 15}));
  EXPECT_THROW(expand_box({0, 0, 1, 1}, -0.1, 5, 5), std::invalid_argument);
}

TEST(CropResize, IdentityCropIsUnchanged) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SoftMask g(5, 7);
  for (auto& v : g.values()) v = u(rng);
  EXPECT_EQ(crop_resize(g, {0, 0, 7, 5}, 5, 7, Interp::nearest), g);
  EXPECT_EQ(crop_resize(g, {0, 0, 7, 5}, 5, 7, Interp::bilinear), g);
}

TEST(CropResize, ConstantGridStaysConstant) {
  const SoftMask g(9, 11, 0.37);
  for (auto mode : {Interp::nearest, Interp::bilinear}) {
    const SoftMask c = crop_resize(g, {1.3, 2.2, 8.9, 7.5}, 13, 4, mode);
    for (double v : c.values()) EXPECT_DOUBLE_EQ(v, 0.37);
  }
}

TEST(CropResize, TwoByTwoBilinearToTwoByFour) {
  const SoftMask g(2, 2, std::vector<double>{0, 1, 0, 1});
  const SoftMask c = crop_resize(g, {0, 0, 2, 2}, 2, 4, Interp::bilinear);
  const auto want = oracle::resample([&](int y, int x) { return g(y, x); }, 0, 0, 2, 2, 2, 4, true);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], want[i], 1e-15);
  // Each row ramps 0, 1/4, 3/4, 1 under centre alignment with edge clamping.
  EXPECT_DOUBLE_EQ(c(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(c(1, 2), 0.75);
}

TEST(CropResize, MatchesNaiveResamplerOnRandomRegions) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 14);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = dim(rng);
    const int w = dim(rng);
    SoftMask g(h, w);
    for (auto& v : g.values()) v = u(rng);
    const double xa = u(rng) * w;
    const double xb = u(rng) * w;
    const double ya = u(rng) * h;
    const double yb = u(rng) * h;
    const BBox r{std::min(xa, xb), std::min(ya, yb), std::max(xa, xb) + 0.01,
                 std::max(ya, yb) + 0.01};
    const int th = dim(rng);
    const int tw = dim(rng);
    const PixelRect win = clamp_rect(rasterize(r), h, w);
    for (bool bil : {false, true}) {
      const SoftMask c = crop_resize(g, r, th, tw, bil ? Interp::bilinear : Interp::nearest);
      const auto want = oracle::resample([&](int y, int x) { return g(y, x); }, win.x0, win.y0,
                                         win.x1, win.y1, th, tw, bil);
      for (std::size_t i = 0; i < c.size(); ++i) {
        ASSERT_NEAR(c[i], want[i], 1e-12) << "trial " << trial << " bilinear " << bil;
        ASSERT_GE(c[i], 0.0);
        ASSERT_LE(c[i], 1.0);
      }
    }
  }
}

TEST(CropResize, FeatureMapCropsEveryChannel) {
  FeatureMap f(3, 6, 6);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 6; ++x) f(c, y, x) = c * 100 + y * 6 + x;
    }
  }
  const FeatureMap k = crop_resize(f, {1, 1, 5, 5}, 3, 3);
  for (int c = 0; c < 3; ++c) {
    const SoftMask plane = crop_resize(f.channel(c), {1, 1, 5, 5}, 3, 3, Interp::bilinear);
    EXPECT_EQ(k.channel(c), plane);
  }
}

TEST(CropResize, RegionOutsideGridThrows) {
  EXPECT_THROW(crop_resize(SoftMask(4, 4), {10, 10, 12, 12}, 2, 2, Interp::nearest),
               std::out_of_range);
  EXPECT_THROW(crop_resize(BinaryMask(4, 4), {-5, 0, -1, 3}, 2, 2), std::out_of_range);
}

TEST(CropResize, BinaryStaysBinary) {
  std::mt19937_64 rng(5);
  const BinaryMask m = oracle::random_mask(rng, 12, 12, 0.4);
  const BinaryMask c = crop_resize(m, {1.5, 2.5, 10.2, 11.0}, 7, 5);
  for (auto v : c.values()) EXPECT_TRUE(v == 0 || v == 1);
}

TEST(PasteIntoVoid, IntegerAlignedRoundTrip) {
  std::mt19937_64 rng(9);
  const BinaryMask crop = oracle::random_mask(rng, 6, 4, 0.5);
  const BBox region{3, 2, 7, 8};
  const BinaryMask canvas = paste_into_void(crop, region, 12, 10);
  EXPECT_EQ(crop_resize(canvas, region, 6, 4), crop);
  EXPECT_EQ(count_foreground(canvas), count_foreground(crop));
  const SoftMask soft = paste_into_void(to_soft(crop), region, 12, 10, Interp::nearest);
  EXPECT_EQ(crop_resize(soft, region, 6, 4, Interp::nearest), to_soft(crop));
}

TEST(PasteIntoVoid, EmptyCropGivesZeroCanvas) {
  const SoftMask s = paste_into_void(SoftMask(3, 3), {1, 1, 4, 4}, 8, 8, Interp::bilinear);
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(count_foreground(paste_into_void(BinaryMask(3, 3), {1, 1, 4, 4}, 8, 8)), 0u);
}

TEST(PasteIntoVoid, ConstantOneCoversExactlyTheBoxArea) {
  const SoftMask ones(5, 5, 1.0);
  for (auto mode : {Interp::nearest, Interp::bilinear}) {
    const SoftMask s = paste_into_void(ones, {2, 3, 9, 7}, 12, 12, mode);
    std::size_t n = 0;
    for (double v : s.values()) n += v > 0.5 ? 1 : 0;
    EXPECT_EQ(n, 7u * 4u);
  }
}

TEST(PasteIntoVoid, RegionPartlyOffCanvasWritesOnlyInside) {
  const BinaryMask ones(4, 4, 1);
  const BinaryMask c = paste_into_void(ones, {-2, -2, 2, 2}, 6, 6);
  EXPECT_EQ(count_foreground(c), 4u);
  EXPECT_EQ(c(0, 0), 1);
  EXPECT_EQ(c(2, 2), 0);
}

TEST(PasteIntoVoid, UpsampledPasteMatchesNaiveResampler) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SoftMask crop(4, 3);
  for (auto& v : crop.values()) v = u(rng);
  const BBox region{2, 1, 9, 10};
  for (bool bil : {false, true}) {
    const SoftMask s = paste_into_void(crop, region, 12, 12, bil ? Interp::bilinear : Interp::nearest);
    const auto want = oracle::resample([&](int y, int x) { return crop(y, x); }, 0, 0, 3, 4, 9, 7, bil);
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 12; ++x) {
        const bool in = x >= 2 && x < 9 && y >= 1 && y < 10;
        const double expect = in ? want[static_cast<std::size_t>((y - 1) * 7 + (x - 2))] : 0.0;
        ASSERT_NEAR(s(y, x), expect, 1e-12);
      }
    }
  }
}

// Properties.

TEST(IouProperties, SymmetricBoundedAndOneOnlyWhenEqual) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    const double ax = u(rng), ay = u(rng), bx = u(rng), by = u(rng);
    const BBox a{ax, ay, ax + 1 + u(rng), ay + 1 + u(rng)};
    const BBox b{bx, by, bx + 1 + u(rng), by + 1 + u(rng)};
    const double ab = iou_box(a, b);
    EXPECT_EQ(ab, iou_box(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(iou_box(a, a), 1.0);
    if (!(a == b)) EXPECT_LT(ab, 1.0);

    const BinaryMask ma = oracle::random_mask(rng, 6, 6, 0.5);
    const BinaryMask mb = oracle::random_mask(rng, 6, 6, 0.5);
    EXPECT_EQ(iou_mask(ma, mb), iou_mask(mb, ma));
    if (count_foreground(ma) > 0 && !(ma == mb)) EXPECT_LT(iou_mask(ma, mb), 1.0);
  }
}

TEST(IouProperties, AnalyticBoxIouMatchesFineRasterization) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> u(0, 30);
  const int scale = 8;
  for (int i = 0; i < 100; ++i) {
    const int ax = u(rng), ay = u(rng), bx = u(rng), by = u(rng);
    const int aw = 4 + u(rng) / 2, ah = 4 + u(rng) / 2, bw = 4 + u(rng) / 2, bh = 4 + u(rng) / 2;
    const BBox a{ax / 2.0, ay / 2.0, (ax + aw) / 2.0, (ay + ah) / 2.0};
    const BBox b{bx / 2.0, by / 2.0, (bx + bw) / 2.0, (by + bh) / 2.0};
    const int side = 40 * scale;
    auto raster = [&](const BBox& r) {
      return oracle::rect_mask(side, side, static_cast<int>(r.x_min * scale),
                               static_cast<int>(r.y_min * scale), static_cast<int>(r.x_max * scale),
                               static_cast<int>(r.y_max * scale));
    };
    const double min_side = std::min({a.width(), a.height(), b.width(), b.height()}) * scale;
    EXPECT_NEAR(iou_box(a, b), iou_mask(raster(a), raster(b)), 2.0 / min_side);
  }
}

TEST(PasteProperties, NearestRoundTripPreservesForegroundCount) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> d(1, 8);
  for (int i = 0; i < 200; ++i) {
    const int ch = d(rng), cw = d(rng), x0 = d(rng) - 1, y0 = d(rng) - 1;
    const BinaryMask crop = oracle::random_mask(rng, ch, cw, 0.5);
    const BinaryMask canvas = paste_into_void(crop, {double(x0), double(y0), double(x0 + cw), double(y0 + ch)}, 20, 20);
    ASSERT_EQ(count_foreground(canvas), count_foreground(crop));
  }
}
