#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stg/temporal_graph.hpp"

using namespace stg;

namespace {

FeatureMap random_keys(std::mt19937_64& rng, int c, int h, int w, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  FeatureMap k(c, h, w);
  for (auto& v : k.values()) v = g(rng);
  return k;
}

SoftMask random_values(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SoftMask s(h, w);
  for (auto& v : s.values()) v = u(rng);
  return s;
}

double mean(const SoftMask& s) {
  double m = 0.0;
  for (double v : s.values()) m += v;
  return m / static_cast<double>(s.size());
}

}  // namespace

TEST(MakeEntry, IdentityCrop) {
  std::mt19937_64 rng(1);
  const FeatureMap k = random_keys(rng, 3, 6, 8);
  const BinaryMask full(6, 8, 1);
  const MemoryEntry e = make_entry(full, k, 0.0, 6, 8, 0);
  EXPECT_EQ(e.key, k);
  EXPECT_EQ(e.value, to_soft(full));
}

TEST(MakeEntry, ConstantKeyMapGivesConstantKeys) {
  const FeatureMap k(2, 20, 20, 0.75);
  const BinaryMask m = oracle::rect_mask(20, 20, 3, 5, 11, 9);
  const MemoryEntry e = make_entry(m, k, 0.15, 7, 5, 3);
  for (double v : e.key.values()) EXPECT_DOUBLE_EQ(v, 0.75);
  EXPECT_EQ(e.frame_index, 3);
}

TEST(MakeEntry, HalfForegroundFractionMatchesNaiveResampler) {
  // Left half of the box is foreground.
  BinaryMask m(30, 30);
  for (int y = 5; y < 25; ++y) {
    for (int x = 4; x < 26; ++x) m(y, x) = x < 15 ? 1 : 0;
  }
  m(24, 25) = 1;  // make the box span x 4..26
  const FeatureMap k(1, 30, 30, 1.0);
  const MemoryEntry e = make_entry(m, k, 0.15, 9, 9, 0);
  const BBox region = memory_region(m, 0.15);
  const PixelRect win = clamp_rect(rasterize(region), 30, 30);
  const auto want = oracle::resample([&](int y, int x) { return double(m(y, x)); }, win.x0, win.y0,
                                     win.x1, win.y1, 9, 9, false);
  double naive = 0.0;
  for (double v : want) naive += v;
  naive /= static_cast<double>(want.size());
  double truth = 0.0;
  for (int y = win.y0; y < win.y1; ++y) {
    for (int x = win.x0; x < win.x1; ++x) truth += m(y, x);
  }
  truth /= static_cast<double>(win.width() * win.height());
  EXPECT_DOUBLE_EQ(mean(e.value), naive);
  EXPECT_NEAR(mean(e.value), truth, 0.1 * truth);
}

TEST(MakeEntry, EmptyMaskThrows) {
  EXPECT_THROW(make_entry(BinaryMask(4, 4), FeatureMap(1, 4, 4), 0.15, 2, 2, 0), std::invalid_argument);
}

TEST(Retrieve, UniformKeysGiveMeanValue) {
  std::mt19937_64 rng(2);
  const FeatureMap keys(3, 5, 5, 0.4);
  MemoryBank bank;
  const SoftMask v0 = random_values(rng, 5, 5);
  bank.append({0, keys, v0});
  const SoftMask m1 = retrieve(keys, bank);
  for (double v : m1.values()) EXPECT_NEAR(v, mean(v0), 1e-12);

  const SoftMask v1 = random_values(rng, 5, 5);
  bank.append({1, keys, v1});
  const SoftMask m2 = retrieve(keys, bank);
  for (double v : m2.values()) EXPECT_NEAR(v, mean(v0) + mean(v1), 1e-12);
}

TEST(Retrieve, DominantMatchSelectsItsValue) {
  // One-hot keys scaled so the matching pixel wins by a dot-product margin of 25.
  const int h = 3, w = 3, c = h * w;
  FeatureMap mem(c, h, w);
  FeatureMap query(c, h, w);
  for (int j = 0; j < c; ++j) mem(j, j / w, j % w) = 5.0;
  std::mt19937_64 rng(3);
  const SoftMask vals = random_values(rng, h, w);
  for (int i = 0; i < c; ++i) {
    const int target = (i * 4 + 1) % c;
    query(target, i / w, i % w) = 5.0;
  }
  MemoryBank bank;
  bank.append({0, mem, vals});
  const SoftMask m = retrieve(query, bank);
  for (int i = 0; i < c; ++i) {
    const int target = (i * 4 + 1) % c;
    EXPECT_NEAR(m[static_cast<std::size_t>(i)], vals[static_cast<std::size_t>(target)], 1e-6);
  }
}

TEST(Retrieve, LargeLogitsStayFinite) {
  std::mt19937_64 rng(4);
  const FeatureMap k = random_keys(rng, 4, 4, 4, 40.0);  // dot products far beyond exp range
  MemoryBank bank;
  bank.append({0, k, random_values(rng, 4, 4)});
  const SoftMask m = retrieve(k, bank);
  for (double v : m.values()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Retrieve, ShapeMismatchAndEmptyBankThrow) {
  MemoryBank bank;
  EXPECT_THROW(retrieve(FeatureMap(1, 2, 2), bank), std::invalid_argument);
  bank.append({0, FeatureMap(1, 2, 2), SoftMask(2, 2)});
  EXPECT_THROW(retrieve(FeatureMap(2, 2, 2), bank), DimensionMismatch);
}

TEST(Refine, FormulaCases) {
  const SoftMask ones(3, 3, 1.0);
  EXPECT_EQ(refine(ones, ones, 1), ones);
  std::mt19937_64 rng(5);
  const SoftMask h = random_values(rng, 3, 3);
  const SoftMask r = refine(h, SoftMask(3, 3), 4);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_DOUBLE_EQ(r[i], h[i] / 5.0);
  EXPECT_THROW(refine(h, h, 0), std::invalid_argument);
}

TEST(Refine, TwoUniformMemoriesHandArithmetic) {
  const FeatureMap keys(2, 4, 4, 1.0);
  MemoryBank bank;
  bank.append({0, keys, SoftMask(4, 4, 0.3)});
  bank.append({1, keys, SoftMask(4, 4, 0.5)});
  const SoftMask r = refine(SoftMask(4, 4, 0.4), retrieve(keys, bank), 2);
  for (double v : r.values()) EXPECT_NEAR(v, 0.4, 1e-15);
}

TEST(MemoryBank, OrderingShapesAndCapacity) {
  MemoryBank bank(3);
  const FeatureMap k(1, 2, 2);
  bank.append({0, k, SoftMask(2, 2)});
  EXPECT_THROW(bank.append({0, k, SoftMask(2, 2)}), std::invalid_argument);
  EXPECT_THROW(bank.append({1, FeatureMap(2, 2, 2), SoftMask(2, 2)}), DimensionMismatch);
  EXPECT_THROW(bank.append({1, k, SoftMask(3, 2)}), DimensionMismatch);
  for (int f = 1; f <= 5; ++f) bank.append({f, k, SoftMask(2, 2)});
  ASSERT_EQ(bank.size(), 3u);
  EXPECT_EQ(bank[0].frame_index, 0);  // annotation always kept
  EXPECT_EQ(bank[1].frame_index, 4);
  EXPECT_EQ(bank[2].frame_index, 5);
  EXPECT_THROW(MemoryBank(1), std::invalid_argument);
}

TEST(TemporalStep, SelfMemoryWithUniformKeys) {
  // Memory holds the current crop; uniform keys make the message mean(h),
  // so the refined value is (h + mean(h)) / 2 on every crop pixel.
  const int H = 40, W = 40;
  BinaryMask chosen(H, W);
  for (int y = 10; y < 30; ++y) {
    for (int x = 18; x < 21; ++x) chosen(y, x) = 1;
  }
  for (int x = 10; x < 30; ++x) {
    for (int y = 18; y < 21; ++y) chosen(y, x) = 1;
  }
  const FeatureMap keys(3, H, W, 0.5);
  MemoryBank bank;
  bank.append(make_entry(chosen, keys, 0.15, 32, 32, 0));
  const TemporalStep st = temporal_step(chosen, keys, bank, 0.2, 0.15, 32, 32, 1);
  const double mh = mean(bank[0].value);
  const PixelRect r = rasterize(st.region);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const bool in = x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1;
      const double want = in ? (chosen(y, x) + mh) / 2.0 : 0.0;
      ASSERT_NEAR(st.refined_soft(y, x), want, 1e-12) << y << "," << x;
    }
  }
  EXPECT_NEAR(st.state_mean, mh, 1e-12);
  EXPECT_NEAR(st.message_mean, mh, 1e-12);
  ASSERT_LT(mh / 2.0, 0.2);  // background stays background
  EXPECT_EQ(st.refined, chosen);
  ASSERT_TRUE(st.entry.has_value());
  EXPECT_EQ(st.entry->frame_index, 1);
  EXPECT_EQ(bank.size(), 1u);
}

TEST(TemporalStep, SolidConstantCropSurvivesThreshold) {
  // Value 0.6 everywhere in memory and state: (0.6 + 0.6) / 2 = 0.6 > 0.2.
  const FeatureMap keys(1, 8, 8, 1.0);
  MemoryBank bank;
  bank.append({0, keys, SoftMask(8, 8, 0.6)});
  const SoftMask r = refine(SoftMask(8, 8, 0.6), retrieve(keys, bank), 1);
  for (double v : r.values()) EXPECT_NEAR(v, 0.6, 1e-15);
  EXPECT_EQ(count_foreground(binarize(r, 0.2)), 64u);
}

TEST(TemporalStep, ZeroThresholdFillsCropAndIsDeterministic) {
  std::mt19937_64 rng(6);
  const BinaryMask chosen = oracle::rect_mask(24, 24, 6, 6, 14, 16);
  const FeatureMap keys = random_keys(rng, 3, 24, 24);
  MemoryBank bank;
  bank.append(make_entry(oracle::rect_mask(24, 24, 5, 5, 13, 15), keys, 0.15, 8, 8, 0));
  const TemporalStep a = temporal_step(chosen, keys, bank, 0.0, 0.15, 8, 8, 1);
  const TemporalStep b = temporal_step(chosen, keys, bank, 0.0, 0.15, 8, 8, 1);
  const PixelRect r = rasterize(a.region);
  EXPECT_EQ(count_foreground(a.refined), static_cast<std::size_t>(r.width() * r.height()));
  EXPECT_EQ(a.refined, b.refined);
  EXPECT_EQ(a.refined_soft, b.refined_soft);
  EXPECT_EQ(a.entry->key, b.entry->key);
}

// Properties.

TEST(TemporalProperties, QuadrupleLoopOracle) {
  std::mt19937_64 rng(200);
  std::uniform_int_distribution<int> cd(1, 4), gd(1, 8), td(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int c = cd(rng), h = gd(rng), w = gd(rng), t = td(rng);
    MemoryBank bank;
    for (int r = 0; r < t; ++r) bank.append({r, random_keys(rng, c, h, w), random_values(rng, h, w)});
    const FeatureMap q = random_keys(rng, c, h, w);
    const SoftMask got = retrieve(q, bank);
    const SoftMask want = oracle::retrieve(q, bank.entries());
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(TemporalProperties, AttentionRowsSumToOne) {
  std::mt19937_64 rng(201);
  for (int trial = 0; trial < 50; ++trial) {
    const FeatureMap q = random_keys(rng, 3, 5, 6, 3.0);
    const FeatureMap k = random_keys(rng, 3, 5, 6, 3.0);
    for (std::size_t i = 0; i < 30; ++i) {
      double s = 0.0;
      for (double a : attention_weights(q, k, i)) s += a;
      ASSERT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(TemporalProperties, MessageAndRefinedStateBounded) {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    const int t = 1 + static_cast<int>(rng() % 4);
    MemoryBank bank;
    for (int r = 0; r < t; ++r) bank.append({r, random_keys(rng, 2, 4, 4), random_values(rng, 4, 4)});
    const FeatureMap q = random_keys(rng, 2, 4, 4);
    const SoftMask m = retrieve(q, bank);
    const SoftMask out = refine(random_values(rng, 4, 4), m, t);
    for (std::size_t i = 0; i < m.size(); ++i) {
      ASSERT_GE(m[i], 0.0);
      ASSERT_LE(m[i], static_cast<double>(t) + 1e-12);
      ASSERT_GE(out[i], 0.0);
      ASSERT_LE(out[i], 1.0 + 1e-12);
    }
  }
}

TEST(TemporalProperties, LogitOffsetInvariance) {
  // An extra query channel equal to a per-pixel constant c_i against a memory
  // channel of ones adds c_i to every logit of pixel i.
  std::mt19937_64 rng(203);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    const FeatureMap q = random_keys(rng, 3, 4, 5);
    const FeatureMap k = random_keys(rng, 3, 4, 5);
    MemoryBank bank;
    bank.append({0, k, random_values(rng, 4, 5)});
    FeatureMap q2(4, 4, 5);
    FeatureMap k2(4, 4, 5);
    for (int c = 0; c < 3; ++c) {
      q2.set_channel(c, q.channel(c));
      k2.set_channel(c, k.channel(c));
    }
    SoftMask off(4, 5);
    for (auto& v : off.values()) v = u(rng);
    q2.set_channel(3, off);
    k2.set_channel(3, SoftMask(4, 5, 1.0));
    MemoryBank bank2;
    bank2.append({0, k2, bank[0].value});
    const SoftMask a = retrieve(q, bank);
    const SoftMask b = retrieve(q2, bank2);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12);
  }
}
