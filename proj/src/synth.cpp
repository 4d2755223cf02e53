#include "stg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "stg/manifest.hpp"

namespace stg {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Key-map signature scale; sets how sharply memory attention separates
// object from background pixels.
constexpr double kKeyScale = 2.0;
constexpr double kBackgroundSignature = -0.8;

// Stream tags for the seed-splitting scheme.
enum class Stream : std::uint64_t { shape = 1, proposals = 2, warp = 3, keys = 4, shuffle = 5 };

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent generator for (seed, stream, frame, object).
std::mt19937_64 stream_rng(std::uint64_t seed, Stream s, int frame, int object) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(s));
  h = splitmix(h ^ static_cast<std::uint64_t>(frame + 1));
  h = splitmix(h ^ static_cast<std::uint64_t>(object + 1));
  return std::mt19937_64(h);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

double as_float(double v) { return static_cast<double>(static_cast<float>(v)); }

std::string motion_name(MotionKind m) {
  switch (m) {
    case MotionKind::linear: return "linear";
    case MotionKind::sinusoidal: return "sinusoidal";
    case MotionKind::crossing: return "crossing";
  }
  return "linear";
}

MotionKind motion_from(const std::string& s) {
  if (s == "linear") return MotionKind::linear;
  if (s == "sinusoidal") return MotionKind::sinusoidal;
  if (s == "crossing") return MotionKind::crossing;
  throw std::invalid_argument("unknown motion kind '" + s + "'");
}

struct ObjectPlan {
  int id = 0;
  double rx = 0.0;
  double ry = 0.0;
  double wobble_phase = 0.0;
  std::vector<Point2> centers;  // per frame
  FeatureVector signature;      // unit appearance vector
  double key_signature = 0.0;   // scalar appearance in the key map
};

Point2 clamp_point(Point2 p, double x0, double x1, double y0, double y1) {
  return {std::clamp(p.x, x0, x1), std::clamp(p.y, y0, y1)};
}

ObjectPlan plan_object(const SynthSpec& spec, int k) {
  auto rng = stream_rng(spec.seed, Stream::shape, -1, k);
  ObjectPlan o;
  o.id = k + 1;
  o.rx = uniform(rng, spec.radius_min, spec.radius_max);
  o.ry = uniform(rng, spec.radius_min, spec.radius_max);
  o.wobble_phase = uniform(rng, 0.0, kTwoPi);
  o.key_signature = uniform(rng, 0.7, 1.0);

  o.signature.values.resize(static_cast<std::size_t>(spec.feature_dim));
  double norm = 0.0;
  for (double& v : o.signature.values) {
    v = gaussian(rng, 1.0);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : o.signature.values) v /= norm;

  const double W = spec.width;
  const double H = spec.height;
  const double rmax = std::max(o.rx, o.ry) * 1.05 + 1.0;
  const MotionKind kind = spec.motions[static_cast<std::size_t>(k) % spec.motions.size()];
  const int T = spec.frames;
  o.centers.resize(static_cast<std::size_t>(T));

  if (kind == MotionKind::crossing) {
    const Point2 mid{W / 2.0, H / 2.0};
    const double reach = 0.5 * std::min(W, H) - rmax;
    const double theta = std::numbers::pi * k / std::max(1, spec.objects) + uniform(rng, -0.2, 0.2);
    const Point2 a{mid.x + reach * std::cos(theta), mid.y + reach * std::sin(theta)};
    const Point2 b{mid.x - reach * std::cos(theta), mid.y - reach * std::sin(theta)};
    for (int t = 0; t < T; ++t) {
      const double s = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
      o.centers[static_cast<std::size_t>(t)] = {a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s};
    }
    return o;
  }

  // Each non-crossing object owns a vertical band so paths stay disjoint.
  const double band = W / spec.objects;
  const double x0 = k * band + rmax;
  const double x1 = std::max(x0, (k + 1) * band - rmax);
  const double y0 = rmax;
  const double y1 = std::max(y0, H - rmax);
  const Point2 a{uniform(rng, x0, x1), uniform(rng, y0, y1)};
  const Point2 b{uniform(rng, x0, x1), uniform(rng, y0, y1)};
  const double amp = kind == MotionKind::sinusoidal ? uniform(rng, 3.0, 6.0) : 0.0;
  const double period = uniform(rng, 8.0, 16.0);
  const double phase = uniform(rng, 0.0, kTwoPi);
  for (int t = 0; t < T; ++t) {
    const double s = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
    Point2 c{a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s};
    c.x += amp * std::sin(kTwoPi * t / period + phase);
    o.centers[static_cast<std::size_t>(t)] = clamp_point(c, x0, x1, y0, y1);
  }
  return o;
}

double wobble(const ObjectPlan& o, int t) { return 1.0 + 0.05 * std::sin(0.4 * t + o.wobble_phase); }

bool inside(const ObjectPlan& o, int t, double px, double py) {
  const Point2 c = o.centers[static_cast<std::size_t>(t)];
  const double s = wobble(o, t);
  const double dx = (px - c.x) / (o.rx * s);
  const double dy = (py - c.y) / (o.ry * s);
  return dx * dx + dy * dy <= 1.0;
}

// Later objects are drawn on top.
LabelMap render_labels(const SynthSpec& spec, const std::vector<ObjectPlan>& plans, int t) {
  LabelMap labels(spec.height, spec.width);
  for (const auto& o : plans) {
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        if (inside(o, t, x + 0.5, y + 0.5)) labels(y, x) = static_cast<std::uint8_t>(o.id);
      }
    }
  }
  return labels;
}

BinaryMask select_label(const LabelMap& labels, int id) {
  BinaryMask m(labels.height(), labels.width());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = labels[i] == id ? 1 : 0;
  return m;
}

BinaryMask shift(const BinaryMask& m, int dx, int dy) {
  BinaryMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m(y, x)) continue;
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < m.width() && ny < m.height()) out(ny, nx) = 1;
    }
  }
  return out;
}

// One 3x3 erosion (grow=false) or dilation (grow=true) step.
BinaryMask morph_step(const BinaryMask& m, bool grow) {
  BinaryMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      bool all = true;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy;
          const int nx = x + dx;
          const bool v = ny >= 0 && nx >= 0 && ny < m.height() && nx < m.width() && m(ny, nx);
          any = any || v;
          all = all && v;
        }
      }
      out(y, x) = (grow ? any : all) ? 1 : 0;
    }
  }
  return out;
}

BinaryMask crop_exact(const BinaryMask& m, const PixelRect& r) {
  BinaryMask out(r.height(), r.width());
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) out(y - r.y0, x - r.x0) = m(y, x);
  }
  return out;
}

FeatureVector noisy_feature(const FeatureVector& base, double sigma, std::mt19937_64& rng) {
  FeatureVector f = base;
  double norm = 0.0;
  for (double& v : f.values) {
    v = as_float(v + gaussian(rng, sigma));
    norm += v * v;
  }
  if (norm == 0.0) f.values[0] = 1.0;
  return f;
}

Proposal make_proposal(const BinaryMask& piece, double jitter, std::mt19937_64& rng, int H, int W) {
  const auto box = bbox_of_mask(piece);
  PixelRect r = rasterize(*box);
  auto grow = [&]() { return static_cast<int>(std::lround(std::abs(gaussian(rng, jitter)))); };
  r.x0 -= grow();
  r.y0 -= grow();
  r.x1 += grow();
  r.y1 += grow();
  r = clamp_rect(r, H, W);
  Proposal p;
  p.bbox = {static_cast<double>(r.x0), static_cast<double>(r.y0), static_cast<double>(r.x1),
            static_cast<double>(r.y1)};
  p.mask = crop_exact(piece, r);
  p.confidence = as_float(uniform(rng, 0.6, 1.0));
  return p;
}

void append_object_proposals(const SynthSpec& spec, const ObjectPlan& o, int t,
                             const BinaryMask& visible, std::vector<Proposal>& out) {
  auto rng = stream_rng(spec.seed, Stream::proposals, t, o.id);
  if (count_foreground(visible) == 0) return;
  if (spec.missing_rate > 0.0 && uniform(rng, 0.0, 1.0) < spec.missing_rate) return;

  const Point2 c = o.centers[static_cast<std::size_t>(t)];
  const int n = spec.proposals;
  const double theta0 = uniform(rng, 0.0, kTwoPi);
  for (int v = 0; v < n; ++v) {
    // A fraction below 1/n would leave gaps in the union.
    const double frac = std::max(uniform(rng, spec.coverage_min, std::nextafter(spec.coverage_max, 2.0)),
                                 1.0 / n);
    const double start = theta0 + kTwoPi * v / n;
    BinaryMask piece(visible.height(), visible.width());
    for (int y = 0; y < visible.height(); ++y) {
      for (int x = 0; x < visible.width(); ++x) {
        if (!visible(y, x)) continue;
        if (frac >= 1.0) {
          piece(y, x) = 1;
          continue;
        }
        const double phi = std::atan2((y + 0.5 - c.y) / o.ry, (x + 0.5 - c.x) / o.rx);
        const double rel = std::fmod(std::fmod(phi - start, kTwoPi) + kTwoPi, kTwoPi);
        if (rel < kTwoPi * frac) piece(y, x) = 1;
      }
    }
    if (count_foreground(piece) == 0) continue;
    if (spec.bleed > 0) {
      // Leak outward only so the coverage of the object is unchanged.
      BinaryMask grown = piece;
      const int r = std::uniform_int_distribution<int>(1, spec.bleed)(rng);
      for (int i = 0; i < r; ++i) grown = morph_step(grown, true);
      for (std::size_t i = 0; i < piece.size(); ++i) {
        if (grown[i] && !visible[i]) piece[i] = 1;
      }
    }
    Proposal p = make_proposal(piece, spec.bbox_jitter, rng, spec.height, spec.width);
    p.feature = noisy_feature(o.signature, spec.feature_noise, rng);
    out.push_back(std::move(p));
  }

  if (spec.spurious_rate > 0.0 && uniform(rng, 0.0, 1.0) < spec.spurious_rate) {
    const double r = uniform(rng, spec.radius_min / 2.0, spec.radius_max / 2.0);
    const double ang = uniform(rng, 0.0, kTwoPi);
    const double dist = 0.5 * (o.rx + o.ry) * uniform(rng, 0.5, 1.2);
    const Point2 bc{c.x + dist * std::cos(ang), c.y + dist * std::sin(ang)};
    BinaryMask blob(spec.height, spec.width);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double dx = (x + 0.5 - bc.x) / r;
        const double dy = (y + 0.5 - bc.y) / r;
        if (dx * dx + dy * dy <= 1.0) blob(y, x) = 1;
      }
    }
    if (count_foreground(blob) > 0) {
      Proposal p = make_proposal(blob, spec.bbox_jitter, rng, spec.height, spec.width);
      FeatureVector random_dir;
      random_dir.values.resize(static_cast<std::size_t>(spec.feature_dim));
      for (double& v : random_dir.values) v = gaussian(rng, 1.0);
      p.feature = noisy_feature(random_dir, spec.feature_noise, rng);
      out.push_back(std::move(p));
    }
  }
}

BinaryMask make_warped(const SynthSpec& spec, const ObjectPlan& o, int t, const BinaryMask& prev,
                       const BinaryMask& current) {
  if (spec.warp_exact) return current;
  auto rng = stream_rng(spec.seed, Stream::warp, t, o.id);
  const Point2 a = o.centers[static_cast<std::size_t>(t - 1)];
  const Point2 b = o.centers[static_cast<std::size_t>(t)];
  const int dx = static_cast<int>(std::lround(b.x - a.x + gaussian(rng, spec.warp_noise)));
  const int dy = static_cast<int>(std::lround(b.y - a.y + gaussian(rng, spec.warp_noise)));
  BinaryMask q = shift(prev, dx, dy);
  const int radius =
      spec.warp_radius > 0 ? std::uniform_int_distribution<int>(-spec.warp_radius, spec.warp_radius)(rng) : 0;
  for (int i = 0; i < std::abs(radius); ++i) q = morph_step(q, radius > 0);
  return q;
}

SoftMask box_blur(const SoftMask& m, int r) {
  SoftMask out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      double s = 0.0;
      int n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int ny = y + dy;
          const int nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= m.height() || nx >= m.width()) continue;
          s += m(ny, nx);
          ++n;
        }
      }
      out(y, x) = s / n;
    }
  }
  return out;
}

FeatureMap make_key_map(const SynthSpec& spec, const std::vector<ObjectPlan>& plans,
                        const LabelMap& labels, int t) {
  auto rng = stream_rng(spec.seed, Stream::keys, t, -1);
  const int H = spec.height;
  const int W = spec.width;
  SoftMask sig(H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int id = labels(y, x);
      const double base = id == 0 ? kBackgroundSignature
                                  : plans[static_cast<std::size_t>(id - 1)].key_signature;
      sig(y, x) = kKeyScale * (base + gaussian(rng, spec.key_noise));
    }
  }
  FeatureMap k(6, H, W);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      k(0, y, x) = W > 1 ? static_cast<double>(x) / (W - 1) : 0.0;
      k(1, y, x) = H > 1 ? static_cast<double>(y) / (H - 1) : 0.0;
      k(5, y, x) = 1.0;
    }
  }
  k.set_channel(2, sig);
  k.set_channel(3, box_blur(sig, 1));
  k.set_channel(4, box_blur(sig, 2));
  for (double& v : k.values()) v = as_float(v);
  return k;
}

}  // namespace

void SynthSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SynthSpec: ") + what);
  };
  require(height >= 8 && width >= 8, "frame must be at least 8x8");
  require(objects >= 1 && objects <= 255, "objects must be in 1..255");
  require(frames >= 1, "frames must be >= 1");
  require(!motions.empty(), "motions must not be empty");
  require(radius_min > 0.0 && radius_min <= radius_max, "radius range invalid");
  require(proposals >= 1, "proposals must be >= 1");
  require(coverage_min > 0.0 && coverage_min <= coverage_max && coverage_max <= 1.0,
          "coverage range must satisfy 0 < min <= max <= 1");
  require(bbox_jitter >= 0.0, "bbox_jitter must be >= 0");
  require(bleed >= 0, "bleed must be >= 0");
  require(spurious_rate >= 0.0 && spurious_rate <= 1.0, "spurious_rate must be in [0,1]");
  require(missing_rate >= 0.0 && missing_rate <= 1.0, "missing_rate must be in [0,1]");
  require(feature_dim >= 1, "feature_dim must be >= 1");
  require(feature_noise >= 0.0 && warp_noise >= 0.0 && key_noise >= 0.0, "noise must be >= 0");
  require(warp_radius >= 0, "warp_radius must be >= 0");
}

json synth_spec_to_json(const SynthSpec& s) {
  json j;
  j["name"] = s.name;
  j["height"] = s.height;
  j["width"] = s.width;
  j["objects"] = s.objects;
  j["frames"] = s.frames;
  json m = json::array();
  for (auto k : s.motions) m.push_back(motion_name(k));
  j["motions"] = m;
  j["radius"] = {s.radius_min, s.radius_max};
  j["proposals"] = s.proposals;
  j["coverage"] = {s.coverage_min, s.coverage_max};
  j["bbox_jitter"] = s.bbox_jitter;
  j["bleed"] = s.bleed;
  j["spurious_rate"] = s.spurious_rate;
  j["missing_rate"] = s.missing_rate;
  j["feature_dim"] = s.feature_dim;
  j["feature_noise"] = s.feature_noise;
  j["warp_exact"] = s.warp_exact;
  j["warp_noise"] = s.warp_noise;
  j["warp_radius"] = s.warp_radius;
  j["key_noise"] = s.key_noise;
  j["seed"] = s.seed;
  return j;
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec s;
  s.name = j.value("name", s.name);
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.objects = j.value("objects", s.objects);
  s.frames = j.value("frames", s.frames);
  if (j.contains("motions")) {
    s.motions.clear();
    for (const auto& m : j["motions"]) s.motions.push_back(motion_from(m.get<std::string>()));
  }
  if (j.contains("radius")) {
    s.radius_min = j["radius"].at(0).get<double>();
    s.radius_max = j["radius"].at(1).get<double>();
  }
  s.proposals = j.value("proposals", s.proposals);
  if (j.contains("coverage")) {
    s.coverage_min = j["coverage"].at(0).get<double>();
    s.coverage_max = j["coverage"].at(1).get<double>();
  }
  s.bbox_jitter = j.value("bbox_jitter", s.bbox_jitter);
  s.bleed = j.value("bleed", s.bleed);
  s.spurious_rate = j.value("spurious_rate", s.spurious_rate);
  s.missing_rate = j.value("missing_rate", s.missing_rate);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.feature_noise = j.value("feature_noise", s.feature_noise);
  s.warp_exact = j.value("warp_exact", s.warp_exact);
  s.warp_noise = j.value("warp_noise", s.warp_noise);
  s.warp_radius = j.value("warp_radius", s.warp_radius);
  s.key_noise = j.value("key_noise", s.key_noise);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

Video generate_video(const SynthSpec& spec) {
  spec.validate();
  std::vector<ObjectPlan> plans;
  for (int k = 0; k < spec.objects; ++k) plans.push_back(plan_object(spec, k));

  Video video;
  video.name = spec.name;
  video.height = spec.height;
  video.width = spec.width;
  for (const auto& o : plans) video.object_ids.push_back(o.id);

  std::vector<BinaryMask> previous(plans.size());
  for (int t = 0; t < spec.frames; ++t) {
    const LabelMap labels = render_labels(spec, plans, t);
    FrameData f;
    f.index = t;
    f.key_map = make_key_map(spec, plans, labels, t);
    std::vector<BinaryMask> visible;
    for (const auto& o : plans) visible.push_back(select_label(labels, o.id));
    for (std::size_t k = 0; k < plans.size(); ++k) {
      const int id = plans[k].id;
      f.ground_truth[id] = visible[k];
      if (t == 0) {
        f.annotations[id] = visible[k];
      } else {
        f.warped[id] = make_warped(spec, plans[k], t, previous[k], visible[k]);
        append_object_proposals(spec, plans[k], t, visible[k], f.proposals);
      }
    }
    if (t > 0) {
      auto rng = stream_rng(spec.seed, Stream::shuffle, t, -1);
      std::shuffle(f.proposals.begin(), f.proposals.end(), rng);
    }
    previous = std::move(visible);
    video.frames.push_back(std::move(f));
  }
  for (const auto& [id, a] : video.frames.front().annotations) {
    if (count_foreground(a) == 0) {
      throw std::invalid_argument("generate: object " + std::to_string(id) +
                                  " is fully occluded in frame 0; change the seed or layout");
    }
  }
  return video;
}

std::filesystem::path generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  return write_manifest(generate_video(spec), out_dir);
}

SynthSpec zero_corruption(SynthSpec spec) {
  spec.proposals = 1;
  spec.coverage_min = 1.0;
  spec.coverage_max = 1.0;
  spec.bbox_jitter = 0.0;
  spec.bleed = 0;
  spec.spurious_rate = 0.0;
  spec.missing_rate = 0.0;
  spec.warp_exact = true;
  spec.warp_noise = 0.0;
  spec.warp_radius = 0;
  return spec;
}

std::vector<FrameResult> greedy_baseline(const Video& video, const EngineConfig& cfg) {
  return run_video(video, greedy_config(cfg));
}

std::vector<AblationVariant> ablation_grid(const EngineConfig& base) {
  std::vector<AblationVariant> out;
  EngineConfig c = greedy_config(base);
  out.push_back({"greedy", c});
  c.use_motion = true;
  out.push_back({"+motion", c});
  c.use_spatial = true;
  out.push_back({"+spatial", c});
  c.use_temporal = true;
  for (int l = 1; l <= 3; ++l) {
    c.spatial_iters = l;
    out.push_back({"+temporal l=" + std::to_string(l), c});
  }
  return out;
}

MaskSequence ground_truth_of(const Video& video) {
  MaskSequence out;
  out.reserve(video.frames.size());
  for (const auto& f : video.frames) {
    if (f.ground_truth.empty()) throw std::invalid_argument("video has no ground truth for frame " + std::to_string(f.index));
    out.push_back(f.ground_truth);
  }
  return out;
}

}  // namespace stg
