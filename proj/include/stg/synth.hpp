#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stg/metrics.hpp"
#include "stg/pipeline.hpp"
#include "stg/video.hpp"

namespace stg {

enum class MotionKind { linear, sinusoidal, crossing };

/// Parameters of a synthetic corpus. Objects are ellipses; proposals are
/// angular sectors of the visible object so that no single proposal
/// covers it but the union does.
struct SynthSpec {
  std::string name = "synth";
  int height = 96;
  int width = 128;
  int objects = 2;
  int frames = 20;
  std::vector<MotionKind> motions = {MotionKind::linear, MotionKind::sinusoidal};  ///< cycled per object
  double radius_min = 9.0;
  double radius_max = 14.0;

  int proposals = 4;            ///< per object per frame
  double coverage_min = 0.4;    ///< fraction of the object kept by one proposal
  double coverage_max = 0.6;
  double bbox_jitter = 1.0;     ///< px, outward only
  int bleed = 2;                ///< max px a proposal mask leaks into the background
  double spurious_rate = 0.0;   ///< chance of one extra distractor per object-frame
  double missing_rate = 0.0;    ///< chance an object gets no proposals in a frame

  int feature_dim = 16;
  double feature_noise = 0.1;

  bool warp_exact = false;      ///< prior equals the current ground truth
  double warp_noise = 0.5;      ///< px std of the displacement error
  int warp_radius = 1;          ///< erosion/dilation radius drawn from [-r, r]

  double key_noise = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json synth_spec_to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// Deterministic in `spec` (including the seed).
Video generate_video(const SynthSpec& spec);
/// generate_video + write_manifest; returns the manifest path.
std::filesystem::path generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Exact corpus: one proposal equal to the ground truth, prior equal to
/// the ground truth, no distractors.
SynthSpec zero_corruption(SynthSpec spec);

/// Greedy best-proposal selection with the previous box as anchor.
std::vector<FrameResult> greedy_baseline(const Video& video, const EngineConfig& cfg);

struct AblationVariant {
  std::string name;
  EngineConfig config;
};

/// greedy, +motion, +spatial, then +temporal at 1, 2 and 3 spatial
/// iterations; other fields come from `base`.
std::vector<AblationVariant> ablation_grid(const EngineConfig& base);

MaskSequence ground_truth_of(const Video& video);

}  // namespace stg
