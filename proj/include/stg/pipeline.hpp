#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "stg/geometry.hpp"
#include "stg/motion.hpp"
#include "stg/selection.hpp"
#include "stg/temporal_graph.hpp"
#include "stg/video.hpp"

namespace stg {

struct EngineConfig {
  double alpha = 0.7;
  double beta = 0.3;
  double lambda1 = 0.4;
  double lambda2 = 0.6;
  int spatial_iters = 2;
  double thr = 0.2;
  int history_n = 10;
  double margin = 0.15;
  int key_height = 32;
  int key_width = 32;
  double tau_assign = 0.0;
  double gamma = 100.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_memory;

  bool use_motion = true;
  bool use_spatial = true;
  bool use_temporal = true;

  /// Bounds per-frame parallelism over objects; never affects results.
  int threads = 1;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

/// Motion, spatial and temporal stages all disabled: pick the best raw
/// proposal scored against the previous box.
EngineConfig greedy_config(EngineConfig base);

struct LossTerms {
  double distance = 0.0;
  double bce = 0.0;
  double total = 0.0;
};

struct ObjectResult {
  BinaryMask mask;  ///< final, after overlap resolution
  SoftMask soft;    ///< evidence used to resolve overlaps
  bool fallback = false;
  bool refine_empty = false;  ///< refinement emptied the mask; kept the selection
  std::vector<std::size_t> assigned;
  std::optional<std::size_t> selected;
  std::vector<SelectionScore> scores;
  std::optional<PredictedBox> prediction;
  std::optional<double> temporal_state_mean;
  std::optional<double> temporal_message_mean;
  std::optional<LossTerms> loss;
};

struct FrameResult {
  int index = 0;
  std::map<int, ObjectResult> objects;
  LabelMap labels;
  double elapsed_ms = 0.0;
};

/// Clears contested pixels from every mask but the one with the highest
/// soft value (ties to the lower id) and returns the label map.
LabelMap resolve_overlaps(std::map<int, BinaryMask>& masks, const std::map<int, SoftMask>& soft);

/// Evaluation-only loss: gamma * sum_v |S(M_v | gt) - S(M_v | anchor, prior)|
/// plus pixel-mean BCE of sigmoid(final_soft) against gt. Node states are
/// binarized at cfg.thr before scoring.
LossTerms diagnostic_loss(std::span<const SoftMask> node_states, const SoftMask& final_soft,
                          const BinaryMask& gt, const BBox& anchor, const BinaryMask& prior,
                          const EngineConfig& cfg);

/// Stateful per-video engine. Frames must arrive in order.
class Engine {
 public:
  Engine(EngineConfig cfg, int height, int width);

  FrameResult initialize(const std::map<int, BinaryMask>& annotations, const FeatureMap& key_map);
  FrameResult process(const FrameData& frame);

  const EngineConfig& config() const { return cfg_; }
  const std::map<int, TrackState>& tracks() const { return tracks_; }
  const std::map<int, MemoryBank>& banks() const { return banks_; }

 private:
  EngineConfig cfg_;
  int height_;
  int width_;
  int last_index_ = -1;
  std::map<int, TrackState> tracks_;
  std::map<int, MemoryBank> banks_;
};

std::vector<FrameResult> run_video(const Video& video, const EngineConfig& cfg);

}  // namespace stg
