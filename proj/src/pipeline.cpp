#include "stg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "stg/spatial_graph.hpp"

namespace stg {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("EngineConfig: " + what);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// handled exactly once; results must be written to index-owned slots.
template <typename Fn>
void parallel_for(std::size_t n, int threads, const Fn& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double neg_log_sigmoid(double x) { return std::log1p(std::exp(-x)); }

SelectionScore score_against_truth(const BinaryMask& mask, const BinaryMask& gt, double l1,
                                   double l2) {
  SelectionScore s;
  const auto mb = bbox_of_mask(mask);
  const auto gb = bbox_of_mask(gt);
  if (mb && gb) s.box_term = iou_box(*mb, *gb);
  s.prop_term = iou_mask(mask, gt);
  s.total = l1 * s.box_term + l2 * s.prop_term;
  return s;
}

}  // namespace

void EngineConfig::validate() const {
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  require(std::isfinite(beta) && beta >= 0.0, "beta must be >= 0");
  require(std::isfinite(lambda1) && lambda1 >= 0.0, "lambda1 must be >= 0");
  require(std::isfinite(lambda2) && lambda2 >= 0.0, "lambda2 must be >= 0");
  require(spatial_iters >= 1 && spatial_iters <= 3, "iters must be in {1,2,3}");
  require(thr >= 0.0 && thr < 1.0, "thr must be in [0,1)");
  require(history_n >= 1, "history-n must be >= 1");
  require(std::isfinite(margin) && margin >= 0.0, "margin must be >= 0");
  require(key_height >= 1 && key_width >= 1, "key size must be positive");
  require(tau_assign >= 0.0 && tau_assign < 1.0, "tau-assign must be in [0,1)");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be >= 0");
  require(!max_memory || *max_memory >= 2, "max-memory must be >= 2");
  require(threads >= 1, "threads must be >= 1");
}

EngineConfig greedy_config(EngineConfig base) {
  base.use_motion = false;
  base.use_spatial = false;
  base.use_temporal = false;
  return base;
}

LabelMap resolve_overlaps(std::map<int, BinaryMask>& masks, const std::map<int, SoftMask>& soft) {
  if (masks.empty()) return {};
  const auto& first = masks.begin()->second;
  for (const auto& [id, m] : masks) {
    if (!m.same_shape(first)) throw DimensionMismatch("resolve_overlaps: mask shapes differ");
    if (id < 1 || id > 255) throw std::invalid_argument("resolve_overlaps: object id out of 1..255");
    if (!soft.at(id).same_shape(first)) throw DimensionMismatch("resolve_overlaps: soft shape");
  }
  LabelMap labels(first.height(), first.width());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int winner = 0;
    double best = 0.0;
    for (const auto& [id, m] : masks) {
      if (m[i] == 0) continue;
      const double s = soft.at(id)[i];
      if (winner == 0 || s > best) {
        winner = id;
        best = s;
      }
    }
    if (winner == 0) continue;
    labels[i] = static_cast<std::uint8_t>(winner);
    for (auto& [id, m] : masks) {
      if (id != winner) m[i] = 0;
    }
  }
  return labels;
}

LossTerms diagnostic_loss(std::span<const SoftMask> node_states, const SoftMask& final_soft,
                          const BinaryMask& gt, const BBox& anchor, const BinaryMask& prior,
                          const EngineConfig& cfg) {
  if (!final_soft.same_shape(gt) || !prior.same_shape(gt)) {
    throw DimensionMismatch("diagnostic_loss: shapes differ");
  }
  LossTerms out;
  double dist = 0.0;
  for (const auto& state : node_states) {
    if (!state.same_shape(gt)) throw DimensionMismatch("diagnostic_loss: node shape");
    const BinaryMask m = binarize(state, cfg.thr);
    const double s_truth = score_against_truth(m, gt, cfg.lambda1, cfg.lambda2).total;
    const double s_est = score(m, anchor, prior, cfg.lambda1, cfg.lambda2).total;
    dist += std::abs(s_truth - s_est);
  }
  out.distance = cfg.gamma * dist;

  double bce = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double x = final_soft[i];
    bce += gt[i] != 0 ? neg_log_sigmoid(x) : neg_log_sigmoid(-x);
  }
  out.bce = gt.size() > 0 ? bce / static_cast<double>(gt.size()) : 0.0;
  out.total = out.distance + out.bce;
  return out;
}

Engine::Engine(EngineConfig cfg, int height, int width)
    : cfg_(std::move(cfg)), height_(height), width_(width) {
  cfg_.validate();
  if (height < 1 || width < 1) throw std::invalid_argument("Engine: frame size must be positive");
}

FrameResult Engine::initialize(const std::map<int, BinaryMask>& annotations,
                               const FeatureMap& key_map) {
  if (annotations.empty()) throw std::invalid_argument("initialize: no annotations");
  if (cfg_.use_temporal && (key_map.height() != height_ || key_map.width() != width_)) {
    throw DimensionMismatch("initialize: key map does not match the frame size");
  }
  FrameResult res;
  res.index = 0;
  res.labels = LabelMap(height_, width_);
  for (const auto& [id, mask] : annotations) {
    if (id < 1 || id > 255) throw std::invalid_argument("initialize: object id out of 1..255");
    if (mask.height() != height_ || mask.width() != width_) {
      throw DimensionMismatch("initialize: annotation of object " + std::to_string(id) +
                              " does not match the frame size");
    }
    const auto box = bbox_of_mask(mask);
    if (!box) throw std::invalid_argument("initialize: annotation of object " + std::to_string(id) + " is empty");
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] == 0) continue;
      if (res.labels[i] != 0) {
        throw std::invalid_argument("initialize: annotations of objects " +
                                    std::to_string(res.labels[i]) + " and " + std::to_string(id) +
                                    " overlap");
      }
      res.labels[i] = static_cast<std::uint8_t>(id);
    }
    TrackState track;
    track.object_id = id;
    track.window = cfg_.history_n;
    append_box(track, *box);
    tracks_[id] = std::move(track);
    if (cfg_.use_temporal) {
      MemoryBank bank(cfg_.max_memory);
      bank.append(make_entry(mask, key_map, cfg_.margin, cfg_.key_height, cfg_.key_width, 0));
      banks_[id] = std::move(bank);
    }
    ObjectResult obj;
    obj.mask = mask;
    obj.soft = to_soft(mask);
    res.objects[id] = std::move(obj);
  }
  last_index_ = 0;
  return res;
}

FrameResult Engine::process(const FrameData& frame) {
  const auto t0 = std::chrono::steady_clock::now();
  if (last_index_ < 0) throw std::logic_error("process: engine not initialized");
  if (frame.index <= last_index_) {
    throw std::invalid_argument("process: frame " + std::to_string(frame.index) +
                                " arrives after frame " + std::to_string(last_index_));
  }
  if (cfg_.use_temporal && (frame.key_map.height() != height_ || frame.key_map.width() != width_)) {
    throw DimensionMismatch("frame " + std::to_string(frame.index) + ": key map size mismatch");
  }

  std::vector<int> ids;
  std::map<int, PredictedBox> predictions;
  for (const auto& [id, track] : tracks_) {
    ids.push_back(id);
    predictions[id] = cfg_.use_motion ? predict(track)
                                      : PredictedBox{track.centers.back(), track.sizes.back()};
    const auto w = frame.warped.find(id);
    if (w == frame.warped.end()) {
      throw std::invalid_argument("frame " + std::to_string(frame.index) +
                                  ": no warped mask for object " + std::to_string(id));
    }
    if (w->second.height() != height_ || w->second.width() != width_) {
      throw DimensionMismatch("frame " + std::to_string(frame.index) + ": warped mask of object " +
                              std::to_string(id) + " does not match the frame size");
    }
  }

  std::vector<BBox> boxes;
  boxes.reserve(frame.proposals.size());
  for (const auto& p : frame.proposals) boxes.push_back(p.bbox);
  const Assignment assignment = assign_proposals(boxes, predictions, cfg_.tau_assign);

  std::vector<ObjectResult> work(ids.size());
  parallel_for(ids.size(), cfg_.threads, [&](std::size_t k) {
    const int id = ids[k];
    ObjectResult& obj = work[k];
    const PredictedBox& p = predictions.at(id);
    const BinaryMask& prior = frame.warped.at(id);
    obj.prediction = p;
    obj.assigned = assignment.at(id);

    std::vector<ProposalNode> nodes;
    nodes.reserve(obj.assigned.size());
    for (std::size_t idx : obj.assigned) {
      const Proposal& prop = frame.proposals[idx];
      nodes.push_back({prop.bbox,
                       paste_into_void(to_soft(prop.mask), prop.bbox, height_, width_, Interp::nearest),
                       prop.feature});
    }

    std::vector<SoftMask> states;
    if (!nodes.empty()) {
      if (cfg_.use_spatial) {
        states = run_spatial(nodes, cfg_.alpha, cfg_.beta, cfg_.spatial_iters);
      } else {
        for (auto& n : nodes) states.push_back(std::move(n.mask));
      }
    }

    bool fallback = states.empty();
    if (!fallback) {
      std::vector<BinaryMask> candidates;
      candidates.reserve(states.size());
      for (const auto& s : states) candidates.push_back(binarize(s, cfg_.thr));
      Selection sel = select(candidates, p.box(), prior, cfg_.lambda1, cfg_.lambda2);
      obj.selected = sel.index;
      obj.scores = std::move(sel.scores);
      if (count_foreground(sel.mask) == 0) {
        fallback = true;
      } else if (cfg_.use_temporal) {
        const TemporalStep step = temporal_step(sel.mask, frame.key_map, banks_.at(id), cfg_.thr,
                                                cfg_.margin, cfg_.key_height, cfg_.key_width,
                                                frame.index);
        obj.temporal_state_mean = step.state_mean;
        obj.temporal_message_mean = step.message_mean;
        if (count_foreground(step.refined) == 0) {
          obj.refine_empty = true;
          obj.mask = std::move(sel.mask);
          obj.soft = states[*obj.selected];
        } else {
          obj.mask = step.refined;
          obj.soft = step.refined_soft;
        }
      } else {
        obj.mask = std::move(sel.mask);
        obj.soft = states[*obj.selected];
      }
    }
    if (fallback) {
      obj.fallback = true;
      obj.mask = prior;
      obj.soft = to_soft(prior);
    }

    const auto gt = frame.ground_truth.find(id);
    if (gt != frame.ground_truth.end()) {
      obj.loss = diagnostic_loss(states, obj.soft, gt->second, p.box(), prior, cfg_);
    }
  });

  FrameResult res;
  res.index = frame.index;
  std::map<int, BinaryMask> masks;
  std::map<int, SoftMask> soft;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    masks[ids[k]] = work[k].mask;
    soft[ids[k]] = work[k].soft;
  }
  res.labels = resolve_overlaps(masks, soft);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    work[k].mask = std::move(masks[ids[k]]);
    res.objects[ids[k]] = std::move(work[k]);
  }

  // History and memory follow the final masks, in id order.
  for (const auto& [id, obj] : res.objects) {
    const auto box = bbox_of_mask(obj.mask);
    if (!box) continue;
    append_box(tracks_.at(id), *box);
    if (cfg_.use_temporal) {
      banks_.at(id).append(make_entry(obj.mask, frame.key_map, cfg_.margin, cfg_.key_height,
                                      cfg_.key_width, frame.index));
    }
  }

  last_index_ = frame.index;
  res.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::vector<FrameResult> run_video(const Video& video, const EngineConfig& cfg) {
  if (video.frames.empty()) throw std::invalid_argument("run_video: video has no frames");
  Engine engine(cfg, video.height, video.width);
  std::vector<FrameResult> out;
  out.reserve(video.frames.size());
  out.push_back(engine.initialize(video.frames.front().annotations, video.frames.front().key_map));
  for (std::size_t f = 1; f < video.frames.size(); ++f) out.push_back(engine.process(video.frames[f]));
  return out;
}

}  // namespace stg
