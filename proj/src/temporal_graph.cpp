#include "stg/temporal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stg/spatial_graph.hpp"

namespace stg {

MemoryBank::MemoryBank(std::optional<std::size_t> capacity) : capacity_(capacity) {
  if (capacity_ && *capacity_ < 2) throw std::invalid_argument("memory capacity must be >= 2");
}

void MemoryBank::append(MemoryEntry entry) {
  if (!entries_.empty()) {
    const auto& first = entries_.front();
    if (entry.frame_index <= entries_.back().frame_index) {
      throw std::invalid_argument("memory frame indices must increase");
    }
    if (entry.key.channels() != first.key.channels() || entry.key.height() != first.key.height() ||
        entry.key.width() != first.key.width()) {
      throw DimensionMismatch("memory key shape differs from the bank");
    }
  }
  if (entry.value.height() != entry.key.height() || entry.value.width() != entry.key.width()) {
    throw DimensionMismatch("memory value shape differs from its key");
  }
  if (capacity_ && entries_.size() == *capacity_) entries_.erase(entries_.begin() + 1);
  entries_.push_back(std::move(entry));
}

BBox memory_region(const BinaryMask& full_mask, double margin) {
  const auto box = bbox_of_mask(full_mask);
  if (!box) throw std::invalid_argument("memory_region: empty mask");
  return expand_box(*box, margin, full_mask.height(), full_mask.width());
}

MemoryEntry make_entry(const BinaryMask& full_mask, const FeatureMap& frame_key_map, double margin,
                       int key_h, int key_w, int frame_index) {
  if (frame_key_map.height() != full_mask.height() || frame_key_map.width() != full_mask.width()) {
    throw DimensionMismatch("make_entry: key map and mask differ in size");
  }
  const BBox region = memory_region(full_mask, margin);
  MemoryEntry e;
  e.frame_index = frame_index;
  e.key = crop_resize(frame_key_map, region, key_h, key_w, Interp::bilinear);
  e.value = to_soft(crop_resize(full_mask, region, key_h, key_w));
  return e;
}

namespace {

// Pixel-major copy: out[j * C + c].
std::vector<double> pixel_major(const KeyGrid& k) {
  const std::size_t hw = static_cast<std::size_t>(k.height()) * static_cast<std::size_t>(k.width());
  const std::size_t c = static_cast<std::size_t>(k.channels());
  std::vector<double> out(hw * c);
  const auto& v = k.values();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t j = 0; j < hw; ++j) out[j * c + ch] = v[ch * hw + j];
  }
  return out;
}

void check_shapes(const KeyGrid& a, const KeyGrid& b) {
  if (a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width()) {
    throw DimensionMismatch("retrieve: key grids differ in shape");
  }
}

// Fills `logits` with <q, k_j> for all j and returns their maximum.
double compute_logits(const double* q, const std::vector<double>& mem, std::size_t c,
                      std::vector<double>& logits) {
  double mx = -INFINITY;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double* k = mem.data() + j * c;
    double d = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) d += q[ch] * k[ch];
    logits[j] = d;
    mx = std::max(mx, d);
  }
  return mx;
}

}  // namespace

std::vector<double> attention_weights(const KeyGrid& query, const KeyGrid& memory, std::size_t i) {
  check_shapes(query, memory);
  const std::size_t c = static_cast<std::size_t>(query.channels());
  const auto q = pixel_major(query);
  const auto mem = pixel_major(memory);
  std::vector<double> w(mem.size() / c);
  if (i >= w.size()) throw std::out_of_range("attention_weights: pixel index");
  const double mx = compute_logits(q.data() + i * c, mem, c, w);
  double sum = 0.0;
  for (double& x : w) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : w) x /= sum;
  return w;
}

SoftMask retrieve(const KeyGrid& query, const MemoryBank& bank) {
  if (bank.empty()) throw std::invalid_argument("retrieve: empty memory bank");
  const std::size_t c = static_cast<std::size_t>(query.channels());
  if (c == 0) throw std::invalid_argument("retrieve: key grids need at least one channel");
  const auto q = pixel_major(query);
  const std::size_t hw = q.size() / c;

  SoftMask out(query.height(), query.width());
  std::vector<double> logits(hw);
  for (const auto& entry : bank.entries()) {
    check_shapes(query, entry.key);
    const auto mem = pixel_major(entry.key);
    const auto& val = entry.value.values();
    for (std::size_t i = 0; i < hw; ++i) {
      const double mx = compute_logits(q.data() + i * c, mem, c, logits);
      double num = 0.0;
      double den = 0.0;
      for (std::size_t j = 0; j < hw; ++j) {
        const double e = std::exp(logits[j] - mx);
        den += e;
        num += e * val[j];
      }
      out[i] += num / den;
    }
  }
  return out;
}

SoftMask refine(const SoftMask& state, const SoftMask& message, int t) {
  if (t < 1) throw std::invalid_argument("refine: t must be >= 1, got " + std::to_string(t));
  if (!state.same_shape(message)) throw DimensionMismatch("refine: state/message shape");
  const double eta = 1.0 / static_cast<double>(t + 1);
  SoftMask out(state.height(), state.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = eta * (state[i] + message[i]);
  return out;
}

TemporalStep temporal_step(const BinaryMask& chosen, const FeatureMap& frame_key_map,
                           const MemoryBank& bank, double thr, double margin, int key_h,
                           int key_w, int frame_index) {
  if (bank.empty()) throw std::invalid_argument("temporal_step: empty memory bank");
  const MemoryEntry current = make_entry(chosen, frame_key_map, margin, key_h, key_w, frame_index);
  const SoftMask message = retrieve(current.key, bank);
  const SoftMask refined = refine(current.value, message, static_cast<int>(bank.size()));

  TemporalStep step;
  step.region = memory_region(chosen, margin);
  const int h = chosen.height();
  const int w = chosen.width();
  step.refined_soft = paste_into_void(refined, step.region, h, w, Interp::nearest);
  step.refined = paste_into_void(binarize(refined, thr), step.region, h, w);
  for (std::size_t i = 0; i < refined.size(); ++i) {
    step.state_mean += current.value[i];
    step.message_mean += message[i];
  }
  step.state_mean /= static_cast<double>(refined.size());
  step.message_mean /= static_cast<double>(refined.size());
  if (count_foreground(step.refined) > 0) {
    step.entry = make_entry(step.refined, frame_key_map, margin, key_h, key_w, frame_index);
  }
  return step;
}

}  // namespace stg
