#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "stg/geometry.hpp"

namespace stg {

/// C x H1 x W1 key embedding of one cropped frame.
using KeyGrid = FeatureMap;

struct MemoryEntry {
  int frame_index = 0;
  KeyGrid key;
  SoftMask value;
};

/// Append-only memory of one object. With a capacity set, the oldest
/// non-annotation entry is dropped once the bank is full; entry 0 is kept.
class MemoryBank {
 public:
  MemoryBank() = default;
  explicit MemoryBank(std::optional<std::size_t> capacity);

  void append(MemoryEntry entry);
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<MemoryEntry>& entries() const { return entries_; }
  const MemoryEntry& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::optional<std::size_t> capacity_;
  std::vector<MemoryEntry> entries_;
};

/// Crop region used for a mask: its box grown by `margin`, clamped to the
/// frame. Throws std::invalid_argument for an empty mask.
BBox memory_region(const BinaryMask& full_mask, double margin);

/// Key = bilinear crop of every key-map channel, value = nearest crop of
/// the mask, both over memory_region(full_mask, margin).
MemoryEntry make_entry(const BinaryMask& full_mask, const FeatureMap& frame_key_map, double margin,
                       int key_h, int key_w, int frame_index);

/// Softmax weights over memory pixels j for query pixel i.
std::vector<double> attention_weights(const KeyGrid& query, const KeyGrid& memory, std::size_t i);

/// m_i = sum_r sum_j softmax_j(<q_i, k^r_j>) v^r_j, with each frame's
/// softmax normalised separately and stabilised by max subtraction.
SoftMask retrieve(const KeyGrid& query, const MemoryBank& bank);

/// (h + m) / (t + 1). Throws for t < 1.
SoftMask refine(const SoftMask& state, const SoftMask& message, int t);

struct TemporalStep {
  BinaryMask refined;      ///< full frame, zero outside `region`
  SoftMask refined_soft;   ///< full frame, zero outside `region`
  BBox region;
  std::optional<MemoryEntry> entry;  ///< built from `refined`; empty when it is
  double state_mean = 0.0;           ///< mean of h over the crop
  double message_mean = 0.0;         ///< mean of m over the crop
};

/// One refinement of `chosen` against `bank`. The normaliser uses
/// t = bank.size(), the number of memory frames retrieved. The bank is
/// not modified; the caller appends `entry` (or a replacement) itself.
TemporalStep temporal_step(const BinaryMask& chosen, const FeatureMap& frame_key_map,
                           const MemoryBank& bank, double thr, double margin, int key_h,
                           int key_w, int frame_index);

}  // namespace stg
