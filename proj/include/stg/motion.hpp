#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "stg/geometry.hpp"

namespace stg {

/// Box history of one tracked object. Storage is unbounded; prediction
/// looks at most `window` entries back.
struct TrackState {
  int object_id = 0;
  std::vector<Point2> centers;
  std::vector<Size2> sizes;
  int window = 10;

  std::size_t length() const { return centers.size(); }
  bool empty() const { return centers.empty(); }
  BBox last_box() const;
};

struct PredictedBox {
  Point2 center;
  Size2 size;

  BBox box() const { return BBox::from_center(center, size); }
  friend bool operator==(const PredictedBox&, const PredictedBox&) = default;
};

/// Constant-velocity extrapolation of the centre from the mean of the
/// last min(n, len - 1) steps, with the size averaged over the last
/// min(n, len) entries. Throws std::invalid_argument on an empty history.
PredictedBox predict(const TrackState& track);

/// Appends the box centre and size to the history.
TrackState update_track(TrackState track, const BBox& box);
void append_box(TrackState& track, const BBox& box);

using Assignment = std::map<int, std::vector<std::size_t>>;

/// Gives each proposal to the object whose predicted box overlaps it most,
/// provided that IoU is strictly above `tau`. Ties go to the lower id.
/// Every object in `predictions` appears in the result, possibly with no
/// proposals.
Assignment assign_proposals(const std::vector<BBox>& proposals,
                            const std::map<int, PredictedBox>& predictions, double tau);

}  // namespace stg
