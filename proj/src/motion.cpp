#include "stg/motion.hpp"

#include <algorithm>
#include <stdexcept>

namespace stg {

BBox TrackState::last_box() const {
  if (empty()) throw std::invalid_argument("track has no history");
  return BBox::from_center(centers.back(), sizes.back());
}

PredictedBox predict(const TrackState& track) {
  if (track.empty() || track.sizes.size() != track.centers.size()) {
    throw std::invalid_argument("predict: track " + std::to_string(track.object_id) +
                                " has no usable history");
  }
  if (track.window < 1) throw std::invalid_argument("predict: history window must be >= 1");
  const std::size_t len = track.length();
  const std::size_t n = static_cast<std::size_t>(track.window);

  const std::size_t steps = std::min(n, len - 1);
  Point2 velocity;
  for (std::size_t k = len - steps; k < len; ++k) {
    velocity.x += track.centers[k].x - track.centers[k - 1].x;
    velocity.y += track.centers[k].y - track.centers[k - 1].y;
  }
  if (steps > 0) {
    velocity.x /= static_cast<double>(steps);
    velocity.y /= static_cast<double>(steps);
  }

  const std::size_t count = std::min(n, len);
  Size2 size;
  for (std::size_t k = len - count; k < len; ++k) {
    size.w += track.sizes[k].w;
    size.h += track.sizes[k].h;
  }
  size.w /= static_cast<double>(count);
  size.h /= static_cast<double>(count);

  const Point2& last = track.centers.back();
  return {{last.x + velocity.x, last.y + velocity.y}, size};
}

void append_box(TrackState& track, const BBox& box) {
  if (!box.valid()) throw std::invalid_argument("update_track: invalid box");
  track.centers.push_back(box.center());
  track.sizes.push_back(box.size());
}

TrackState update_track(TrackState track, const BBox& box) {
  append_box(track, box);
  return track;
}

Assignment assign_proposals(const std::vector<BBox>& proposals,
                            const std::map<int, PredictedBox>& predictions, double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("assign_proposals: tau outside [0,1)");
  Assignment out;
  std::vector<std::pair<int, BBox>> boxes;
  for (const auto& [id, p] : predictions) {
    out[id];
    boxes.emplace_back(id, p.box());
  }
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    int best_id = 0;
    double best = -1.0;
    // std::map iteration is ascending, so strict > keeps the lower id on ties.
    for (const auto& [id, box] : boxes) {
      const double s = iou_box(proposals[i], box);
      if (s > best) {
        best = s;
        best_id = id;
      }
    }
    if (best > tau) out[best_id].push_back(i);
  }
  return out;
}

}  // namespace stg
