#include "stg/selection.hpp"

#include <stdexcept>

namespace stg {

SelectionScore score(const BinaryMask& mask, const BBox& anchor, const BinaryMask& prior,
                     double lambda1, double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw std::invalid_argument("score: negative lambda");
  SelectionScore s;
  if (const auto box = bbox_of_mask(mask)) s.box_term = iou_box(*box, anchor);
  s.prop_term = iou_mask(mask, prior);
  s.total = lambda1 * s.box_term + lambda2 * s.prop_term;
  return s;
}

Selection select(std::span<const BinaryMask> masks, const BBox& anchor, const BinaryMask& prior,
                 double lambda1, double lambda2) {
  if (masks.empty()) throw std::invalid_argument("select: no candidate masks");
  Selection out;
  out.scores.reserve(masks.size());
  for (std::size_t v = 0; v < masks.size(); ++v) {
    out.scores.push_back(score(masks[v], anchor, prior, lambda1, lambda2));
    if (out.scores[v].total > out.scores[out.index].total) out.index = v;
  }
  out.mask = masks[out.index];
  return out;
}

}  // namespace stg
