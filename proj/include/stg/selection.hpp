#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stg/geometry.hpp"

namespace stg {

struct SelectionScore {
  double box_term = 0.0;
  double prop_term = 0.0;
  double total = 0.0;
};

/// lambda1 * IoU(bbox(mask), anchor) + lambda2 * IoU(mask, prior).
/// An empty mask has no box, so its box term is 0.
SelectionScore score(const BinaryMask& mask, const BBox& anchor, const BinaryMask& prior,
                     double lambda1, double lambda2);

struct Selection {
  std::size_t index = 0;
  BinaryMask mask;
  std::vector<SelectionScore> scores;
};

/// Highest total wins; ties resolve to the lowest index.
Selection select(std::span<const BinaryMask> masks, const BBox& anchor, const BinaryMask& prior,
                 double lambda1, double lambda2);

}  // namespace stg
