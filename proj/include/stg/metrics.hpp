#pragma once

#include <map>
#include <optional>
#include <vector>

#include "stg/geometry.hpp"

namespace stg {

/// Region similarity: IoU of prediction and ground truth.
double j_measure(const BinaryMask& pred, const BinaryMask& gt);

/// Foreground pixels 4-adjacent to background or to the image border.
BinaryMask boundary(const BinaryMask& m);

/// round(0.008 * image diagonal).
int default_tolerance(int height, int width);

/// Contour F-measure with Chebyshev-distance tolerance `tol`.
double f_measure(const BinaryMask& pred, const BinaryMask& gt, int tol);
double f_measure(const BinaryMask& pred, const BinaryMask& gt);

/// frame -> object id -> mask
using MaskSequence = std::vector<std::map<int, BinaryMask>>;

struct SequenceScore {
  /// object id -> per-frame scores for frames 1..T-1
  std::map<int, std::vector<double>> j;
  std::map<int, std::vector<double>> f;
  double j_mean = 0.0;
  double f_mean = 0.0;
  double g_mean = 0.0;
};

/// Frame 0 is skipped. Means are taken over frames, then over objects.
SequenceScore evaluate_sequence(const MaskSequence& pred, const MaskSequence& gt,
                                std::optional<int> tol = std::nullopt);

}  // namespace stg
