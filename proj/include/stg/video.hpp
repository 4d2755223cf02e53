#pragma once

#include <map>
#include <string>
#include <vector>

#include "stg/geometry.hpp"
#include "stg/spatial_graph.hpp"

namespace stg {

/// A class-agnostic detection: box, crop-sized mask (resampled into the
/// box when pasted), and appearance feature.
struct Proposal {
  BBox bbox;
  BinaryMask mask;
  FeatureVector feature;
  double confidence = 1.0;  // carried through, unused by the engine
};

struct FrameData {
  int index = 0;
  FeatureMap key_map;                          ///< C x H x W
  std::map<int, BinaryMask> annotations;       ///< frame 0 only
  std::vector<Proposal> proposals;             ///< frames >= 1
  std::map<int, BinaryMask> warped;            ///< frames >= 1, one per object
  std::map<int, BinaryMask> ground_truth;      ///< optional
};

struct Video {
  std::string name;
  int height = 0;
  int width = 0;
  std::vector<int> object_ids;
  std::vector<FrameData> frames;
};

}  // namespace stg
