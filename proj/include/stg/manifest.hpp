#pragma once

#include <filesystem>
#include <stdexcept>

#include "stg/video.hpp"

namespace stg {

/// Schema or content violation; the message names the frame and, where
/// relevant, the object or proposal.
class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kManifestFormat = "stg-manifest";
inline constexpr int kManifestVersion = 1;

/// Parses, loads every referenced file (paths relative to the manifest's
/// directory), and validates the result.
Video read_manifest(const std::filesystem::path& path);

/// Writes all masks, tensors and `manifest.json` under `dir`; returns the
/// manifest path. Features and key maps are stored as float32.
std::filesystem::path write_manifest(const Video& video, const std::filesystem::path& dir);

/// Mask file naming shared by the manifest writer and the results writer.
std::string frame_object_name(int frame, int object_id);

}  // namespace stg
