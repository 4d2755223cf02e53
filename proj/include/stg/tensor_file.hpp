#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "stg/geometry.hpp"
#include "stg/spatial_graph.hpp"

namespace stg {

/// "STGT" container: magic, version byte, rank byte, rank x uint32 LE
/// dimensions, then float32 LE values in row-major order.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
};

inline constexpr std::uint8_t kTensorVersion = 1;

Tensor decode_tensor(std::string_view bytes);
std::string encode_tensor(const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

Tensor to_tensor(const FeatureVector& v);
Tensor to_tensor(const FeatureMap& m);
FeatureVector feature_vector_from(const Tensor& t);
FeatureMap feature_map_from(const Tensor& t);

}  // namespace stg
