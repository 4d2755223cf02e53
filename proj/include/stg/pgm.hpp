#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "stg/geometry.hpp"

namespace stg {

/// Malformed or truncated file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using GrayImage = Grid<std::uint8_t>;

/// Binary graymap (P5, maxval 255). Comments in the header are skipped.
GrayImage decode_pgm(std::string_view bytes);
/// Canonical header "P5\n<w> <h>\n255\n" followed by the raw rows.
std::string encode_pgm(const GrayImage& img);

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Gray >= 128 decodes to 1; 1 encodes as 255.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask mask_from_gray(const GrayImage& img);
GrayImage gray_from_mask(const BinaryMask& mask);

/// Object ids stored directly as gray values.
LabelMap read_label_map(const std::filesystem::path& path);
void write_label_map(const std::filesystem::path& path, const LabelMap& labels);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace stg
