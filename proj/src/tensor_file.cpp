#include "stg/tensor_file.hpp"

#include <bit>
#include <cstring>

#include "stg/pgm.hpp"

namespace stg {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'G', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(b)])) << (8 * b);
  }
  return v;
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("stgt: missing STGT magic");
  }
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  if (version != kTensorVersion) {
    throw FormatError("stgt: unsupported version " + std::to_string(version));
  }
  const std::size_t rank = static_cast<std::uint8_t>(bytes[5]);
  std::size_t pos = 6;
  if (bytes.size() < pos + 4 * rank) throw FormatError("stgt: truncated dimension list");
  Tensor t;
  t.dims.reserve(rank);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    t.dims.push_back(get_u32(bytes, pos));
    pos += 4;
    count *= t.dims.back();
    if (count > (std::uint64_t{1} << 32)) throw FormatError("stgt: tensor too large");
  }
  const std::size_t payload = bytes.size() - pos;
  if (payload != count * 4) {
    throw FormatError("stgt: payload is " + std::to_string(payload) + " bytes, expected " +
                      std::to_string(count * 4));
  }
  t.values.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    t.values[i] = std::bit_cast<float>(get_u32(bytes, pos + 4 * i));
  }
  return t;
}

std::string encode_tensor(const Tensor& t) {
  if (t.dims.size() > 255) throw FormatError("stgt: rank exceeds 255");
  if (t.values.size() != t.element_count()) throw FormatError("stgt: value count does not match dims");
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kTensorVersion));
  out.push_back(static_cast<char>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  out.reserve(out.size() + 4 * t.values.size());
  for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file(path, encode_tensor(t));
}

Tensor to_tensor(const FeatureVector& v) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  t.values.assign(v.values.begin(), v.values.end());
  return t;
}

Tensor to_tensor(const FeatureMap& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.channels()), static_cast<std::uint32_t>(m.height()),
            static_cast<std::uint32_t>(m.width())};
  t.values.assign(m.values().begin(), m.values().end());
  return t;
}

FeatureVector feature_vector_from(const Tensor& t) {
  if (t.dims.size() != 1) throw FormatError("stgt: feature vector must have rank 1");
  return {std::vector<double>(t.values.begin(), t.values.end())};
}

FeatureMap feature_map_from(const Tensor& t) {
  if (t.dims.size() != 3) throw FormatError("stgt: key map must have rank 3");
  return FeatureMap(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                    static_cast<int>(t.dims[2]), std::vector<double>(t.values.begin(), t.values.end()));
}

}  // namespace stg
