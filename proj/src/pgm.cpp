#include "stg/pgm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <limits>

namespace stg {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    long v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > std::numeric_limits<int>::max()) throw FormatError(std::string("pgm: ") + what + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("pgm: malformed header, expected ") + what);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  char peek() const { return pos_ < bytes_.size() ? bytes_[pos_] : '\0'; }
  bool at_end() const { return pos_ >= bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("pgm: missing P5 magic");
  }
  HeaderReader r(bytes);
  r.advance(2);
  if (r.at_end() || !std::isspace(static_cast<unsigned char>(r.peek())) ) {
    if (r.peek() != '#') throw FormatError("pgm: malformed header after magic");
  }
  const long width = r.read_uint("width");
  const long height = r.read_uint("height");
  const long maxval = r.read_uint("maxval");
  if (width < 1 || height < 1) throw FormatError("pgm: non-positive dimensions");
  if (maxval != 255) throw FormatError("pgm: maxval must be 255, got " + std::to_string(maxval));
  if (r.at_end() || !std::isspace(static_cast<unsigned char>(r.peek()))) {
    throw FormatError("pgm: missing separator before raster");
  }
  r.advance(1);
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - r.pos() < need) {
    throw FormatError("pgm: truncated raster (" + std::to_string(bytes.size() - r.pos()) + " of " +
                      std::to_string(need) + " bytes)");
  }
  const auto* first = reinterpret_cast<const std::uint8_t*>(bytes.data() + r.pos());
  return GrayImage(static_cast<int>(height), static_cast<int>(width),
                   std::vector<std::uint8_t>(first, first + need));
}

std::string encode_pgm(const GrayImage& img) {
  if (img.height() < 1 || img.width() < 1) throw FormatError("pgm: cannot encode an empty image");
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.values().data()), img.size());
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  write_file(path, encode_pgm(img));
}

BinaryMask mask_from_gray(const GrayImage& img) {
  BinaryMask m(img.height(), img.width());
  for (std::size_t i = 0; i < img.size(); ++i) m[i] = img[i] >= 128 ? 1 : 0;
  return m;
}

GrayImage gray_from_mask(const BinaryMask& mask) {
  GrayImage g(mask.height(), mask.width());
  for (std::size_t i = 0; i < mask.size(); ++i) g[i] = mask[i] != 0 ? 255 : 0;
  return g;
}

BinaryMask read_mask(const std::filesystem::path& path) { return mask_from_gray(read_pgm(path)); }

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  write_pgm(path, gray_from_mask(mask));
}

LabelMap read_label_map(const std::filesystem::path& path) { return read_pgm(path); }

void write_label_map(const std::filesystem::path& path, const LabelMap& labels) {
  write_pgm(path, labels);
}

}  // namespace stg
