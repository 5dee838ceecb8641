#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mns {

// Errors ---------------------------------------------------------------------

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundsError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// BlockRect ------------------------------------------------------------------

/// Square pixel region, identified by its top-left corner.
struct BlockRect {
  int x{0};
  int y{0};
  int size{0};

  friend bool operator==(const BlockRect&, const BlockRect&) = default;
};

// GrayImage ------------------------------------------------------------------

/// 8-bit single-channel raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, std::uint8_t fill = 0)
      : width_{width}, height_{height},
        pixels_(checked_area(width, height), fill) {}

  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_{width}, height_{height}, pixels_{std::move(pixels)} {
    if (pixels_.size() != checked_area(width, height)) {
      throw std::invalid_argument("GrayImage: pixel count does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t area() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& at(int x, int y) noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  bool contains(const BlockRect& r) const noexcept {
    return r.size > 0 && r.x >= 0 && r.y >= 0 && r.x + r.size <= width_ &&
           r.y + r.size <= height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static std::size_t checked_area(int w, int h) {
    if (w < 0 || h < 0) throw std::invalid_argument("GrayImage: negative dimension");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }

  int width_{0};
  int height_{0};
  std::vector<std::uint8_t> pixels_;
};

/// Square block of real intensities (a range block, or a downsampled domain).
struct RealBlock {
  int size{0};
  std::vector<double> values;

  RealBlock() = default;
  explicit RealBlock(int n, double fill = 0.0)
      : size{n}, values(static_cast<std::size_t>(n) * n, fill) {}

  double& at(int col, int row) { return values[static_cast<std::size_t>(row) * size + col]; }
  double at(int col, int row) const { return values[static_cast<std::size_t>(row) * size + col]; }
  std::size_t count() const noexcept { return values.size(); }
};

// PGM I/O --------------------------------------------------------------------

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_{bytes} {}

  // Reads the next whitespace-delimited token, skipping '#' comments.
  std::string token(std::string_view field) {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw FormatError("pgm: missing " + std::string(field));
    return out;
  }

  int number(std::string_view field) {
    const std::string tok = token(field);
    if (tok.size() > 9 ||
        !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw FormatError("pgm: invalid " + std::string(field) + " '" + tok + "'");
    }
    return std::stoi(tok);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw FormatError("pgm: missing whitespace before payload");
    }
    return pos_ + 1;
  }

 private:
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_{0};
};

}  // namespace detail

/// Parses a binary (P5) PGM with maxval 255.
inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  detail::PgmHeaderReader header{bytes};
  if (header.token("magic") != "P5") throw FormatError("pgm: bad magic (expected P5)");
  const int width = header.number("width");
  const int height = header.number("height");
  const int maxval = header.number("maxval");
  if (width <= 0 || height <= 0) throw FormatError("pgm: invalid dimensions");
  if (maxval != 255) throw FormatError("pgm: unsupported maxval " + std::to_string(maxval));
  const std::size_t offset = header.payload_offset();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < offset + need) throw FormatError("pgm: truncated payload");
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(offset);
  return GrayImage{width, height,
                   std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(need))};
}

inline std::vector<std::uint8_t> save_pgm(const GrayImage& image) {
  const std::string header = "P5 " + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + " 255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels().begin(), image.pixels().end());
  return out;
}

// Geometry and block algebra -------------------------------------------------

/// Grows the image to the next multiple of `m` in each axis by edge replication.
inline GrayImage pad_to_multiple(const GrayImage& image, int m) {
  if (m < 1) throw std::invalid_argument("pad_to_multiple: m must be >= 1");
  const int w = (image.width() + m - 1) / m * m;
  const int h = (image.height() + m - 1) / m * m;
  if (w == image.width() && h == image.height()) return image;
  if (image.empty()) return GrayImage{w, h};
  GrayImage out{w, h};
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, image.height() - 1);
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = image.at(std::min(x, image.width() - 1), sy);
    }
  }
  return out;
}

inline void require_inside(const GrayImage& image, const BlockRect& rect) {
  if (!image.contains(rect)) {
    throw BoundsError("block (" + std::to_string(rect.x) + "," + std::to_string(rect.y) + "," +
                      std::to_string(rect.size) + ") outside " + std::to_string(image.width()) +
                      "x" + std::to_string(image.height()) + " image");
  }
}

inline double block_mean(const GrayImage& image, const BlockRect& rect) {
  require_inside(image, rect);
  std::int64_t sum = 0;
  for (int y = rect.y; y < rect.y + rect.size; ++y) {
    for (int x = rect.x; x < rect.x + rect.size; ++x) sum += image.at(x, y);
  }
  return static_cast<double>(sum) / (static_cast<double>(rect.size) * rect.size);
}

inline RealBlock extract_block(const GrayImage& image, const BlockRect& rect) {
  require_inside(image, rect);
  RealBlock out{rect.size};
  for (int r = 0; r < rect.size; ++r) {
    for (int c = 0; c < rect.size; ++c) out.at(c, r) = image.at(rect.x + c, rect.y + r);
  }
  return out;
}

/// 2x2 mean filter: shrinks a 2B-sided rect to a BxB block.
inline RealBlock downsample_mean2(const GrayImage& image, const BlockRect& rect) {
  assert(rect.size % 2 == 0 && "downsample_mean2 needs an even block size");
  if (rect.size % 2 != 0) throw std::invalid_argument("downsample_mean2: odd block size");
  require_inside(image, rect);
  const int half = rect.size / 2;
  RealBlock out{half};
  for (int r = 0; r < half; ++r) {
    const int y = rect.y + 2 * r;
    for (int c = 0; c < half; ++c) {
      const int x = rect.x + 2 * c;
      const int sum = image.at(x, y) + image.at(x + 1, y) + image.at(x, y + 1) + image.at(x + 1, y + 1);
      out.at(c, r) = sum / 4.0;
    }
  }
  return out;
}

/// Same filter over a real raster (the decoder's working buffer).
inline RealBlock downsample_mean2(std::span<const double> raster, int raster_width,
                                  const BlockRect& rect) {
  const int half = rect.size / 2;
  RealBlock out{half};
  auto px = [&](int x, int y) { return raster[static_cast<std::size_t>(y) * raster_width + x]; };
  for (int r = 0; r < half; ++r) {
    const int y = rect.y + 2 * r;
    for (int c = 0; c < half; ++c) {
      const int x = rect.x + 2 * c;
      out.at(c, r) = (px(x, y) + px(x + 1, y) + px(x, y + 1) + px(x + 1, y + 1)) / 4.0;
    }
  }
  return out;
}

/// The 2*size domain sharing the range's center, shifted inside the image per axis.
inline BlockRect co_domain_rect(const BlockRect& range, int img_w, int img_h) {
  const int side = 2 * range.size;
  if (range.size <= 0 || side > img_w || side > img_h) {
    throw GeometryError("no " + std::to_string(side) + "x" + std::to_string(side) +
                        " domain fits a " + std::to_string(img_w) + "x" + std::to_string(img_h) +
                        " image");
  }
  const int offset = range.size / 2;
  return BlockRect{std::clamp(range.x - offset, 0, img_w - side),
                   std::clamp(range.y - offset, 0, img_h - side), side};
}

}  // namespace mns
