#pragma once

// Shared generators and independent oracles for the test suites. The oracles
// deliberately avoid the library's fitting/geometry helpers so they can check them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mns/mns.hpp"

namespace mns::test {

inline std::string data_path(const std::string& name) {
  return std::string(MNS_TEST_DATA_DIR) + "/" + name;
}

inline GrayImage load_corpus(const std::string& name) {
  std::ifstream in(data_path(name), std::ios::binary);
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return load_pgm(bytes);
}

inline GrayImage noise_image(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> px(0, 255);
  GrayImage img{w, h};
  for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(px(rng));
  return img;
}

inline GrayImage constant_image(int w, int h, std::uint8_t v) { return GrayImage{w, h, v}; }

inline RealBlock random_block(int n, std::mt19937& rng, double lo = 0.0, double hi = 255.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  RealBlock b{n};
  for (auto& v : b.values) v = dist(rng);
  return b;
}

inline RealBlock block_of(int n, std::initializer_list<double> values) {
  RealBlock b{n};
  b.values.assign(values.begin(), values.end());
  return b;
}

// Independent oracle: squared-error RMS of s*(D - mean D) + o against R, written out longhand.
inline double oracle_rms(const RealBlock& r, const RealBlock& d, double s, double o) {
  double mean = 0.0;
  for (double v : d.values) mean += v;
  mean /= static_cast<double>(d.values.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const double e = r.values[i] - s * (d.values[i] - mean) - o;
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(r.values.size()));
}

struct GridBest {
  double s{0.0};
  double o{0.0};
  double rms{std::numeric_limits<double>::infinity()};
};

// Brute force over s in [-1, 1] step 0.01 and o in [0, 255] step 1.
inline GridBest grid_search(const RealBlock& r, const RealBlock& d) {
  GridBest best;
  for (int si = -100; si <= 100; ++si) {
    for (int o = 0; o <= 255; ++o) {
      const double rms = oracle_rms(r, d, si / 100.0, o);
      if (rms < best.rms) best = {si / 100.0, static_cast<double>(o), rms};
    }
  }
  return best;
}

// Independent domain geometry: co-centered 2n square, clamped per axis.
inline RealBlock oracle_co_domain(const GrayImage& img, int x, int y, int n) {
  const int side = 2 * n;
  const int dx = std::min(std::max(x - n / 2, 0), img.width() - side);
  const int dy = std::min(std::max(y - n / 2, 0), img.height() - side);
  RealBlock out{n};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const int px = dx + 2 * c;
      const int py = dy + 2 * r;
      out.at(c, r) = (img.at(px, py) + img.at(px + 1, py) + img.at(px, py + 1) + img.at(px + 1, py + 1)) / 4.0;
    }
  }
  return out;
}

inline RealBlock oracle_range(const GrayImage& img, int x, int y, int n) {
  RealBlock out{n};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) out.at(c, r) = img.at(x + c, y + r);
  }
  return out;
}

// Minimum RMS over every (3-bit contrast, 8-bit luminance) pair for the co-centered domain.
inline double oracle_best_quantized_rms(const GrayImage& img, int x, int y, int n) {
  const RealBlock r = oracle_range(img, x, y, n);
  const RealBlock d = oracle_co_domain(img, x, y, n);
  double best = std::numeric_limits<double>::infinity();
  for (int code = 0; code < 8; ++code) {
    for (int o = 0; o <= 255; ++o) best = std::min(best, oracle_rms(r, d, -0.875 + 0.25 * code, o));
  }
  return best;
}

// Random valid quadtree code -------------------------------------------------------

inline void random_subtree(const BlockRect& rect, int level, Mode mode, double split_p,
                           std::mt19937& rng, std::vector<LeafRecord>& out) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (level < kLevels && u(rng) < split_p) {
    for (const auto& q : quadrants(rect)) random_subtree(q, level + 1, mode, split_p, rng, out);
    return;
  }
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> code(0, 7);
  std::uniform_int_distribution<int> bit(0, 1);
  LeafRecord leaf{rect, level, Phase1{}};
  if (mode == Mode::mns && level < kLevels && u(rng) < 0.4) {
    Phase2 p;
    p.o_i_byte = static_cast<std::uint8_t>(byte(rng));
    std::uniform_int_distribution<int> delta(-delta_limit(level), delta_limit(level));
    for (auto& d : p.deltas) d = delta(rng);
    for (auto& b : p.s_bits) b = static_cast<std::uint8_t>(bit(rng));
    leaf.payload = p;
  } else {
    leaf.payload = Phase1{static_cast<std::uint8_t>(byte(rng)), ContrastCode{code(rng)}};
  }
  out.push_back(leaf);
}

inline QuadtreeCode random_code(std::mt19937& rng) {
  std::uniform_int_distribution<int> roots(1, 4);
  std::uniform_int_distribution<int> trim(0, 15);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_real_distribution<double> split(0.0, 0.9);
  QuadtreeCode code;
  code.padded_w = kRootSize * roots(rng);
  code.padded_h = kRootSize * roots(rng);
  code.orig_w = code.padded_w - trim(rng);
  code.orig_h = code.padded_h - trim(rng);
  code.mode = bit(rng) ? Mode::mns : Mode::no_search;
  code.technique2 = bit(rng) == 1;
  const double p = split(rng);
  for (int y = 0; y < code.padded_h; y += kRootSize) {
    for (int x = 0; x < code.padded_w; x += kRootSize) {
      random_subtree(BlockRect{x, y, kRootSize}, 1, code.mode, p, rng, code.leaves);
    }
  }
  return code;
}

// Leaves tile the padded raster: every pixel covered exactly once.
inline bool tiles_exactly(const QuadtreeCode& code) {
  std::vector<int> cover(static_cast<std::size_t>(code.padded_w) * code.padded_h, 0);
  for (const auto& leaf : code.leaves) {
    const auto& r = leaf.rect;
    if (r.x < 0 || r.y < 0 || r.x + r.size > code.padded_w || r.y + r.size > code.padded_h) return false;
    for (int y = r.y; y < r.y + r.size; ++y) {
      for (int x = r.x; x < r.x + r.size; ++x) ++cover[static_cast<std::size_t>(y) * code.padded_w + x];
    }
  }
  return std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; });
}

inline Raster raster_of(const GrayImage& img) {
  Raster r{img.width(), img.height(), 0.0};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) r.at(x, y) = img.at(x, y);
  }
  return r;
}

inline double leaf_rms(const Raster& decoded, const GrayImage& original, const BlockRect& rect) {
  double sq = 0.0;
  for (int y = rect.y; y < rect.y + rect.size; ++y) {
    for (int x = rect.x; x < rect.x + rect.size; ++x) {
      const double e = decoded.at(x, y) - original.at(x, y);
      sq += e * e;
    }
  }
  return std::sqrt(sq / (static_cast<double>(rect.size) * rect.size));
}

}  // namespace mns::test
