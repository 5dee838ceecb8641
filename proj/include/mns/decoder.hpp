#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mns/encoder.hpp"
#include "mns/image.hpp"
#include "mns/transform.hpp"

namespace mns {

struct DecodeConfig {
  int max_iters{10};
  double stop_delta{0.5};  // stop once the largest per-pixel change drops below this
  double initial{128.0};   // flat starting intensity
};

/// Real-valued working raster with the code's padded dimensions.
struct Raster {
  int width{0};
  int height{0};
  std::vector<double> values;

  Raster() = default;
  Raster(int w, int h, double fill)
      : width{w}, height{h}, values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

inline void paint(Raster& next, const BlockRect& rect, const RealBlock& block) {
  for (int r = 0; r < rect.size; ++r) {
    for (int c = 0; c < rect.size; ++c) next.at(rect.x + c, rect.y + r) = block.at(c, r);
  }
}

inline RealBlock domain_from(const Raster& current, const BlockRect& domain) {
  return downsample_mean2(std::span<const double>(current.values), current.width, domain);
}

inline void decode_leaf(const LeafRecord& leaf, const Raster& current, Raster& next) {
  const int w = current.width;
  const int h = current.height;
  if (const auto* p1 = std::get_if<Phase1>(&leaf.payload)) {
    const RealBlock d = domain_from(current, co_domain_rect(leaf.rect, w, h));
    paint(next, leaf.rect, apply_map(d, dequantize_contrast(p1->s_code), p1->o_byte));
  } else if (const auto* p2 = std::get_if<Phase2>(&leaf.payload)) {
    const auto means = phase2_quadrant_means(p2->o_i_byte, p2->deltas);
    const auto quads = quadrants(leaf.rect);
    for (std::size_t k = 0; k < 4; ++k) {
      const RealBlock d = domain_from(current, co_domain_rect(quads[k], w, h));
      paint(next, quads[k], apply_map(d, phase2_contrast(leaf.level, p2->s_bits[k]), means[k]));
    }
  } else {
    const auto& b = std::get<Baseline>(leaf.payload);
    const RealBlock d = domain_from(current, b.domain);
    paint(next, leaf.rect, apply_map(d, dequantize_contrast(b.s_code), b.o_byte));
  }
}

}  // namespace detail

/// One Jacobi sweep: every leaf reads `current`, results land in a fresh raster.
inline Raster decode_step(const QuadtreeCode& code, const Raster& current) {
  if (current.width != code.padded_w || current.height != code.padded_h) {
    throw std::invalid_argument("decode_step: raster does not match the code's padded size");
  }
  Raster next{current.width, current.height, 0.0};
  for (const auto& leaf : code.leaves) detail::decode_leaf(leaf, current, next);
  return next;
}

inline double max_abs_change(const Raster& a, const Raster& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

/// Iterates from the flat initial raster; returns the real-valued fixed-point
/// estimate at padded size. `deltas`, when given, receives the max change per step.
inline Raster decode_raster(const QuadtreeCode& code, const DecodeConfig& cfg,
                            std::vector<double>* deltas = nullptr) {
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  Raster current{code.padded_w, code.padded_h, cfg.initial};
  for (int i = 0; i < cfg.max_iters; ++i) {
    Raster next = decode_step(code, current);
    const double change = max_abs_change(current, next);
    if (deltas != nullptr) deltas->push_back(change);
    current = std::move(next);
    if (change < cfg.stop_delta) break;
  }
  return current;
}

/// Rounds to 8 bits and crops away the padding.
inline GrayImage to_image(const Raster& raster, int width, int height) {
  GrayImage out{width, height};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(raster.at(x, y)), 0L, 255L));
    }
  }
  return out;
}

inline GrayImage decode(const QuadtreeCode& code, const DecodeConfig& cfg = {}) {
  return to_image(decode_raster(code, cfg), code.orig_w, code.orig_h);
}

}  // namespace mns
