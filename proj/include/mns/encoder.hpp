#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mns/image.hpp"
#include "mns/transform.hpp"

namespace mns {

enum class Mode { no_search, mns, local_search, full_search };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::no_search: return "ns";
    case Mode::mns: return "mns";
    case Mode::local_search: return "local";
    case Mode::full_search: return "full";
  }
  return "?";
}

/// Which phase-2 applicability test to run. `within_tolerance` is the standard
/// gate; `beyond_tolerance` flips it for bench experiments only.
enum class MeanGate { within_tolerance, beyond_tolerance };

inline constexpr int kLevels = 4;
inline constexpr int kRootSize = 16;

struct EncoderConfig {
  std::array<double, 3> thresholds{8.0, 8.0, 8.0};  // E1..E3; level 4 always accepts
  double mean_tol{16.0};
  Mode mode{Mode::mns};
  bool technique2{true};
  int full_search_step{1};
  MeanGate mean_gate{MeanGate::within_tolerance};

  void validate() const {
    for (double e : thresholds) {
      if (!(e > 0.0)) throw std::invalid_argument("thresholds must be > 0");
    }
    if (!(mean_tol >= 0.0)) throw std::invalid_argument("mean tolerance must be >= 0");
    if (full_search_step < 1) throw std::invalid_argument("full search step must be >= 1");
  }
};

/// Range side for quadtree level 1..4 (16, 8, 4, 2).
constexpr int range_size_for_level(int level) { return kRootSize >> (level - 1); }

inline int level_for_range_size(int size) {
  for (int level = 1; level <= kLevels; ++level) {
    if (range_size_for_level(level) == size) return level;
  }
  throw std::invalid_argument("range size must be one of 16, 8, 4, 2");
}

// Phase-2 contrast pairs for levels 1..3.
inline constexpr std::array<std::array<double, 2>, 3> kContrastSets{{
    {0.2, 0.5},
    {0.4, 0.65},
    {0.5, 0.9},
}};

inline double phase2_contrast(int level, int bit) {
  return kContrastSets.at(static_cast<std::size_t>(level - 1)).at(static_cast<std::size_t>(bit));
}

/// Total delta width incl. sign: 5 bits at level 1, 6 at levels 2-3.
constexpr int delta_width(int level) { return level == 1 ? 5 : 6; }
constexpr int delta_limit(int level) { return (1 << (delta_width(level) - 1)) - 1; }

// Leaf payloads ---------------------------------------------------------------

struct Phase1 {
  std::uint8_t o_byte{0};
  ContrastCode s_code{};
  friend bool operator==(const Phase1&, const Phase1&) = default;
};

struct Phase2 {
  std::uint8_t o_i_byte{0};
  std::array<int, 3> deltas{};        // quadrant mean minus block mean, TL/TR/BL
  std::array<std::uint8_t, 4> s_bits{};  // index into the level's contrast pair
  friend bool operator==(const Phase2&, const Phase2&) = default;
};

struct Baseline {
  BlockRect domain{};
  std::uint8_t o_byte{0};
  ContrastCode s_code{};
  friend bool operator==(const Baseline&, const Baseline&) = default;
};

struct LeafRecord {
  BlockRect rect{};
  int level{1};
  std::variant<Phase1, Phase2, Baseline> payload{Phase1{}};

  bool is_phase2() const { return std::holds_alternative<Phase2>(payload); }
  friend bool operator==(const LeafRecord&, const LeafRecord&) = default;
};

struct QuadtreeCode {
  std::vector<LeafRecord> leaves;  // DFS: roots raster order, children TL, TR, BL, BR
  int padded_w{0};
  int padded_h{0};
  int orig_w{0};
  int orig_h{0};
  Mode mode{Mode::mns};
  bool technique2{true};

  friend bool operator==(const QuadtreeCode&, const QuadtreeCode&) = default;
};

struct CodeTally {
  std::array<std::size_t, kLevels> per_level{};
  std::size_t phase2{0};
  std::size_t total() const { return per_level[0] + per_level[1] + per_level[2] + per_level[3]; }
};

inline CodeTally tally(const QuadtreeCode& code) {
  CodeTally t;
  for (const auto& leaf : code.leaves) {
    ++t.per_level.at(static_cast<std::size_t>(leaf.level - 1));
    if (leaf.is_phase2()) ++t.phase2;
  }
  return t;
}

/// Children of a quadtree node in TL, TR, BL, BR order.
inline std::array<BlockRect, 4> quadrants(const BlockRect& r) {
  const int h = r.size / 2;
  return {BlockRect{r.x, r.y, h}, BlockRect{r.x + h, r.y, h}, BlockRect{r.x, r.y + h, h},
          BlockRect{r.x + h, r.y + h, h}};
}

/// Reconstructed quadrant means from the stored block mean and three deltas.
/// The fourth follows from the four quadrant means averaging to the block mean.
inline std::array<double, 4> phase2_quadrant_means(std::uint8_t o_i_byte,
                                                   const std::array<int, 3>& deltas) {
  const double o_i = o_i_byte;
  const double q1 = o_i + deltas[0];
  const double q2 = o_i + deltas[1];
  const double q3 = o_i + deltas[2];
  return {q1, q2, q3, 4.0 * o_i - q1 - q2 - q3};
}

inline std::uint8_t round_to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

inline bool domain_fits(const BlockRect& range, int img_w, int img_h) {
  return 2 * range.size <= img_w && 2 * range.size <= img_h;
}

// Phase attempts ---------------------------------------------------------------

/// Result of one coding attempt; `leaf` is empty on rejection.
struct Attempt {
  std::optional<LeafRecord> leaf;
  double rms{0.0};
  bool accepted() const { return leaf.has_value(); }
};

/// No-search attempt: the co-centered domain only, s fit then snapped to 3 bits.
inline Attempt try_phase1(const GrayImage& image, const BlockRect& range, int level,
                          const EncoderConfig& config) {
  if (range.size != range_size_for_level(level)) {
    throw std::invalid_argument("range size does not match level");
  }
  const RealBlock r = extract_block(image, range);
  const RealBlock d =
      downsample_mean2(image, co_domain_rect(range, image.width(), image.height()));
  const AffineParams fit = fit_affine(r, d);
  const Phase1 p{round_to_byte(fit.o), quantize_contrast(fit.s)};
  const double rms = rms_error(r, d, dequantize_contrast(p.s_code), p.o_byte);
  if (level == kLevels || rms <= config.thresholds[static_cast<std::size_t>(level - 1)]) {
    return {LeafRecord{range, level, p}, rms};
  }
  return {std::nullopt, rms};
}

/// Sub-block-mean attempt: one stored mean, three quantized deltas and a
/// one-bit contrast choice per quadrant. Levels 1..3 only.
inline Attempt try_phase2(const GrayImage& image, const BlockRect& range, int level,
                          const EncoderConfig& config) {
  if (level < 1 || level > 3) throw std::invalid_argument("phase 2 needs level 1..3");
  if (range.size != range_size_for_level(level)) {
    throw std::invalid_argument("range size does not match level");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double o_i = block_mean(image, range);
  const auto quads = quadrants(range);
  std::array<double, 4> sub{};
  double spread = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    sub[k] = block_mean(image, quads[k]);
    spread = std::max(spread, std::abs(sub[k] - o_i));
  }
  const bool close = spread <= config.mean_tol;
  if (close != (config.mean_gate == MeanGate::within_tolerance)) return {std::nullopt, kInf};

  Phase2 p;
  p.o_i_byte = round_to_byte(o_i);
  for (std::size_t k = 0; k < 3; ++k) {
    p.deltas[k] = static_cast<int>(std::lround(sub[k] - o_i));
    if (std::abs(p.deltas[k]) > delta_limit(level)) return {std::nullopt, kInf};
  }
  const auto means = phase2_quadrant_means(p.o_i_byte, p.deltas);
  for (double m : means) {
    if (m < 0.0 || m > 255.0) return {std::nullopt, kInf};
  }

  double worst = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (!domain_fits(quads[k], image.width(), image.height())) return {std::nullopt, kInf};
    const RealBlock r = extract_block(image, quads[k]);
    const RealBlock d =
        downsample_mean2(image, co_domain_rect(quads[k], image.width(), image.height()));
    const double e0 = rms_error(r, d, phase2_contrast(level, 0), means[k]);
    const double e1 = rms_error(r, d, phase2_contrast(level, 1), means[k]);
    p.s_bits[k] = e1 < e0 ? 1 : 0;
    worst = std::max(worst, std::min(e0, e1));
  }
  if (worst <= config.thresholds[static_cast<std::size_t>(level - 1)]) {
    return {LeafRecord{range, level, p}, worst};
  }
  return {std::nullopt, worst};
}

// Quadtree driver ----------------------------------------------------------------

namespace detail {

inline void encode_node(const GrayImage& image, const BlockRect& range, int level,
                        const EncoderConfig& config, std::vector<LeafRecord>& out) {
  // Phase 1 is skipped where the co-centered domain cannot fit (tiny images).
  if (domain_fits(range, image.width(), image.height())) {
    Attempt a = try_phase1(image, range, level, config);
    if (a.accepted()) {
      out.push_back(std::move(*a.leaf));
      return;
    }
  }
  if (config.mode == Mode::mns && level < kLevels) {
    Attempt a = try_phase2(image, range, level, config);
    if (a.accepted()) {
      out.push_back(std::move(*a.leaf));
      return;
    }
  }
  if (level == kLevels) {
    throw GeometryError("image too small for a level-4 domain");
  }
  for (const BlockRect& child : quadrants(range)) {
    encode_node(image, child, level + 1, config, out);
  }
}

}  // namespace detail

/// No-search or modified no-search quadtree encoding of the whole image.
inline QuadtreeCode encode_quadtree(const GrayImage& image, const EncoderConfig& config) {
  config.validate();
  if (config.mode != Mode::no_search && config.mode != Mode::mns) {
    throw std::invalid_argument("encode_quadtree supports ns and mns modes only");
  }
  if (image.empty()) throw std::invalid_argument("cannot encode an empty image");
  const GrayImage padded = pad_to_multiple(image, kRootSize);
  QuadtreeCode code;
  code.padded_w = padded.width();
  code.padded_h = padded.height();
  code.orig_w = image.width();
  code.orig_h = image.height();
  code.mode = config.mode;
  code.technique2 = config.technique2;
  for (int y = 0; y < padded.height(); y += kRootSize) {
    for (int x = 0; x < padded.width(); x += kRootSize) {
      detail::encode_node(padded, BlockRect{x, y, kRootSize}, 1, config, code.leaves);
    }
  }
  return code;
}

// Search baselines -----------------------------------------------------------------

/// Domain center minus range center, in pixels.
struct OffsetSample {
  int dx{0};
  int dy{0};
  friend bool operator==(const OffsetSample&, const OffsetSample&) = default;
};

struct SearchResult {
  QuadtreeCode code;
  std::vector<OffsetSample> offsets;  // one per range, leaf order
  std::vector<double> rms;            // best quantized rms per range
  std::size_t candidates_evaluated{0};
};

namespace detail {

struct DomainCandidate {
  BlockRect rect;
  std::vector<double> centered;  // downsampled, mean removed
  double variance_sum{0.0};
};

inline DomainCandidate make_candidate(const GrayImage& image, const BlockRect& rect) {
  const RealBlock d = downsample_mean2(image, rect);
  const double mean = mean_of(d);
  DomainCandidate c{rect, std::vector<double>(d.count()), 0.0};
  for (std::size_t i = 0; i < d.count(); ++i) {
    c.centered[i] = d.values[i] - mean;
    c.variance_sum += c.centered[i] * c.centered[i];
  }
  return c;
}

struct BestMatch {
  Baseline payload{};
  double rms{std::numeric_limits<double>::infinity()};
};

// Fits, quantizes and scores one candidate; replaces `best` only on strict improvement.
inline void consider(const RealBlock& range, double range_mean, const DomainCandidate& cand,
                     BestMatch& best) {
  double cross = 0.0;
  for (std::size_t i = 0; i < range.count(); ++i) {
    cross += cand.centered[i] * (range.values[i] - range_mean);
  }
  const double s = cand.variance_sum <= 1e-12 ? 0.0 : cross / cand.variance_sum;
  const ContrastCode code = quantize_contrast(s);
  const std::uint8_t o = round_to_byte(range_mean);
  const double sq = dequantize_contrast(code);
  double err = 0.0;
  for (std::size_t i = 0; i < range.count(); ++i) {
    const double e = range.values[i] - (sq * cand.centered[i] + o);
    err += e * e;
  }
  const double rms = std::sqrt(err / static_cast<double>(range.count()));
  if (rms < best.rms) best = BestMatch{Baseline{cand.rect, o, code}, rms};
}

inline OffsetSample center_offset(const BlockRect& range, const BlockRect& domain) {
  // Twice the centers keeps everything integral; sizes are even.
  return {(2 * domain.x + domain.size - 2 * range.x - range.size) / 2,
          (2 * domain.y + domain.size - 2 * range.y - range.size) / 2};
}

inline QuadtreeCode baseline_shell(const GrayImage& image, const GrayImage& padded, Mode mode) {
  QuadtreeCode code;
  code.padded_w = padded.width();
  code.padded_h = padded.height();
  code.orig_w = image.width();
  code.orig_h = image.height();
  code.mode = mode;
  code.technique2 = false;
  return code;
}

// Leaves of a fixed-size partition, in the quadtree DFS order.
inline void fixed_partition(const BlockRect& node, int range_size, std::vector<BlockRect>& out) {
  if (node.size == range_size) {
    out.push_back(node);
    return;
  }
  for (const BlockRect& q : quadrants(node)) fixed_partition(q, range_size, out);
}

inline std::vector<BlockRect> fixed_ranges(int w, int h, int range_size) {
  std::vector<BlockRect> out;
  for (int y = 0; y < h; y += kRootSize) {
    for (int x = 0; x < w; x += kRootSize) fixed_partition(BlockRect{x, y, kRootSize}, range_size, out);
  }
  return out;
}

}  // namespace detail

/// Exhaustive search over every 2B-sided domain on a lattice of `full_search_step`.
inline SearchResult encode_full_search(const GrayImage& image, int range_size,
                                       const EncoderConfig& config) {
  config.validate();
  const int level = level_for_range_size(range_size);
  const GrayImage padded = pad_to_multiple(image, kRootSize);
  const int side = 2 * range_size;
  if (padded.width() < side || padded.height() < side) {
    throw GeometryError("image smaller than one domain block");
  }
  std::vector<detail::DomainCandidate> pool;
  for (int y = 0; y + side <= padded.height(); y += config.full_search_step) {
    for (int x = 0; x + side <= padded.width(); x += config.full_search_step) {
      pool.push_back(detail::make_candidate(padded, BlockRect{x, y, side}));
    }
  }
  SearchResult result{detail::baseline_shell(image, padded, Mode::full_search), {}, {}, 0};
  for (const BlockRect& range : detail::fixed_ranges(padded.width(), padded.height(), range_size)) {
    const RealBlock r = extract_block(padded, range);
    const double r_mean = mean_of(r);
    detail::BestMatch best;
    for (const auto& cand : pool) detail::consider(r, r_mean, cand, best);
    result.candidates_evaluated += pool.size();
    result.offsets.push_back(detail::center_offset(range, best.payload.domain));
    result.rms.push_back(best.rms);
    result.code.leaves.push_back(LeafRecord{range, level, best.payload});
  }
  return result;
}

inline constexpr int kLocalRangeSize = 8;
inline constexpr int kLocalRadius = 4;

/// Local search: 8x8 ranges, the co-centered 16x16 domain shifted by up to 4 pixels per axis.
inline SearchResult encode_local_search(const GrayImage& image, const EncoderConfig& config) {
  config.validate();
  const int side = 2 * kLocalRangeSize;
  if (image.width() < side || image.height() < side) {
    throw GeometryError("local search needs an image of at least 16x16");
  }
  const GrayImage padded = pad_to_multiple(image, kRootSize);
  const int level = level_for_range_size(kLocalRangeSize);
  SearchResult result{detail::baseline_shell(image, padded, Mode::local_search), {}, {}, 0};
  for (const BlockRect& range :
       detail::fixed_ranges(padded.width(), padded.height(), kLocalRangeSize)) {
    const RealBlock r = extract_block(padded, range);
    const double r_mean = mean_of(r);
    const BlockRect center = co_domain_rect(range, padded.width(), padded.height());
    detail::BestMatch best;
    for (int dy = -kLocalRadius; dy <= kLocalRadius; ++dy) {
      for (int dx = -kLocalRadius; dx <= kLocalRadius; ++dx) {
        const BlockRect rect{std::clamp(center.x + dx, 0, padded.width() - side),
                             std::clamp(center.y + dy, 0, padded.height() - side), side};
        detail::consider(r, r_mean, detail::make_candidate(padded, rect), best);
        ++result.candidates_evaluated;
      }
    }
    result.offsets.push_back(detail::center_offset(range, best.payload.domain));
    result.rms.push_back(best.rms);
    result.code.leaves.push_back(LeafRecord{range, level, best.payload});
  }
  return result;
}

}  // namespace mns
