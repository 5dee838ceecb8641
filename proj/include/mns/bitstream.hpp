#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mns/encoder.hpp"

namespace mns {

// ".mns" container layout (all integers big-endian, bits MSB-first):
//
//   "MNS1" | flags:u8 | orig_w:u16 | orig_h:u16 | padded_w:u16 | padded_h:u16
//   then one record per leaf in DFS order:
//     [level-1 : 2]  omitted for the 2nd..4th leaf of a level-4 quartet when technique2 is set
//     [phase   : 1]  levels 1..3 in mns mode only
//     phase 1: o:8  s_code:3
//     phase 2: o_i:8  3 x (sign:1 magnitude:4|5)  s_bits:4
//   zero padding to the byte boundary.

inline constexpr std::array<std::uint8_t, 4> kStreamMagic{'M', 'N', 'S', '1'};
inline constexpr std::size_t kHeaderBytes = 13;
inline constexpr std::size_t kHeaderBits = kHeaderBytes * 8;

inline constexpr std::uint8_t kFlagMns = 0x01;
inline constexpr std::uint8_t kFlagTechnique2 = 0x02;

/// Raised by write_stream for codes that cannot be represented.
struct SerializationError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Raised by read_stream; `kind` distinguishes the failure.
struct StreamError : FormatError {
  enum class Kind { bad_magic, bad_header, truncated, depth_mismatch, trailing_data, negative_zero };

  StreamError(Kind k, const std::string& what) : FormatError(what), kind{k} {}
  Kind kind;
};

struct StreamHeader {
  std::uint8_t flags{0};
  std::uint16_t orig_w{0};
  std::uint16_t orig_h{0};
  std::uint16_t padded_w{0};
  std::uint16_t padded_h{0};
};

// Bit I/O ---------------------------------------------------------------------

class BitWriter {
 public:
  void put(std::uint32_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) put_bit(((value >> i) & 1U) != 0);
  }

  void put_bit(bool bit) {
    if (bit_count_ % 8 == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (bit_count_ % 8));
    ++bit_count_;
  }

  std::size_t bit_count() const noexcept { return bit_count_; }
  std::vector<std::uint8_t> take() && { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_count_{0};
};

/// Cursor over a byte span; never reads past the end.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_{bytes} {}

  std::uint32_t get(int bits) {
    if (pos_ + static_cast<std::size_t>(bits) > bytes_.size() * 8) {
      throw StreamError(StreamError::Kind::truncated, "truncated stream");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < bits; ++i, ++pos_) {
      v = (v << 1) | ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1U);
    }
    return v;
  }

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() * 8 - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_{0};
};

// Width table -----------------------------------------------------------------

inline constexpr int kLevelIdBits = 2;
inline constexpr int kPhaseBits = 1;
inline constexpr int kLuminanceBits = 8;
inline constexpr int kContrastBits = 3;

/// Bits spent on one leaf record.
inline std::size_t leaf_bit_width(const LeafRecord& leaf, Mode mode, bool technique2,
                                  bool first_of_quartet) {
  std::size_t bits = 0;
  if (!(technique2 && leaf.level == kLevels && !first_of_quartet)) bits += kLevelIdBits;
  if (mode == Mode::mns && leaf.level < kLevels) bits += kPhaseBits;
  if (leaf.is_phase2()) {
    bits += kLuminanceBits + 3 * static_cast<std::size_t>(delta_width(leaf.level)) + 4;
  } else {
    bits += kLuminanceBits + kContrastBits;
  }
  return bits;
}

/// Level-id cost of a code, with or without quartet sharing.
inline std::size_t level_id_bit_count(const QuadtreeCode& code, bool technique2) {
  const std::size_t level4 = tally(code).per_level[kLevels - 1];
  const std::size_t shallow = code.leaves.size() - level4;
  if (!technique2) return kLevelIdBits * code.leaves.size();
  return kLevelIdBits * (shallow + level4 / 4);
}

namespace detail {

// Walks the quadtree geometry implied by the leaf list, calling
// visit(leaf, first_of_quartet) in order. Throws on a leaf list that does
// not tile the padded image in DFS order.
template <typename Visit>
void walk_leaves(const QuadtreeCode& code, Visit&& visit) {
  std::size_t next = 0;
  auto node = [&](auto&& self, const BlockRect& rect, int level, bool first) -> void {
    if (next >= code.leaves.size()) throw SerializationError("leaf list ends before the tree is complete");
    const LeafRecord& leaf = code.leaves[next];
    if (leaf.rect == rect && leaf.level == level) {
      visit(leaf, first);
      ++next;
      return;
    }
    if (leaf.level <= level || level >= kLevels) {
      throw SerializationError("leaf " + std::to_string(next) + " does not follow DFS tiling");
    }
    const auto kids = quadrants(rect);
    for (std::size_t k = 0; k < 4; ++k) self(self, kids[k], level + 1, k == 0);
  };
  for (int y = 0; y < code.padded_h; y += kRootSize) {
    for (int x = 0; x < code.padded_w; x += kRootSize) node(node, BlockRect{x, y, kRootSize}, 1, true);
  }
  if (next != code.leaves.size()) throw SerializationError("leaf list overfills the image");
}

inline void check_header(const QuadtreeCode& code) {
  auto fits16 = [](int v) { return v > 0 && v <= 0xFFFF; };
  if (code.mode != Mode::no_search && code.mode != Mode::mns) {
    throw SerializationError(std::string("mode '") + mode_name(code.mode) + "' has no stream format");
  }
  if (!fits16(code.orig_w) || !fits16(code.orig_h) || !fits16(code.padded_w) ||
      !fits16(code.padded_h) || code.padded_w % kRootSize != 0 || code.padded_h % kRootSize != 0 ||
      code.padded_w < code.orig_w || code.padded_h < code.orig_h ||
      code.padded_w - code.orig_w >= kRootSize || code.padded_h - code.orig_h >= kRootSize) {
    throw SerializationError("invalid image dimensions in code header");
  }
}

inline void check_leaf(const LeafRecord& leaf, Mode mode) {
  if (const auto* p1 = std::get_if<Phase1>(&leaf.payload)) {
    if (p1->s_code.code < 0 || p1->s_code.code >= kContrastLevels) {
      throw SerializationError("contrast code out of range");
    }
    return;
  }
  const auto* p2 = std::get_if<Phase2>(&leaf.payload);
  if (p2 == nullptr) throw SerializationError("baseline leaves have no stream format");
  if (mode != Mode::mns || leaf.level >= kLevels) {
    throw SerializationError("phase-2 leaf outside mns levels 1..3");
  }
  for (int d : p2->deltas) {
    if (d < -delta_limit(leaf.level) || d > delta_limit(leaf.level)) {
      throw SerializationError("delta exceeds level width");
    }
  }
  for (auto b : p2->s_bits) {
    if (b > 1) throw SerializationError("contrast selection must be one bit");
  }
}

}  // namespace detail

/// Exact stream size in bits (header plus leaf records, before byte padding).
inline std::size_t stream_bit_count(const QuadtreeCode& code) {
  std::size_t bits = kHeaderBits;
  detail::walk_leaves(code, [&](const LeafRecord& leaf, bool first) {
    bits += leaf_bit_width(leaf, code.mode, code.technique2, first);
  });
  return bits;
}

// Writer ----------------------------------------------------------------------

inline std::vector<std::uint8_t> write_stream(const QuadtreeCode& code) {
  detail::check_header(code);
  BitWriter out;
  for (auto b : kStreamMagic) out.put(b, 8);
  std::uint8_t flags = 0;
  if (code.mode == Mode::mns) flags |= kFlagMns;
  if (code.technique2) flags |= kFlagTechnique2;
  out.put(flags, 8);
  for (int v : {code.orig_w, code.orig_h, code.padded_w, code.padded_h}) {
    out.put(static_cast<std::uint32_t>(v), 16);
  }

  detail::walk_leaves(code, [&](const LeafRecord& leaf, bool first) {
    detail::check_leaf(leaf, code.mode);
    if (!(code.technique2 && leaf.level == kLevels && !first)) {
      out.put(static_cast<std::uint32_t>(leaf.level - 1), kLevelIdBits);
    }
    if (code.mode == Mode::mns && leaf.level < kLevels) out.put_bit(leaf.is_phase2());
    if (const auto* p1 = std::get_if<Phase1>(&leaf.payload)) {
      out.put(p1->o_byte, kLuminanceBits);
      out.put(static_cast<std::uint32_t>(p1->s_code.code), kContrastBits);
    } else {
      const auto& p2 = std::get<Phase2>(leaf.payload);
      const int magnitude_bits = delta_width(leaf.level) - 1;
      out.put(p2.o_i_byte, kLuminanceBits);
      for (int d : p2.deltas) {
        out.put_bit(d < 0);
        out.put(static_cast<std::uint32_t>(d < 0 ? -d : d), magnitude_bits);
      }
      for (auto b : p2.s_bits) out.put_bit(b != 0);
    }
  });
  return std::move(out).take();
}

// Reader ----------------------------------------------------------------------

inline StreamHeader read_header(BitReader& in) {
  for (auto b : kStreamMagic) {
    if (in.get(8) != b) throw StreamError(StreamError::Kind::bad_magic, "bad magic (expected MNS1)");
  }
  StreamHeader h;
  h.flags = static_cast<std::uint8_t>(in.get(8));
  h.orig_w = static_cast<std::uint16_t>(in.get(16));
  h.orig_h = static_cast<std::uint16_t>(in.get(16));
  h.padded_w = static_cast<std::uint16_t>(in.get(16));
  h.padded_h = static_cast<std::uint16_t>(in.get(16));
  if ((h.flags & ~(kFlagMns | kFlagTechnique2)) != 0) {
    throw StreamError(StreamError::Kind::bad_header, "unknown header flags");
  }
  if (h.orig_w == 0 || h.orig_h == 0 || h.padded_w % kRootSize != 0 ||
      h.padded_h % kRootSize != 0 || h.padded_w < h.orig_w || h.padded_h < h.orig_h ||
      h.padded_w - h.orig_w >= kRootSize || h.padded_h - h.orig_h >= kRootSize) {
    throw StreamError(StreamError::Kind::bad_header, "inconsistent image dimensions");
  }
  return h;
}

inline QuadtreeCode read_stream(std::span<const std::uint8_t> bytes) {
  BitReader in{bytes};
  const StreamHeader h = read_header(in);
  QuadtreeCode code;
  code.orig_w = h.orig_w;
  code.orig_h = h.orig_h;
  code.padded_w = h.padded_w;
  code.padded_h = h.padded_h;
  code.mode = (h.flags & kFlagMns) != 0 ? Mode::mns : Mode::no_search;
  code.technique2 = (h.flags & kFlagTechnique2) != 0;

  // Level of the leaf whose id has been read but whose position is not reached yet.
  int pending = 0;

  auto read_payload = [&](const BlockRect& rect, int level) {
    LeafRecord leaf{rect, level, Phase1{}};
    const bool phase2 = code.mode == Mode::mns && level < kLevels && in.get(kPhaseBits) == 1;
    if (!phase2) {
      Phase1 p;
      p.o_byte = static_cast<std::uint8_t>(in.get(kLuminanceBits));
      p.s_code = ContrastCode{static_cast<int>(in.get(kContrastBits))};
      leaf.payload = p;
    } else {
      Phase2 p;
      const int magnitude_bits = delta_width(level) - 1;
      p.o_i_byte = static_cast<std::uint8_t>(in.get(kLuminanceBits));
      for (auto& d : p.deltas) {
        const bool negative = in.get(1) == 1;
        const int magnitude = static_cast<int>(in.get(magnitude_bits));
        if (negative && magnitude == 0) {
          throw StreamError(StreamError::Kind::negative_zero, "non-canonical -0 delta");
        }
        d = negative ? -magnitude : magnitude;
      }
      for (auto& b : p.s_bits) b = static_cast<std::uint8_t>(in.get(1));
      leaf.payload = p;
    }
    code.leaves.push_back(leaf);
  };

  auto node = [&](auto&& self, const BlockRect& rect, int level) -> void {
    if (pending == 0) pending = static_cast<int>(in.get(kLevelIdBits)) + 1;
    if (pending < level) {
      throw StreamError(StreamError::Kind::depth_mismatch,
                        "leaf depth " + std::to_string(pending) + " under a level-" +
                            std::to_string(level) + " node");
    }
    if (pending == level) {
      pending = 0;
      read_payload(rect, level);
      return;
    }
    const auto kids = quadrants(rect);
    for (std::size_t k = 0; k < 4; ++k) {
      // Quartet siblings of a level-4 leaf carry no id under technique 2.
      if (k > 0 && level + 1 == kLevels && code.technique2) pending = kLevels;
      self(self, kids[k], level + 1);
    }
  };

  for (int y = 0; y < code.padded_h; y += kRootSize) {
    for (int x = 0; x < code.padded_w; x += kRootSize) node(node, BlockRect{x, y, kRootSize}, 1);
  }
  if (in.remaining() >= 8) {
    throw StreamError(StreamError::Kind::trailing_data, "trailing data after the last leaf");
  }
  return code;
}

}  // namespace mns
