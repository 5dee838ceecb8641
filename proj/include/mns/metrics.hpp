#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mns/bitstream.hpp"
#include "mns/decoder.hpp"
#include "mns/encoder.hpp"
#include "mns/image.hpp"

namespace mns {

// Fidelity ---------------------------------------------------------------------

inline void require_same_dims(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("image dimensions differ");
  }
}

inline double mse(const GrayImage& a, const GrayImage& b) {
  require_same_dims(a, b);
  if (a.empty()) return 0.0;
  double sum = 0.0;
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(pa.size());
}

inline constexpr double kPeak = 255.0;

/// PSNR in dB against an 8-bit peak; +infinity when the images are identical.
inline double psnr(const GrayImage& a, const GrayImage& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeak * kPeak / m);
}

inline std::string format_db(double db) {
  if (std::isinf(db)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", db);
  return buf;
}

// Offset locality ----------------------------------------------------------------

struct OffsetHistogram {
  std::map<std::pair<int, int>, std::size_t> joint;  // (dx, dy) -> count
  std::map<int, std::size_t> x;
  std::map<int, std::size_t> y;
  std::size_t total{0};
};

inline OffsetHistogram offset_histogram(const std::vector<OffsetSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("offset_histogram: no samples");
  OffsetHistogram h;
  for (const auto& s : samples) {
    ++h.joint[{s.dx, s.dy}];
    ++h.x[s.dx];
    ++h.y[s.dy];
    ++h.total;
  }
  return h;
}

/// All offsets attaining the maximum count of a marginal.
inline std::vector<int> marginal_modes(const std::map<int, std::size_t>& marginal) {
  std::size_t best = 0;
  for (const auto& [offset, count] : marginal) best = std::max(best, count);
  std::vector<int> modes;
  for (const auto& [offset, count] : marginal) {
    if (count == best) modes.push_back(offset);
  }
  return modes;
}

/// Per-axis table: axis,offset,count.
inline std::string histogram_marginals_csv(const OffsetHistogram& h) {
  std::string out = "axis,offset,count\n";
  for (const auto& [o, c] : h.x) out += "x," + std::to_string(o) + "," + std::to_string(c) + "\n";
  for (const auto& [o, c] : h.y) out += "y," + std::to_string(o) + "," + std::to_string(c) + "\n";
  return out;
}

/// Joint table: dx,dy,count.
inline std::string histogram_joint_csv(const OffsetHistogram& h) {
  std::string out = "dx,dy,count\n";
  for (const auto& [k, c] : h.joint) {
    out += std::to_string(k.first) + "," + std::to_string(k.second) + "," + std::to_string(c) + "\n";
  }
  return out;
}

// Rate-distortion sweep -------------------------------------------------------------

struct RdPoint {
  Mode mode{Mode::mns};
  std::array<double, 3> thresholds{};
  bool technique2{true};
  std::size_t bits{0};          // size of the written stream, byte padding included
  std::size_t level_id_bits{0};
  double bpp{0.0};
  double psnr{0.0};
  double encode_time{0.0};  // seconds, encode_quadtree only
  std::array<std::size_t, kLevels> leaf_counts{};
  std::size_t phase2_count{0};
};

struct SweepGrid {
  std::vector<Mode> modes{Mode::no_search, Mode::mns};
  std::vector<std::array<double, 3>> thresholds{{8.0, 8.0, 8.0}};
  std::vector<bool> technique2{true};
};

inline RdPoint measure_point(const GrayImage& image, const EncoderConfig& config,
                             const DecodeConfig& dcfg = {}) {
  const auto start = std::chrono::steady_clock::now();
  const QuadtreeCode code = encode_quadtree(image, config);
  const auto stop = std::chrono::steady_clock::now();
  const auto bytes = write_stream(code);
  const GrayImage decoded = decode(read_stream(bytes), dcfg);
  const CodeTally t = tally(code);

  RdPoint p;
  p.mode = config.mode;
  p.thresholds = config.thresholds;
  p.technique2 = config.technique2;
  p.bits = bytes.size() * 8;
  p.level_id_bits = level_id_bit_count(code, config.technique2);
  p.bpp = static_cast<double>(p.bits) / static_cast<double>(image.area());
  p.psnr = psnr(image, decoded);
  p.encode_time = std::chrono::duration<double>(stop - start).count();
  p.leaf_counts = t.per_level;
  p.phase2_count = t.phase2;
  return p;
}

/// Rows ordered by mode, then threshold vector, then technique-2 flag.
inline std::vector<RdPoint> rd_sweep(const GrayImage& image, const SweepGrid& grid,
                                     const EncoderConfig& base = {}, const DecodeConfig& dcfg = {}) {
  if (grid.modes.empty() || grid.thresholds.empty() || grid.technique2.empty()) {
    throw std::invalid_argument("rd_sweep: empty grid");
  }
  std::vector<RdPoint> rows;
  for (Mode mode : grid.modes) {
    for (const auto& e : grid.thresholds) {
      for (bool t2 : grid.technique2) {
        EncoderConfig cfg = base;
        cfg.mode = mode;
        cfg.thresholds = e;
        cfg.technique2 = t2;
        try {
          rows.push_back(measure_point(image, cfg, dcfg));
        } catch (const std::exception& ex) {
          throw std::runtime_error(std::string("rd_sweep [mode=") + mode_name(mode) +
                                   " E=" + std::to_string(e[0]) + "," + std::to_string(e[1]) +
                                   "," + std::to_string(e[2]) + " t2=" + (t2 ? "on" : "off") +
                                   "]: " + ex.what());
        }
      }
    }
  }
  return rows;
}

inline std::string rd_csv_header() {
  return "mode,E1,E2,E3,t2,bits,bpp,psnr,encode_s,leaves_l1,leaves_l2,leaves_l3,leaves_l4,phase2\n";
}

/// One CSV row. With `with_timing` false the encode_s column is written as 0
/// so the output is byte-reproducible.
inline std::string rd_csv_row(const RdPoint& p, bool with_timing = true) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%g,%g,%g,%d,%zu,%.6f,%s,%.6f,%zu,%zu,%zu,%zu,%zu\n",
                mode_name(p.mode), p.thresholds[0], p.thresholds[1], p.thresholds[2],
                p.technique2 ? 1 : 0, p.bits, p.bpp, format_db(p.psnr).c_str(),
                with_timing ? p.encode_time : 0.0, p.leaf_counts[0], p.leaf_counts[1],
                p.leaf_counts[2], p.leaf_counts[3], p.phase2_count);
  return buf;
}

inline std::string rd_csv(const std::vector<RdPoint>& rows, bool with_timing = true) {
  std::string out = rd_csv_header();
  for (const auto& p : rows) out += rd_csv_row(p, with_timing);
  return out;
}

}  // namespace mns
