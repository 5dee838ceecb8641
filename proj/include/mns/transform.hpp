#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mns/image.hpp"

namespace mns {

/// Mean-removed block map: out = s * (D - mean(D)) + o.
struct AffineParams {
  double s{0.0};
  double o{0.0};
};

/// 3-bit contrast code; bin k covers [-1 + k/4, -1 + (k+1)/4).
struct ContrastCode {
  int code{4};

  friend bool operator==(const ContrastCode&, const ContrastCode&) = default;
};

inline constexpr int kContrastLevels = 8;

inline double mean_of(const RealBlock& b) {
  return std::accumulate(b.values.begin(), b.values.end(), 0.0) / static_cast<double>(b.count());
}

inline void require_same_shape(const RealBlock& r, const RealBlock& d) {
  if (r.size != d.size || r.count() == 0) {
    throw std::invalid_argument("block size mismatch: " + std::to_string(r.size) + " vs " +
                                std::to_string(d.size));
  }
}

/// Closed-form least squares for (s, o). `s` is not clamped here.
inline AffineParams fit_affine(const RealBlock& range, const RealBlock& domain) {
  require_same_shape(range, domain);
  const double r_mean = mean_of(range);
  const double d_mean = mean_of(domain);
  double cross = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < range.count(); ++i) {
    const double dd = domain.values[i] - d_mean;
    cross += dd * (range.values[i] - r_mean);
    var += dd * dd;
  }
  if (var <= 1e-12) return {0.0, r_mean};
  return {cross / var, r_mean};
}

inline ContrastCode quantize_contrast(double s) {
  if (std::isnan(s)) s = 0.0;
  s = std::clamp(s, -1.0, 1.0);
  const int k = static_cast<int>(std::floor((s + 1.0) * 4.0));
  return ContrastCode{std::min(k, kContrastLevels - 1)};
}

inline double dequantize_contrast(ContrastCode c) {
  if (c.code < 0 || c.code >= kContrastLevels) {
    throw std::invalid_argument("contrast code out of range: " + std::to_string(c.code));
  }
  return -0.875 + 0.25 * c.code;
}

/// Applies the map and clamps to [0, 255].
inline RealBlock apply_map(const RealBlock& domain, double s, double o) {
  const double d_mean = mean_of(domain);
  RealBlock out{domain.size};
  for (std::size_t i = 0; i < domain.count(); ++i) {
    out.values[i] = std::clamp(s * (domain.values[i] - d_mean) + o, 0.0, 255.0);
  }
  return out;
}

/// RMS residual of the unclamped map against `range`.
inline double rms_error(const RealBlock& range, const RealBlock& domain, double s, double o) {
  require_same_shape(range, domain);
  const double d_mean = mean_of(domain);
  double sq = 0.0;
  for (std::size_t i = 0; i < range.count(); ++i) {
    const double e = range.values[i] - (s * (domain.values[i] - d_mean) + o);
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(range.count()));
}

}  // namespace mns
