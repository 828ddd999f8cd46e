#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qaconv/errors.hpp"

namespace qaconv {

/// One image's final d x h x w feature tensor, the unit of all matching.
/// Values are stored channel-major: index = (c*h + y)*w + x.
struct FeatureMap {
  int d = 0;  ///< channel count
  int h = 0;  ///< height in cells
  int w = 0;  ///< width in cells
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int d_, int h_, int w_)
      : d(d_), h(h_), w(w_), data(static_cast<std::size_t>(d_) * h_ * w_, 0.0f) {
    if (d_ <= 0 || h_ <= 0 || w_ <= 0)
      throw PreconditionError("FeatureMap dims must be positive");
  }

  int spatial_size() const { return h * w; }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * h + y) * w + x;
  }
  float at(int c, int y, int x) const { return data[index(c, y, x)]; }
  float& at(int c, int y, int x) { return data[index(c, y, x)]; }

  bool same_profile(const FeatureMap& o) const { return d == o.d && h == o.h && w == o.w; }

  bool well_formed() const {
    return d > 0 && h > 0 && w > 0 &&
           data.size() == static_cast<std::size_t>(d) * h * w;
  }
};

/// Divides each location's channel vector by max(its Euclidean norm, eps).
/// Zero vectors stay (near) zero through the eps guard instead of producing NaN.
inline FeatureMap l2_normalize_channels(const FeatureMap& fm, double eps = 1e-12) {
  if (!fm.well_formed()) throw PreconditionError("l2_normalize_channels: malformed map");
  if (!(eps > 0.0)) throw PreconditionError("l2_normalize_channels: eps must be positive");
  FeatureMap out = fm;
  const int hw = fm.h * fm.w;
  for (int loc = 0; loc < hw; ++loc) {
    double sq = 0.0;
    for (int c = 0; c < fm.d; ++c) {
      const double v = fm.data[static_cast<std::size_t>(c) * hw + loc];
      sq += v * v;
    }
    const double inv = 1.0 / std::max(std::sqrt(sq), eps);
    for (int c = 0; c < fm.d; ++c) {
      const std::size_t i = static_cast<std::size_t>(c) * hw + loc;
      out.data[i] = static_cast<float>(fm.data[i] * inv);
    }
  }
  return out;
}

}  // namespace qaconv
