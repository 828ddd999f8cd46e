#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qaconv/errors.hpp"
#include "qaconv/rng.hpp"

namespace qaconv {

/// Three-channel image with values in [0,1], stored channel-major like
/// FeatureMap: index = (c*height + y)*width + x.
struct ImageTensor {
  static constexpr int channels = 3;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int h, int w)
      : height(h), width(w), data(static_cast<std::size_t>(channels) * h * w, 0.0f) {
    if (h <= 0 || w <= 0) throw PreconditionError("ImageTensor dims must be positive");
  }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  float at(int c, int y, int x) const { return data[index(c, y, x)]; }
  float& at(int c, int y, int x) { return data[index(c, y, x)]; }
};

/// Paints one axis-aligned all-white square into the image. The side is
/// uniform on [1, floor(max_frac*width)] (capped by the height so the square
/// stays inside), the position uniform over valid top-left corners. A single
/// sampling pass; no rejection loop.
inline ImageTensor random_occlude(const ImageTensor& img, std::uint64_t seed,
                                  double max_frac = 0.8) {
  if (img.width <= 0 || img.height <= 0)
    throw PreconditionError("random_occlude: degenerate image");
  if (!(max_frac > 0.0) || max_frac > 1.0)
    throw PreconditionError("random_occlude: max_frac must lie in (0,1]");

  Rng rng(seed);
  const int side_cap = std::max(1, std::min(static_cast<int>(max_frac * img.width), img.height));
  const int side = 1 + static_cast<int>(rng.below(static_cast<std::uint32_t>(side_cap)));
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint32_t>(img.width - side + 1)));
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint32_t>(img.height - side + 1)));

  ImageTensor out = img;
  for (int c = 0; c < ImageTensor::channels; ++c)
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x) out.at(c, y, x) = 1.0f;
  return out;
}

/// Mirrors the image across the vertical axis with probability p.
inline ImageTensor random_hflip(const ImageTensor& img, std::uint64_t seed, double p = 0.5) {
  if (p < 0.0 || p > 1.0) throw PreconditionError("random_hflip: p must lie in [0,1]");
  Rng rng(seed);
  if (rng.unit() >= p) return img;
  ImageTensor out = img;
  for (int c = 0; c < ImageTensor::channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
  return out;
}

}  // namespace qaconv
