#pragma once

#include <cstddef>
#include <vector>

#include "qaconv/feature_map.hpp"

namespace qaconv {

/// Convolution kernels extracted from one query map: one kernel per query
/// location, in row-major location order (i = y*w + x). Weights are stored
/// kernel-major: index = ((i*d + c)*s + ky)*s + kx.
struct QueryKernel {
  int hw = 0;  ///< number of kernels (= h*w of the source map)
  int d = 0;   ///< input channels
  int s = 1;   ///< kernel size, odd
  std::vector<float> weights;

  float at(int i, int c, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(i) * d + c) * s + ky) * s + kx];
  }
};

/// Similarity values of every (query location, gallery location) pair:
/// values[(i*h_g + y)*w_g + x].
struct SimilarityMap {
  int hw_q = 0;
  int h_g = 0;
  int w_g = 0;
  std::vector<float> values;

  float at(int i, int y, int x) const {
    return values[(static_cast<std::size_t>(i) * h_g + y) * w_g + x];
  }
};

/// 2hw pooled similarities plus the argmax location of each entry.
/// First hw entries: per query location, best gallery location (argmax is the
/// flat gallery index). Second hw entries: per gallery location, best query
/// location (argmax is the flat query index). Ties go to the lowest flat index.
struct PooledSimilarity {
  std::vector<float> values;  ///< size 2*hw
  std::vector<int> argmax;    ///< size 2*hw
};

/// Extracts the s x s patch around every location of a (normalized) map.
/// Borders are zero padded by (s-1)/2 so that every location yields a kernel.
inline QueryKernel extract_query_kernel(const FeatureMap& fm, int s) {
  if (!fm.well_formed()) throw PreconditionError("extract_query_kernel: malformed map");
  if (s < 1 || s % 2 == 0) throw PreconditionError("extract_query_kernel: kernel size must be odd");
  if (s > fm.h || s > fm.w)
    throw PreconditionError("extract_query_kernel: kernel size exceeds spatial dims");

  QueryKernel k;
  k.hw = fm.h * fm.w;
  k.d = fm.d;
  k.s = s;
  k.weights.assign(static_cast<std::size_t>(k.hw) * k.d * s * s, 0.0f);
  const int pad = (s - 1) / 2;
  std::size_t o = 0;
  for (int y = 0; y < fm.h; ++y) {
    for (int x = 0; x < fm.w; ++x) {
      for (int c = 0; c < fm.d; ++c) {
        for (int ky = 0; ky < s; ++ky) {
          const int yy = y + ky - pad;
          for (int kx = 0; kx < s; ++kx, ++o) {
            const int xx = x + kx - pad;
            if (yy >= 0 && yy < fm.h && xx >= 0 && xx < fm.w)
              k.weights[o] = fm.at(c, yy, xx);
          }
        }
      }
    }
  }
  return k;
}

/// Correlates every kernel with every location of fm, zero padded so the
/// output spatial dims equal fm's. For s=1 on normalized inputs each value is
/// the cosine similarity of a (query location, gallery location) pair.
/// Accumulation runs in double; values are stored in single precision.
inline SimilarityMap adaptive_convolve(const QueryKernel& k, const FeatureMap& fm) {
  if (!fm.well_formed()) throw PreconditionError("adaptive_convolve: malformed map");
  if (k.d != fm.d) throw ProfileMismatch("adaptive_convolve: channel count mismatch");

  SimilarityMap sm;
  sm.hw_q = k.hw;
  sm.h_g = fm.h;
  sm.w_g = fm.w;
  sm.values.assign(static_cast<std::size_t>(k.hw) * fm.h * fm.w, 0.0f);
  const int pad = (k.s - 1) / 2;
  std::size_t o = 0;
  for (int i = 0; i < k.hw; ++i) {
    for (int y = 0; y < fm.h; ++y) {
      for (int x = 0; x < fm.w; ++x, ++o) {
        double acc = 0.0;
        for (int c = 0; c < fm.d; ++c) {
          for (int ky = 0; ky < k.s; ++ky) {
            const int yy = y + ky - pad;
            if (yy < 0 || yy >= fm.h) continue;
            for (int kx = 0; kx < k.s; ++kx) {
              const int xx = x + kx - pad;
              if (xx < 0 || xx >= fm.w) continue;
              acc += static_cast<double>(k.at(i, c, ky, kx)) * fm.at(c, yy, xx);
            }
          }
        }
        sm.values[o] = static_cast<float>(acc);
      }
    }
  }
  return sm;
}

/// Best local match per query location and, along the other axis, per gallery
/// location. Requires hw_q = h_g*w_g (all maps share one profile).
inline PooledSimilarity global_max_pool_bidirectional(const SimilarityMap& sm) {
  const int hw_g = sm.h_g * sm.w_g;
  if (sm.hw_q != hw_g)
    throw PreconditionError("global_max_pool_bidirectional: non-square similarity map");
  const int hw = sm.hw_q;

  PooledSimilarity out;
  out.values.assign(2 * static_cast<std::size_t>(hw), 0.0f);
  out.argmax.assign(2 * static_cast<std::size_t>(hw), 0);
  for (int i = 0; i < hw; ++i) {
    const float* row = sm.values.data() + static_cast<std::size_t>(i) * hw;
    float best = row[0];
    int arg = 0;
    for (int j = 1; j < hw; ++j) {
      if (row[j] > best) {
        best = row[j];
        arg = j;
      }
    }
    out.values[i] = best;
    out.argmax[i] = arg;
  }
  for (int j = 0; j < hw; ++j) {
    float best = sm.values[j];
    int arg = 0;
    for (int i = 1; i < hw; ++i) {
      const float v = sm.values[static_cast<std::size_t>(i) * hw + j];
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    out.values[hw + j] = best;
    out.argmax[hw + j] = arg;
  }
  return out;
}

}  // namespace qaconv
