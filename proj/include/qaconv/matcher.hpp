#pragma once

#include <cstddef>
#include <limits>
#include <thread>
#include <vector>

#include "qaconv/head.hpp"
#include "qaconv/score_matrix.hpp"
#include "qaconv/store.hpp"
#include "qaconv/tensor_ops.hpp"

namespace qaconv {

namespace detail {

/// Channel vectors of a map laid out contiguously: hw rows of d floats.
inline std::vector<float> location_major(const FeatureMap& fm) {
  const int hw = fm.h * fm.w;
  std::vector<float> out(static_cast<std::size_t>(hw) * fm.d);
  for (int c = 0; c < fm.d; ++c)
    for (int loc = 0; loc < hw; ++loc)
      out[static_cast<std::size_t>(loc) * fm.d + c] =
          fm.data[static_cast<std::size_t>(c) * hw + loc];
  return out;
}

/// Double-precision dot of two float vectors, four independent partial sums.
/// The summation structure is fixed and symmetric in (a, b), which makes the
/// half-swap property of pooled vectors exact.
inline double dot_f32_f64(const float* a, const float* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += static_cast<double>(a[i]) * b[i];
    s1 += static_cast<double>(a[i + 1]) * b[i + 1];
    s2 += static_cast<double>(a[i + 2]) * b[i + 2];
    s3 += static_cast<double>(a[i + 3]) * b[i + 3];
  }
  for (; i < n; ++i) s0 += static_cast<double>(a[i]) * b[i];
  return (s0 + s1) + (s2 + s3);
}

/// s=1 pooled similarity over location-major buffers. One compiled instance
/// serves both the pairwise and the batched path, so their outputs are
/// bitwise identical. `scratch` must hold at least hw floats.
/// out_arg may be null when the caller only needs values.
[[gnu::noinline]] inline void pooled_pair_s1(const float* q, const float* g, int hw, int d,
                                             float* out_vals, int* out_arg, float* scratch) {
  float* col_best = scratch;
  std::vector<int> col_arg_store;
  int* col_arg = nullptr;
  if (out_arg) {
    col_arg_store.assign(hw, 0);
    col_arg = col_arg_store.data();
  }
  for (int j = 0; j < hw; ++j) col_best[j] = -std::numeric_limits<float>::infinity();

  for (int i = 0; i < hw; ++i) {
    const float* qv = q + static_cast<std::size_t>(i) * d;
    float row_best = -std::numeric_limits<float>::infinity();
    int row_arg = 0;
    for (int j = 0; j < hw; ++j) {
      const float v =
          static_cast<float>(dot_f32_f64(qv, g + static_cast<std::size_t>(j) * d, d));
      if (v > row_best) {
        row_best = v;
        row_arg = j;
      }
      if (v > col_best[j]) {
        col_best[j] = v;
        if (col_arg) col_arg[j] = i;
      }
    }
    out_vals[i] = row_best;
    if (out_arg) out_arg[i] = row_arg;
  }
  for (int j = 0; j < hw; ++j) out_vals[hw + j] = col_best[j];
  if (out_arg)
    for (int j = 0; j < hw; ++j) out_arg[hw + j] = col_arg[j];
}

}  // namespace detail

/// Raw QAConv similarity of one pair: kernels built from the query map,
/// correlated against the gallery map, max pooled in both directions.
/// Inputs must share the profile and be channel normalized already.
inline PooledSimilarity qaconv_raw_similarity(const FeatureMap& query, const FeatureMap& gallery,
                                              int s = 1) {
  if (!query.same_profile(gallery))
    throw ProfileMismatch("qaconv_raw_similarity: feature map profiles differ");
  if (s == 1) {
    const int hw = query.spatial_size();
    const auto qv = detail::location_major(query);
    const auto gv = detail::location_major(gallery);
    PooledSimilarity out;
    out.values.assign(2 * static_cast<std::size_t>(hw), 0.0f);
    out.argmax.assign(2 * static_cast<std::size_t>(hw), 0);
    std::vector<float> scratch(hw);
    detail::pooled_pair_s1(qv.data(), gv.data(), hw, query.d, out.values.data(),
                           out.argmax.data(), scratch.data());
    return out;
  }
  return global_max_pool_bidirectional(adaptive_convolve(extract_query_kernel(query, s), gallery));
}

/// Clamps a probability into the strictly-open unit interval representable in
/// single precision before it enters a SimilarityMatrix.
inline float probability_to_score(double p) {
  const float f = static_cast<float>(p);
  return std::min(std::max(f, 1e-7f), 1.0f - 1e-7f);
}

/// One cell of match_batch: raw similarity through the eval-mode head.
inline float match_pair_probability(const FeatureMap& query, const FeatureMap& gallery,
                                    const HeadParams& params, int s = 1) {
  const PooledSimilarity raw = qaconv_raw_similarity(query, gallery, s);
  return probability_to_score(head_forward_eval(raw.values.data(), params));
}

/// Query x gallery probability matrix. Every (i, j) cell is computed
/// independently with no cross-pair reductions, so the result is bitwise
/// identical for any worker count.
inline SimilarityMatrix match_batch(const GalleryStore& queries, const GalleryStore& gallery,
                                    const HeadParams& params, int workers = 1, int s = 1) {
  queries.check("match_batch queries");
  gallery.check("match_batch gallery");
  if (!queries.maps.front().same_profile(gallery.maps.front()))
    throw ProfileMismatch("match_batch: query/gallery profiles differ");
  if (params.mode != HeadParams::Mode::eval)
    throw PreconditionError("match_batch: params must be in eval mode");
  const int hw = queries.maps.front().spatial_size();
  if (params.feat != 2 * hw)
    throw ProfileMismatch("match_batch: head expects feature size " +
                          std::to_string(params.feat) + ", profile gives " +
                          std::to_string(2 * hw));

  const std::size_t nq = queries.size();
  const std::size_t ng = gallery.size();
  SimilarityMatrix out(static_cast<std::uint32_t>(nq), static_cast<std::uint32_t>(ng),
                       ScoreStage::probability);

  if (s == 1) {
    const int d = queries.maps.front().d;
    std::vector<std::vector<float>> qviews(nq), gviews(ng);
    for (std::size_t i = 0; i < nq; ++i) qviews[i] = detail::location_major(queries.maps[i]);
    for (std::size_t j = 0; j < ng; ++j) gviews[j] = detail::location_major(gallery.maps[j]);

    auto run_rows = [&](std::size_t row_begin, std::size_t row_end) {
      std::vector<float> vals(2 * static_cast<std::size_t>(hw));
      std::vector<float> scratch(hw);
      for (std::size_t i = row_begin; i < row_end; ++i) {
        for (std::size_t j = 0; j < ng; ++j) {
          detail::pooled_pair_s1(qviews[i].data(), gviews[j].data(), hw, d, vals.data(),
                                 nullptr, scratch.data());
          out.at(i, j) = probability_to_score(head_forward_eval(vals.data(), params));
        }
      }
    };

    std::size_t nthreads = workers > 0 ? static_cast<std::size_t>(workers) : 1;
    nthreads = std::min(nthreads, nq);
    if (nthreads <= 1) {
      run_rows(0, nq);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(nthreads);
      const std::size_t chunk = (nq + nthreads - 1) / nthreads;
      for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(lo + chunk, nq);
        if (lo >= hi) break;
        pool.emplace_back(run_rows, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
    return out;
  }

  // General kernel sizes go through the composed path pair by pair.
  auto run_rows = [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t i = row_begin; i < row_end; ++i)
      for (std::size_t j = 0; j < ng; ++j)
        out.at(i, j) = match_pair_probability(queries.maps[i], gallery.maps[j], params, s);
  };
  std::size_t nthreads = workers > 0 ? static_cast<std::size_t>(workers) : 1;
  nthreads = std::min(nthreads, nq);
  if (nthreads <= 1) {
    run_rows(0, nq);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (nq + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(lo + chunk, nq);
      if (lo >= hi) break;
      pool.emplace_back(run_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

/// One local correspondence surfaced by interpretation.
struct Correspondence {
  int query_y = 0, query_x = 0;
  int gallery_y = 0, gallery_x = 0;
  float score = 0.0f;
};

struct CorrespondenceSet {
  std::vector<Correspondence> items;
  float probability = 0.0f;  ///< pair probability from the head
};

/// Reliable local correspondences of one pair: every pooled entry whose local
/// cosine score exceeds the threshold, from both pooling directions (query
/// side first). A mutual best match therefore appears once per direction.
inline CorrespondenceSet interpret(const FeatureMap& query, const FeatureMap& gallery,
                                   const HeadParams& params, double threshold = 0.5, int s = 1) {
  if (threshold < 0.0 || threshold > 1.0)
    throw PreconditionError("interpret: threshold must lie in [0,1]");
  const PooledSimilarity raw = qaconv_raw_similarity(query, gallery, s);
  const int hw = query.spatial_size();
  const int w = query.w;

  CorrespondenceSet out;
  out.probability = probability_to_score(head_forward_eval(raw.values.data(), params));
  for (int i = 0; i < hw; ++i) {
    if (raw.values[i] > threshold) {
      const int j = raw.argmax[i];
      out.items.push_back({i / w, i % w, j / w, j % w, raw.values[i]});
    }
  }
  for (int j = 0; j < hw; ++j) {
    if (raw.values[hw + j] > threshold) {
      const int i = raw.argmax[hw + j];
      out.items.push_back({i / w, i % w, j / w, j % w, raw.values[hw + j]});
    }
  }
  return out;
}

}  // namespace qaconv
