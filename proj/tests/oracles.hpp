#pragma once

// Test-only reference implementations. These stay deliberately naive (plain
// loops straight from the definitions) and independent of the library's
// computation paths so they can serve as oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "qaconv/feature_map.hpp"
#include "qaconv/score_matrix.hpp"
#include "qaconv/store.hpp"
#include "qaconv/tensor_ops.hpp"

namespace oracle {

/// Per-location channel norms recomputed with a plain loop.
inline std::vector<double> location_norms(const qaconv::FeatureMap& fm) {
  std::vector<double> norms;
  for (int y = 0; y < fm.h; ++y)
    for (int x = 0; x < fm.w; ++x) {
      double sq = 0.0;
      for (int c = 0; c < fm.d; ++c) sq += static_cast<double>(fm.at(c, y, x)) * fm.at(c, y, x);
      norms.push_back(std::sqrt(sq));
    }
  return norms;
}

/// Zero-padded s x s patch at (y, x), channel-major then row-major offsets.
inline std::vector<double> naive_patch(const qaconv::FeatureMap& fm, int y, int x, int s) {
  const int pad = (s - 1) / 2;
  std::vector<double> patch;
  for (int c = 0; c < fm.d; ++c)
    for (int ky = 0; ky < s; ++ky)
      for (int kx = 0; kx < s; ++kx) {
        const int yy = y + ky - pad;
        const int xx = x + kx - pad;
        const bool in = yy >= 0 && yy < fm.h && xx >= 0 && xx < fm.w;
        patch.push_back(in ? fm.at(c, yy, xx) : 0.0);
      }
  return patch;
}

/// Full (query location, gallery location) similarity table via the naive
/// quadruple loop: zero-padded patch dot products in double precision.
inline std::vector<std::vector<double>> naive_similarity_table(const qaconv::FeatureMap& q,
                                                               const qaconv::FeatureMap& g,
                                                               int s) {
  const int hw = q.h * q.w;
  std::vector<std::vector<double>> table(hw, std::vector<double>(g.h * g.w, 0.0));
  for (int qy = 0; qy < q.h; ++qy)
    for (int qx = 0; qx < q.w; ++qx) {
      const auto qp = naive_patch(q, qy, qx, s);
      for (int gy = 0; gy < g.h; ++gy)
        for (int gx = 0; gx < g.w; ++gx) {
          const auto gp = naive_patch(g, gy, gx, s);
          double acc = 0.0;
          for (std::size_t t = 0; t < qp.size(); ++t) acc += qp[t] * gp[t];
          table[qy * q.w + qx][gy * g.w + gx] = acc;
        }
    }
  return table;
}

/// Brute-force bidirectional max scan with lowest-index tie breaking.
/// Returns 2hw values followed by 2hw argmax indices.
inline std::pair<std::vector<double>, std::vector<int>> naive_bidirectional_max(
    const std::vector<std::vector<double>>& table) {
  const int hw_q = static_cast<int>(table.size());
  const int hw_g = static_cast<int>(table[0].size());
  std::vector<double> vals(hw_q + hw_g);
  std::vector<int> args(hw_q + hw_g);
  for (int i = 0; i < hw_q; ++i) {
    int arg = 0;
    for (int j = 1; j < hw_g; ++j)
      if (table[i][j] > table[i][arg]) arg = j;
    vals[i] = table[i][arg];
    args[i] = arg;
  }
  for (int j = 0; j < hw_g; ++j) {
    int arg = 0;
    for (int i = 1; i < hw_q; ++i)
      if (table[i][j] > table[arg][j]) arg = i;
    vals[hw_q + j] = table[arg][j];
    args[hw_q + j] = arg;
  }
  return {vals, args};
}

/// End-to-end naive raw similarity: quadruple loop + max scan.
inline std::pair<std::vector<double>, std::vector<int>> naive_raw_similarity(
    const qaconv::FeatureMap& q, const qaconv::FeatureMap& g, int s) {
  return naive_bidirectional_max(naive_similarity_table(q, g, s));
}

/// Average precision and first-match rank from the definition: full sort by
/// (score desc, index asc), precision at each positive, no interpolation.
struct RankedQuery {
  double ap = 0.0;
  int first_match_rank = 0;  // 1-based; 0 when no positive exists
  int n_positive = 0;
};

inline RankedQuery naive_ranked_query(const std::vector<double>& scores,
                                      const std::vector<bool>& positive,
                                      const std::vector<bool>& excluded) {
  std::vector<int> order;
  for (int j = 0; j < static_cast<int>(scores.size()); ++j)
    if (!excluded[j]) order.push_back(j);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  RankedQuery out;
  int hits = 0;
  double ap_sum = 0.0;
  for (int r = 0; r < static_cast<int>(order.size()); ++r) {
    if (positive[order[r]]) {
      ++hits;
      ap_sum += static_cast<double>(hits) / (r + 1);
      if (out.first_match_rank == 0) out.first_match_rank = r + 1;
    }
  }
  out.n_positive = hits;
  if (hits > 0) out.ap = ap_sum / hits;
  return out;
}

}  // namespace oracle
