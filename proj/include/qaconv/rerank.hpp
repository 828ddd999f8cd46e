#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "qaconv/score_matrix.hpp"

namespace qaconv {

struct RerankParams {
  int k1 = 20;          ///< reciprocal neighborhood size
  int k2 = 6;           ///< local query expansion size
  double lambda = 0.3;  ///< mix weight of the original distance

  void validate() const {
    if (k1 < 1 || k2 < 1) throw PreconditionError("RerankParams: k1 and k2 must be >= 1");
    if (k2 > k1) throw PreconditionError("RerankParams: k2 must not exceed k1");
    if (lambda < 0.0 || lambda > 1.0)
      throw PreconditionError("RerankParams: lambda must lie in [0,1]");
  }
};

namespace detail {

/// Row-major square distance matrix over the combined query+gallery set.
struct CombinedDistances {
  std::size_t n = 0;
  std::vector<float> d;
  float at(std::size_t i, std::size_t j) const { return d[i * n + j]; }
  float& at(std::size_t i, std::size_t j) { return d[i * n + j]; }
};

inline std::vector<int> row_rank(const CombinedDistances& dist, std::size_t row) {
  std::vector<int> order(dist.n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dist.at(row, a) < dist.at(row, b);
  });
  return order;
}

/// k-reciprocal neighbors of `item`: the k nearest whose own k-nearest list
/// contains `item` back.
inline std::vector<int> k_reciprocal_neighbors(const std::vector<std::vector<int>>& ranks,
                                               int item, int k) {
  std::vector<int> out;
  const auto& forward = ranks[item];
  const int take = std::min<int>(k + 1, static_cast<int>(forward.size()));
  for (int t = 0; t < take; ++t) {
    const int cand = forward[t];
    const auto& back = ranks[cand];
    const int back_take = std::min<int>(k + 1, static_cast<int>(back.size()));
    for (int u = 0; u < back_take; ++u)
      if (back[u] == item) {
        out.push_back(cand);
        break;
      }
  }
  return out;
}

}  // namespace detail

/// k-reciprocal encoding re-ranking. Probability-stage inputs are converted
/// to distances d = 1 - p; reciprocal sets are expanded with the half-k rule,
/// encoded as Gaussian-weighted vectors, locally expanded over the k2 nearest
/// neighbors, and compared by Jaccard distance. The result mixes
/// lambda * d_original + (1 - lambda) * d_jaccard, so lambda = 1 returns the
/// original qg distances exactly.
inline SimilarityMatrix k_reciprocal_rerank(const SimilarityMatrix& qg,
                                            const SimilarityMatrix& qq,
                                            const SimilarityMatrix& gg,
                                            const RerankParams& params) {
  params.validate();
  if (!qg.well_formed() || !qq.well_formed() || !gg.well_formed())
    throw PreconditionError("k_reciprocal_rerank: malformed matrix");
  if (qq.n_query != qg.n_query || qq.n_gallery != qg.n_query ||
      gg.n_query != qg.n_gallery || gg.n_gallery != qg.n_gallery)
    throw PreconditionError("k_reciprocal_rerank: qq/gg shapes do not match qg");

  auto to_distance = [](const SimilarityMatrix& m, std::size_t i, std::size_t j) {
    if (m.stage == ScoreStage::probability) return 1.0f - m.at(i, j);
    if (m.stage == ScoreStage::reranked_distance) return m.at(i, j);
    throw PreconditionError("k_reciprocal_rerank: input must carry probabilities or distances");
  };

  const std::size_t nq = qg.n_query;
  const std::size_t ng = qg.n_gallery;
  const std::size_t n = nq + ng;

  detail::CombinedDistances dist;
  dist.n = n;
  dist.d.assign(n * n, 0.0f);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t j = 0; j < nq; ++j) dist.at(i, j) = to_distance(qq, i, j);
    for (std::size_t j = 0; j < ng; ++j) {
      const float d = to_distance(qg, i, j);
      dist.at(i, nq + j) = d;
      dist.at(nq + j, i) = d;
    }
  }
  for (std::size_t i = 0; i < ng; ++i)
    for (std::size_t j = 0; j < ng; ++j) dist.at(nq + i, nq + j) = to_distance(gg, i, j);

  // Neighborhood sizes cannot exceed the combined set.
  const int k1 = std::min<int>(params.k1, static_cast<int>(n) - 1);
  const int k2 = std::min<int>(params.k2, static_cast<int>(n));

  std::vector<std::vector<int>> ranks(n);
  for (std::size_t i = 0; i < n; ++i) ranks[i] = detail::row_rank(dist, i);

  // Gaussian-weighted k-reciprocal encoding per item.
  std::vector<std::vector<float>> encoded(n, std::vector<float>(n, 0.0f));
  const int half_k = static_cast<int>(std::lround(k1 / 2.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> expansion = detail::k_reciprocal_neighbors(ranks, static_cast<int>(i), k1);
    const std::vector<int> base = expansion;
    for (int cand : base) {
      const std::vector<int> cand_set = detail::k_reciprocal_neighbors(ranks, cand, half_k);
      std::size_t overlap = 0;
      for (int v : cand_set)
        if (std::find(base.begin(), base.end(), v) != base.end()) ++overlap;
      if (3 * overlap > 2 * cand_set.size())
        expansion.insert(expansion.end(), cand_set.begin(), cand_set.end());
    }
    std::sort(expansion.begin(), expansion.end());
    expansion.erase(std::unique(expansion.begin(), expansion.end()), expansion.end());

    double total = 0.0;
    for (int j : expansion) total += std::exp(-static_cast<double>(dist.at(i, j)));
    for (int j : expansion)
      encoded[i][j] = static_cast<float>(std::exp(-static_cast<double>(dist.at(i, j))) / total);
  }

  // Local query expansion: average the vectors of the k2 nearest neighbors.
  if (k2 > 1) {
    std::vector<std::vector<float>> expanded(n, std::vector<float>(n, 0.0f));
    for (std::size_t i = 0; i < n; ++i) {
      for (int t = 0; t < k2; ++t) {
        const int nbr = ranks[i][t];
        for (std::size_t j = 0; j < n; ++j) expanded[i][j] += encoded[nbr][j];
      }
      for (std::size_t j = 0; j < n; ++j) expanded[i][j] /= static_cast<float>(k2);
    }
    encoded.swap(expanded);
  }

  // Jaccard distance between query and gallery encodings. Vectors are
  // L1-normalized, so sum(max) = 2 - sum(min).
  SimilarityMatrix out(qg.n_query, qg.n_gallery, ScoreStage::reranked_distance);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t j = 0; j < ng; ++j) {
      double min_sum = 0.0;
      const auto& a = encoded[i];
      const auto& b = encoded[nq + j];
      for (std::size_t t = 0; t < n; ++t) min_sum += std::min(a[t], b[t]);
      const double jaccard = 1.0 - min_sum / (2.0 - min_sum);
      out.at(i, j) = static_cast<float>(params.lambda * to_distance(qg, i, j) +
                                        (1.0 - params.lambda) * jaccard);
    }
  }
  return out;
}

}  // namespace qaconv
