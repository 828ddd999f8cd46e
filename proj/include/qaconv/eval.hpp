#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "qaconv/score_matrix.hpp"
#include "qaconv/store.hpp"

namespace qaconv {

/// Single-query retrieval quality: cmc[r-1] is the fraction of valid queries
/// whose first correct match appears at rank <= r; map averages AP over the
/// valid queries.
struct EvalReport {
  std::vector<double> cmc;
  double map = 0.0;
  std::size_t n_valid_queries = 0;
};

/// Seconds from a frame index at the given rate.
inline double frames_to_seconds(std::int64_t frame, double fps) {
  if (!(fps > 0.0)) throw PreconditionError("frames_to_seconds: fps must be positive");
  return static_cast<double>(frame) / fps;
}

/// Single-query CMC and mAP under the standard cross-camera protocol:
/// per query, gallery entries with the same identity AND the same camera are
/// excluded; queries with no remaining positive are skipped. Higher score =
/// more similar (distance-stage matrices are negated first); ties break by
/// gallery index. AP averages precision at each positive, uninterpolated.
inline EvalReport evaluate(const SimilarityMatrix& scores,
                           const std::vector<MetaRecord>& query_meta,
                           const std::vector<MetaRecord>& gallery_meta, int r_max = 10) {
  if (!scores.well_formed()) throw PreconditionError("evaluate: malformed matrix");
  if (scores.n_query != query_meta.size() || scores.n_gallery != gallery_meta.size())
    throw PreconditionError("evaluate: metadata counts do not match the matrix");
  if (r_max < 1) throw PreconditionError("evaluate: r_max must be >= 1");
  const bool negate = scores.stage == ScoreStage::reranked_distance;

  EvalReport report;
  report.cmc.assign(r_max, 0.0);
  double ap_sum = 0.0;

  std::vector<int> order(gallery_meta.size());
  for (std::size_t i = 0; i < query_meta.size(); ++i) {
    order.clear();
    for (std::size_t j = 0; j < gallery_meta.size(); ++j) {
      const bool junk = gallery_meta[j].identity == query_meta[i].identity &&
                        gallery_meta[j].camera == query_meta[i].camera;
      if (!junk) order.push_back(static_cast<int>(j));
    }
    auto score = [&](int j) {
      const float v = scores.at(i, j);
      return negate ? -v : v;
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (score(a) != score(b)) return score(a) > score(b);
      return a < b;
    });

    int hits = 0;
    int first_rank = 0;
    double ap = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (gallery_meta[order[r]].identity == query_meta[i].identity) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(r + 1);
        if (first_rank == 0) first_rank = static_cast<int>(r) + 1;
      }
    }
    if (hits == 0) continue;  // no cross-camera positive: skip the query

    ++report.n_valid_queries;
    ap_sum += ap / hits;
    for (int r = first_rank; r <= r_max; ++r) report.cmc[r - 1] += 1.0;
  }

  if (report.n_valid_queries == 0)
    throw PreconditionError("evaluate: no valid queries (no cross-camera positives)");
  for (auto& v : report.cmc) v /= static_cast<double>(report.n_valid_queries);
  report.map = ap_sum / static_cast<double>(report.n_valid_queries);
  return report;
}

}  // namespace qaconv
