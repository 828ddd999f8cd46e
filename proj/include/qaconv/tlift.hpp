#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <vector>

#include "qaconv/score_matrix.hpp"
#include "qaconv/store.hpp"

namespace qaconv {

/// Model-free temporal lifting parameters. Defaults follow the reference
/// configuration: tau=100s nearby threshold, sigma=200s kernel sensitivity,
/// K=10 pivots, alpha=0.2 regularizer.
struct TLiftParams {
  double tau = 100.0;
  double sigma = 200.0;
  int pivots = 10;
  double alpha = 0.2;
  /// Apply the fusion to gallery entries sharing the query's camera too.
  /// When false those entries keep their appearance score unchanged.
  bool fuse_query_camera = true;

  void validate() const {
    if (!(tau > 0.0)) throw PreconditionError("TLiftParams: tau must be positive");
    if (!(sigma > 0.0)) throw PreconditionError("TLiftParams: sigma must be positive");
    if (pivots < 1) throw PreconditionError("TLiftParams: pivot count must be >= 1");
    if (alpha < 0.0) throw PreconditionError("TLiftParams: alpha must be nonnegative");
  }
};

/// Indices of all records in the query's camera within tau seconds of the
/// query. Always contains the query itself.
inline std::vector<std::size_t> nearby_set(std::size_t query_index,
                                           const std::vector<MetaRecord>& query_meta,
                                           double tau) {
  if (query_index >= query_meta.size())
    throw PreconditionError("nearby_set: query index out of range");
  const MetaRecord& q = query_meta[query_index];
  if (!q.has_time) throw PreconditionError("nearby_set: query has no timestamp");
  std::vector<std::size_t> r;
  for (std::size_t i = 0; i < query_meta.size(); ++i) {
    const MetaRecord& m = query_meta[i];
    if (m.camera != q.camera) continue;
    if (!m.has_time) throw PreconditionError("nearby_set: record has no timestamp");
    if (std::abs(m.time - q.time) < tau) r.push_back(i);
  }
  return r;
}

/// Overall top-K retrievals of the nearby set within one gallery camera:
/// all (nearby member, camera entry) scores are pooled and the K highest
/// scoring distinct entries win, ties by lower gallery index.
/// `camera_entries` are gallery indices of one camera; `scores` is a full
/// query x gallery matrix with higher = more similar.
inline std::vector<std::size_t> pivot_set(const std::vector<std::size_t>& nearby,
                                          const std::vector<std::size_t>& camera_entries,
                                          const SimilarityMatrix& scores, int k) {
  if (k < 1) throw PreconditionError("pivot_set: K must be >= 1");
  if (nearby.empty()) throw PreconditionError("pivot_set: empty nearby set");
  std::vector<std::pair<float, std::size_t>> pooled;  // (best score over R, gallery index)
  pooled.reserve(camera_entries.size());
  for (std::size_t j : camera_entries) {
    float best = -std::numeric_limits<float>::infinity();
    for (std::size_t r : nearby) best = std::max(best, scores.at(r, j));
    pooled.emplace_back(best, j);
  }
  std::sort(pooled.begin(), pooled.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> p;
  for (std::size_t t = 0; t < pooled.size() && t < static_cast<std::size_t>(k); ++t)
    p.push_back(pooled[t].second);
  return p;
}

/// Kernel density estimate over within-camera time differences:
///   p_t = (1/|P|) * sum_B exp(-dT^2 / sigma^2).
inline double temporal_probability(const std::vector<double>& pivot_times, double x_time,
                                   double sigma) {
  if (pivot_times.empty()) throw PreconditionError("temporal_probability: empty pivot set");
  if (!(sigma > 0.0)) throw PreconditionError("temporal_probability: sigma must be positive");
  double sum = 0.0;
  for (double t : pivot_times) {
    const double dt = t - x_time;
    sum += std::exp(-(dt * dt) / (sigma * sigma));
  }
  return sum / static_cast<double>(pivot_times.size());
}

namespace detail {

/// Appearance probabilities in [0,1] from either accepted input stage.
/// Re-ranked distances are mapped per query row: 1 - (d-min)/(max-min+eps).
inline std::vector<float> appearance_probabilities(const SimilarityMatrix& m) {
  if (m.stage == ScoreStage::probability) return m.scores;
  if (m.stage != ScoreStage::reranked_distance)
    throw PreconditionError("tlift_fuse: input must be probability or reranked_distance stage");
  std::vector<float> out(m.scores.size());
  for (std::size_t i = 0; i < m.n_query; ++i) {
    float lo = m.at(i, 0), hi = m.at(i, 0);
    for (std::size_t j = 1; j < m.n_gallery; ++j) {
      lo = std::min(lo, m.at(i, j));
      hi = std::max(hi, m.at(i, j));
    }
    const double span = static_cast<double>(hi) - lo + 1e-12;
    for (std::size_t j = 0; j < m.n_gallery; ++j)
      out[i * m.n_gallery + j] = static_cast<float>(1.0 - (m.at(i, j) - lo) / span);
  }
  return out;
}

}  // namespace detail

/// Multiplicative fusion of appearance scores with the pivot-based temporal
/// probability: fused = (p_t + alpha) * p_a, built per query and per gallery
/// camera. Requires timestamps on every record.
inline SimilarityMatrix tlift_fuse(const SimilarityMatrix& appearance,
                                   const std::vector<MetaRecord>& query_meta,
                                   const std::vector<MetaRecord>& gallery_meta,
                                   const TLiftParams& params) {
  params.validate();
  if (!appearance.well_formed()) throw PreconditionError("tlift_fuse: malformed matrix");
  if (appearance.n_query != query_meta.size() || appearance.n_gallery != gallery_meta.size())
    throw PreconditionError("tlift_fuse: metadata counts do not match the matrix");
  for (const auto& m : query_meta)
    if (!m.has_time)
      throw PreconditionError("tlift_fuse: query records lack timestamps; "
                              "temporal lifting needs time records");
  for (const auto& m : gallery_meta)
    if (!m.has_time)
      throw PreconditionError("tlift_fuse: gallery records lack timestamps; "
                              "temporal lifting needs time records");

  const std::vector<float> p_a = detail::appearance_probabilities(appearance);
  SimilarityMatrix base = appearance;
  base.scores = p_a;
  base.stage = ScoreStage::probability;

  std::map<int, std::vector<std::size_t>> cameras;
  for (std::size_t j = 0; j < gallery_meta.size(); ++j)
    cameras[gallery_meta[j].camera].push_back(j);

  SimilarityMatrix out(appearance.n_query, appearance.n_gallery, ScoreStage::tlifted);
  for (std::size_t i = 0; i < query_meta.size(); ++i) {
    const std::vector<std::size_t> nearby = nearby_set(i, query_meta, params.tau);
    for (const auto& [camera, entries] : cameras) {
      if (!params.fuse_query_camera && camera == query_meta[i].camera) {
        for (std::size_t j : entries) out.at(i, j) = base.at(i, j);
        continue;
      }
      const std::vector<std::size_t> pivots = pivot_set(nearby, entries, base, params.pivots);
      std::vector<double> pivot_times;
      pivot_times.reserve(pivots.size());
      for (std::size_t p : pivots) pivot_times.push_back(gallery_meta[p].time);
      for (std::size_t j : entries) {
        const double p_t = pivot_times.empty()
                               ? 0.0
                               : temporal_probability(pivot_times, gallery_meta[j].time,
                                                      params.sigma);
        out.at(i, j) = static_cast<float>((p_t + params.alpha) * base.at(i, j));
      }
    }
  }
  return out;
}

}  // namespace qaconv
