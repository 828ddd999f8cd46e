#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qaconv/errors.hpp"

namespace qaconv {

/// What the entries of a SimilarityMatrix mean at each pipeline stage.
enum class ScoreStage : std::uint32_t {
  raw = 0,
  probability = 1,        ///< sigmoid outputs, higher = more similar
  reranked_distance = 2,  ///< refined distances, lower = more similar
  tlifted = 3,            ///< temporally fused scores, higher = more similar
};

inline const char* to_string(ScoreStage s) {
  switch (s) {
    case ScoreStage::raw: return "raw";
    case ScoreStage::probability: return "probability";
    case ScoreStage::reranked_distance: return "reranked_distance";
    case ScoreStage::tlifted: return "tlifted";
  }
  return "unknown";
}

inline ScoreStage stage_from_string(const std::string& s) {
  if (s == "raw") return ScoreStage::raw;
  if (s == "probability") return ScoreStage::probability;
  if (s == "reranked_distance") return ScoreStage::reranked_distance;
  if (s == "tlifted") return ScoreStage::tlifted;
  throw FormatError("unknown score stage: " + s);
}

/// Dense query x gallery score table flowing through rerank -> tlift -> eval.
struct SimilarityMatrix {
  std::uint32_t n_query = 0;
  std::uint32_t n_gallery = 0;
  ScoreStage stage = ScoreStage::raw;
  std::vector<float> scores;  ///< row-major, n_query * n_gallery

  SimilarityMatrix() = default;
  SimilarityMatrix(std::uint32_t nq, std::uint32_t ng, ScoreStage st)
      : n_query(nq), n_gallery(ng), stage(st),
        scores(static_cast<std::size_t>(nq) * ng, 0.0f) {}

  float at(std::size_t i, std::size_t j) const { return scores[i * n_gallery + j]; }
  float& at(std::size_t i, std::size_t j) { return scores[i * n_gallery + j]; }

  bool well_formed() const {
    return scores.size() == static_cast<std::size_t>(n_query) * n_gallery;
  }
};

}  // namespace qaconv
