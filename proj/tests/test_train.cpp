#include <catch2/catch_amalgamated.hpp>

#include "qaconv/train.hpp"
#include "test_util.hpp"

using namespace qaconv;

namespace {

// Classes with pairwise-orthogonal location vectors, lightly perturbed.
void make_orthogonal_set(int classes, int per_class, int d, int h, int w, double noise,
                         Rng& rng, std::vector<FeatureMap>& maps, std::vector<int>& labels) {
  for (int cls = 0; cls < classes; ++cls)
    for (int s = 0; s < per_class; ++s) {
      FeatureMap fm = testutil::basis_map(d, h, w, cls);
      for (auto& v : fm.data) v += static_cast<float>(rng.uniform(-noise, noise));
      maps.push_back(fm);
      labels.push_back(cls);
    }
}

}  // namespace

TEST_CASE("training separates a 2-class orthogonal set", "[train]") {
  Rng rng(71);
  std::vector<FeatureMap> maps;
  std::vector<int> labels;
  make_orthogonal_set(2, 4, 4, 2, 2, 0.05, rng, maps, labels);

  TrainConfig cfg;
  const TrainResult result = train_head(maps, labels, cfg, 123);
  REQUIRE(result.loss_trace.size() == 60);
  CHECK(result.final_train_accuracy == 1.0);
  CHECK(result.loss_trace.back().second < result.loss_trace.front().second);
  CHECK(result.loss_trace.back().second < 0.05);
  // Epoch indices are monotone.
  for (std::size_t t = 1; t < result.loss_trace.size(); ++t)
    CHECK(result.loss_trace[t].first == result.loss_trace[t - 1].first + 1);
}

TEST_CASE("gamma changes the training trajectory", "[train]") {
  Rng rng(72);
  std::vector<FeatureMap> maps;
  std::vector<int> labels;
  make_orthogonal_set(2, 4, 4, 2, 2, 0.05, rng, maps, labels);

  TrainConfig focal;
  focal.epochs = 5;
  TrainConfig plain = focal;
  plain.gamma = 0.0;
  const TrainResult a = train_head(maps, labels, focal, 9);
  const TrainResult b = train_head(maps, labels, plain, 9);
  bool differs = false;
  for (std::size_t t = 0; t < a.loss_trace.size(); ++t)
    if (a.loss_trace[t].second != b.loss_trace[t].second) differs = true;
  CHECK(differs);
}

TEST_CASE("training rejects a single class", "[train]") {
  Rng rng(73);
  std::vector<FeatureMap> maps;
  std::vector<int> labels;
  make_orthogonal_set(1, 4, 4, 2, 2, 0.05, rng, maps, labels);
  TrainConfig cfg;
  CHECK_THROWS_AS(train_head(maps, labels, cfg, 1), PreconditionError);
}

TEST_CASE("training is deterministic under a fixed seed", "[train]") {
  Rng rng(74);
  std::vector<FeatureMap> maps;
  std::vector<int> labels;
  make_orthogonal_set(3, 3, 4, 2, 2, 0.05, rng, maps, labels);
  TrainConfig cfg;
  cfg.epochs = 8;
  const TrainResult a = train_head(maps, labels, cfg, 77);
  const TrainResult b = train_head(maps, labels, cfg, 77);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (std::size_t t = 0; t < a.loss_trace.size(); ++t)
    CHECK(a.loss_trace[t].second == b.loss_trace[t].second);
  CHECK(a.params.fc_weight == b.params.fc_weight);
  CHECK(a.params.bn1_rmean == b.params.bn1_rmean);
  CHECK(a.final_train_accuracy == b.final_train_accuracy);
}

TEST_CASE("ema update mode trains as well", "[train]") {
  Rng rng(75);
  std::vector<FeatureMap> maps;
  std::vector<int> labels;
  make_orthogonal_set(2, 4, 4, 2, 2, 0.05, rng, maps, labels);
  TrainConfig cfg;
  cfg.update_mode = MemoryUpdateMode::ema;
  cfg.ema_decay = 0.5;
  cfg.epochs = 30;
  const TrainResult result = train_head(maps, labels, cfg, 5);
  CHECK(result.loss_trace.back().second < result.loss_trace.front().second);
}
