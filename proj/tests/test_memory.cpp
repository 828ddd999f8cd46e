#include <catch2/catch_amalgamated.hpp>

#include "qaconv/class_memory.hpp"
#include "test_util.hpp"

using namespace qaconv;

TEST_CASE("direct memory update keeps the last occurrence of a class", "[memory]") {
  Rng rng(51);
  ClassMemory mem(8, 3, 2, 2);
  const FeatureMap a = testutil::random_map(3, 2, 2, rng);
  const FeatureMap b = testutil::random_map(3, 2, 2, rng);
  memory_update(mem, {a, b}, {5, 5});
  CHECK(mem.buffer[5].data == b.data);
}

TEST_CASE("memory update leaves absent classes untouched", "[memory]") {
  Rng rng(52);
  ClassMemory mem(5, 3, 2, 2);
  const FeatureMap seeded = testutil::random_map(3, 2, 2, rng);
  memory_update(mem, {seeded}, {0});
  const FeatureMap a = testutil::random_map(3, 2, 2, rng);
  const FeatureMap b = testutil::random_map(3, 2, 2, rng);
  memory_update(mem, {a, b}, {1, 3});
  CHECK(mem.buffer[0].data == seeded.data);
  for (float v : mem.buffer[2].data) CHECK(v == 0.0f);
  for (float v : mem.buffer[4].data) CHECK(v == 0.0f);
  CHECK(mem.buffer[1].data == a.data);
  CHECK(mem.buffer[3].data == b.data);
}

TEST_CASE("ema memory update blends toward the sample", "[memory]") {
  Rng rng(53);
  ClassMemory mem(4, 2, 2, 2);
  const FeatureMap v = testutil::random_map(2, 2, 2, rng);
  memory_update(mem, {v}, {2}, MemoryUpdateMode::ema, 0.5);
  for (std::size_t t = 0; t < v.data.size(); ++t)
    CHECK(mem.buffer[2].data[t] == Catch::Approx(0.5 * v.data[t]).margin(1e-7));
}

TEST_CASE("memory update rejects out-of-range labels", "[memory]") {
  Rng rng(54);
  ClassMemory mem(3, 2, 2, 2);
  const FeatureMap a = testutil::random_map(2, 2, 2, rng);
  CHECK_THROWS_AS(memory_update(mem, {a}, {3}), PreconditionError);
  CHECK_THROWS_AS(memory_update(mem, {a}, {-1}), PreconditionError);
}

TEST_CASE("direct memory update is idempotent for a fixed batch", "[memory]") {
  Rng rng(55);
  ClassMemory mem(6, 3, 2, 2);
  std::vector<FeatureMap> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(testutil::random_map(3, 2, 2, rng));
  const std::vector<int> labels = {1, 4, 1, 2};
  memory_update(mem, batch, labels);
  ClassMemory snapshot = mem;
  memory_update(mem, batch, labels);
  for (int c = 0; c < mem.classes(); ++c) CHECK(mem.buffer[c].data == snapshot.buffer[c].data);
}
