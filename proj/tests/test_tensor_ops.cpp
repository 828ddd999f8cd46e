#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "qaconv/tensor_ops.hpp"
#include "test_util.hpp"

using namespace qaconv;

TEST_CASE("l2_normalize_channels on a 3-4-5 vector", "[tensor]") {
  FeatureMap fm(2, 1, 1);
  fm.at(0, 0, 0) = 3.0f;
  fm.at(1, 0, 0) = 4.0f;
  const FeatureMap out = l2_normalize_channels(fm);
  CHECK(out.at(0, 0, 0) == Catch::Approx(0.6).margin(1e-7));
  CHECK(out.at(1, 0, 0) == Catch::Approx(0.8).margin(1e-7));
}

TEST_CASE("l2_normalize_channels keeps an all-zero map at zero", "[tensor]") {
  FeatureMap fm(3, 2, 2);
  const FeatureMap out = l2_normalize_channels(fm);
  for (float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("l2_normalize_channels yields unit location norms", "[tensor]") {
  Rng rng(11);
  const FeatureMap fm = testutil::random_map(4, 2, 2, rng, /*normalized=*/false);
  const FeatureMap out = l2_normalize_channels(fm);
  for (double n : oracle::location_norms(out)) CHECK(n == Catch::Approx(1.0).margin(1e-5));
}

TEST_CASE("extract_query_kernel s=1 copies location vectors in order", "[tensor]") {
  FeatureMap fm(2, 2, 2);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) fm.at(c, y, x) = static_cast<float>(10 * c + 2 * y + x);
  const QueryKernel k = extract_query_kernel(fm, 1);
  REQUIRE(k.hw == 4);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      const int i = y * 2 + x;
      for (int c = 0; c < 2; ++c) CHECK(k.at(i, c, 0, 0) == fm.at(c, y, x));
    }
}

TEST_CASE("extract_query_kernel s=3 matches naive zero-padded patches", "[tensor]") {
  Rng rng(12);
  const FeatureMap fm = testutil::random_map(3, 3, 3, rng);
  const QueryKernel k = extract_query_kernel(fm, 3);
  for (int y = 0; y < fm.h; ++y)
    for (int x = 0; x < fm.w; ++x) {
      const auto patch = oracle::naive_patch(fm, y, x, 3);
      const int i = y * fm.w + x;
      std::size_t t = 0;
      for (int c = 0; c < fm.d; ++c)
        for (int ky = 0; ky < 3; ++ky)
          for (int kx = 0; kx < 3; ++kx, ++t)
            CHECK(k.at(i, c, ky, kx) == Catch::Approx(patch[t]).margin(1e-7));
    }
}

TEST_CASE("extract_query_kernel rejects bad kernel sizes", "[tensor]") {
  Rng rng(13);
  const FeatureMap fm = testutil::random_map(2, 2, 2, rng);
  CHECK_THROWS_AS(extract_query_kernel(fm, 2), PreconditionError);
  CHECK_THROWS_AS(extract_query_kernel(fm, 3), PreconditionError);  // exceeds h=w=2
}

TEST_CASE("adaptive_convolve basis-vector cases", "[tensor]") {
  const FeatureMap e1 = testutil::basis_map(3, 2, 2, 0);
  const FeatureMap e2 = testutil::basis_map(3, 2, 2, 1);
  const QueryKernel k = extract_query_kernel(e1, 1);
  for (float v : adaptive_convolve(k, e1).values) CHECK(v == Catch::Approx(1.0));
  for (float v : adaptive_convolve(k, e2).values) CHECK(v == Catch::Approx(0.0));
}

TEST_CASE("adaptive_convolve matches the naive loop oracle", "[tensor]") {
  Rng rng(14);
  for (auto [h, w, s] : {std::tuple{3, 2, 1}, std::tuple{3, 3, 3}}) {
    const FeatureMap q = testutil::random_map(4, h, w, rng);
    const FeatureMap g = testutil::random_map(4, h, w, rng);
    const SimilarityMap sm = adaptive_convolve(extract_query_kernel(q, s), g);
    const auto table = oracle::naive_similarity_table(q, g, s);
    for (int i = 0; i < sm.hw_q; ++i)
      for (int y = 0; y < sm.h_g; ++y)
        for (int x = 0; x < sm.w_g; ++x)
          CHECK(sm.at(i, y, x) == Catch::Approx(table[i][y * sm.w_g + x]).margin(1e-5));
  }
}

TEST_CASE("adaptive_convolve rejects channel mismatch", "[tensor]") {
  Rng rng(15);
  const FeatureMap q = testutil::random_map(4, 2, 2, rng);
  const FeatureMap g = testutil::random_map(3, 2, 2, rng);
  CHECK_THROWS_AS(adaptive_convolve(extract_query_kernel(q, 1), g), ProfileMismatch);
}

TEST_CASE("global_max_pool_bidirectional on an identity map", "[tensor]") {
  SimilarityMap sm;
  sm.hw_q = 4;
  sm.h_g = 2;
  sm.w_g = 2;
  sm.values.assign(16, 0.0f);
  for (int i = 0; i < 4; ++i) sm.values[i * 4 + i] = 1.0f;
  const PooledSimilarity out = global_max_pool_bidirectional(sm);
  for (int i = 0; i < 8; ++i) {
    CHECK(out.values[i] == 1.0f);
    CHECK(out.argmax[i] == i % 4);
  }
}

TEST_CASE("global_max_pool_bidirectional ties go to the lowest flat index", "[tensor]") {
  SimilarityMap sm;
  sm.hw_q = 4;
  sm.h_g = 2;
  sm.w_g = 2;
  sm.values.assign(16, 0.3f);
  const PooledSimilarity out = global_max_pool_bidirectional(sm);
  for (int i = 0; i < 8; ++i) {
    CHECK(out.values[i] == 0.3f);
    CHECK(out.argmax[i] == 0);
  }
}

TEST_CASE("global_max_pool_bidirectional matches a max-scan oracle", "[tensor]") {
  Rng rng(16);
  SimilarityMap sm;
  sm.hw_q = 4;
  sm.h_g = 2;
  sm.w_g = 2;
  sm.values.resize(16);
  for (auto& v : sm.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::vector<std::vector<double>> table(4, std::vector<double>(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) table[i][j] = sm.values[i * 4 + j];
  const auto [vals, args] = oracle::naive_bidirectional_max(table);
  const PooledSimilarity out = global_max_pool_bidirectional(sm);
  for (int i = 0; i < 8; ++i) {
    CHECK(out.values[i] == Catch::Approx(vals[i]).margin(1e-7));
    CHECK(out.argmax[i] == args[i]);
  }
}

TEST_CASE("composed pipeline equals the quadruple-loop oracle", "[tensor]") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(8));
    const int h = 1 + static_cast<int>(rng.below(4));
    const int w = 1 + static_cast<int>(rng.below(4));
    const FeatureMap q = testutil::random_map(d, h, w, rng);
    const FeatureMap g = testutil::random_map(d, h, w, rng);
    const int max_s = std::min(h, w);
    for (int s = 1; s <= max_s; s += 2) {
      const PooledSimilarity got =
          global_max_pool_bidirectional(adaptive_convolve(extract_query_kernel(q, s), g));
      const auto [vals, args] = oracle::naive_raw_similarity(q, g, s);
      REQUIRE(got.values.size() == vals.size());
      for (std::size_t t = 0; t < vals.size(); ++t) {
        CHECK(got.values[t] == Catch::Approx(vals[t]).margin(1e-5));
        CHECK(got.argmax[t] == args[t]);
      }
    }
  }
}

TEST_CASE("self match pools to all ones for s=1", "[tensor]") {
  Rng rng(18);
  for (int rep = 0; rep < 10; ++rep) {
    const FeatureMap a = testutil::random_map(4, 3, 3, rng);
    const PooledSimilarity out =
        global_max_pool_bidirectional(adaptive_convolve(extract_query_kernel(a, 1), a));
    for (float v : out.values) CHECK(v == Catch::Approx(1.0).margin(1e-5));
  }
}

TEST_CASE("pooled values stay within [-1, 1] for s=1 normalized inputs", "[tensor]") {
  Rng rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    const FeatureMap a = testutil::random_map(5, 2, 4, rng);
    const FeatureMap b = testutil::random_map(5, 2, 4, rng);
    const PooledSimilarity out =
        global_max_pool_bidirectional(adaptive_convolve(extract_query_kernel(a, 1), b));
    for (float v : out.values) {
      CHECK(v >= -1.0f - 1e-6f);
      CHECK(v <= 1.0f + 1e-6f);
    }
  }
}
