/*
 * Copyright 2026 The cfprobe Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cfprobe/retrieval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cfprobe/errors.hpp"

namespace cfprobe {
namespace {

using Vec = Vector<double>;

EmbeddingStore random_store(std::mt19937_64& rng, std::size_t n, int d, bool duplicates) {
  std::normal_distribution<double> normal;
  std::vector<EmbeddingRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    Vec v(d);
    if (duplicates && i > 0 && i % 4 == 0) {
      v = records[i - 1].vector;
    } else {
      for (auto& x : v) x = normal(rng);
    }
    // Ids deliberately not in row order.
    records.push_back({"id" + std::to_string((i * 7919) % 1000003), EmbeddingKind::image, v});
  }
  return EmbeddingStore::from_records<double>(EmbeddingKind::image, d, records);
}

// Full sort of every row by (score desc, id asc), truncated to k.
std::vector<std::string> oracle_ranking(const Vec& q, const EmbeddingStore& pool, std::size_t k) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t r = 0; r < pool.size(); ++r) all.emplace_back(pool.vector(r).dot(q), pool.id(r));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::string> ids_of(const RetrievalResult& r) {
  std::vector<std::string> out;
  for (const auto& item : r.ranked) out.push_back(item.asset_id);
  return out;
}

TEST(AverageTextEmbedding, Examples) {
  Vec a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  const std::vector<Vec> same = {a, a, a};
  EXPECT_NEAR((average_text_embedding<double>(same) - a).norm(), 0.0, 1e-15);
  const std::vector<Vec> two = {a, b};
  const auto m = average_text_embedding<double>(two);
  EXPECT_NEAR(m(0), 0.70710678118654752, 1e-15);
  EXPECT_NEAR(m(1), 0.70710678118654752, 1e-15);
  const std::vector<Vec> cancel = {a, Vec(-a)};
  EXPECT_THROW(average_text_embedding<double>(cancel), DegenerateInputError);
  EXPECT_THROW(average_text_embedding<double>(std::span<const Vec>{}), ArgumentError);
}

TEST(TopK, SingleItemPool) {
  std::vector<EmbeddingRecord> records = {mock_embed("only", 4, EmbeddingKind::image)};
  records[0].id = "only";
  const auto pool = EmbeddingStore::from_records<double>(EmbeddingKind::image, 4, records);
  for (std::size_t k : {1u, 5u, 50u}) {
    const auto r = top_k(mock_embed("q", 4).vector, pool, k);
    ASSERT_EQ(r.ranked.size(), 1u);
    EXPECT_EQ(r.ranked[0].asset_id, "only");
    EXPECT_EQ(r.k, k);
  }
}

TEST(TopK, ExactMatchRanksFirst) {
  std::vector<EmbeddingRecord> records;
  for (int i = 0; i < 5; ++i) {
    Vec v = Vec::Zero(5);
    v(i) = 1;
    records.push_back({"e" + std::to_string(i), EmbeddingKind::image, v});
  }
  const auto pool = EmbeddingStore::from_records<double>(EmbeddingKind::image, 5, records);
  const auto r = top_k(records[3].vector, pool, 5);
  EXPECT_EQ(r.ranked[0].asset_id, "e3");
  EXPECT_DOUBLE_EQ(r.ranked[0].score, 1.0);
  // The remaining zero scores are ordered by id.
  EXPECT_EQ(ids_of(r), (std::vector<std::string>{"e3", "e0", "e1", "e2", "e4"}));
}

TEST(TopK, Errors) {
  std::mt19937_64 rng(1);
  const auto pool = random_store(rng, 5, 3, false);
  EXPECT_THROW(top_k(Vec::Ones(3), pool, 0), ArgumentError);
  EXPECT_THROW(top_k(Vec::Ones(4), pool, 2), DimensionMismatch);
  const std::vector<std::size_t> none;
  EXPECT_THROW(top_k(Vec::Ones(3), pool, none, 2), ArgumentError);
}

TEST(TopK, MatchesFullSortOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 100;
    const int d = 2 + static_cast<int>(rng() % 10);
    const auto pool = random_store(rng, n, d, trial % 2 == 0);
    Vec q = mock_embed("q" + std::to_string(trial), d).vector;
    if (trial % 5 == 0) q = pool.vector(rng() % n);
    const std::size_t k = 1 + rng() % 120;
    EXPECT_EQ(ids_of(top_k(q, pool, k)), oracle_ranking(q, pool, k)) << trial;
  }
}

TEST(TopK, WholePoolWhenKExceedsSize) {
  std::mt19937_64 rng(3);
  const auto pool = random_store(rng, 20, 4, true);
  const Vec q = mock_embed("q", 4).vector;
  const auto r = top_k(q, pool, 100);
  ASSERT_EQ(r.ranked.size(), 20u);
  for (std::size_t i = 1; i < r.ranked.size(); ++i) {
    const auto& a = r.ranked[i - 1];
    const auto& b = r.ranked[i];
    EXPECT_TRUE(a.score > b.score || (a.score == b.score && a.asset_id < b.asset_id));
  }
}

TEST(TopK, SubsetRowsAndDeterminism) {
  std::mt19937_64 rng(4);
  const auto pool = random_store(rng, 50, 6, false);
  const Vec q = mock_embed("q", 6).vector;
  const std::vector<std::size_t> rows = {40, 3, 3, 17, 22, 9};
  const auto r = top_k(q, pool, rows, 3);
  ASSERT_EQ(r.ranked.size(), 3u);
  for (const auto& item : r.ranked) {
    const auto row = *pool.find(item.asset_id);
    EXPECT_NE(std::find(rows.begin(), rows.end(), row), rows.end());
  }
  EXPECT_EQ(top_k(q, pool, rows, 3).ranked, r.ranked);
}

// Positive scaling of every vector is a strictly increasing transform of
// scores under a fixed query.
TEST(TopK, InvariantUnderMonotoneScoreTransform) {
  std::mt19937_64 rng(6);
  const auto pool = random_store(rng, 60, 5, false);
  const Vec q = mock_embed("q", 5).vector;
  const auto base = top_k(q, pool, 20);
  const auto scaled = top_k(Vec(3.5 * q), pool, 20);
  EXPECT_EQ(ids_of(base), ids_of(scaled));
}

TEST(DefaultK, CardinalityProducts) {
  EXPECT_EQ(default_k(6, 2), 12u);
  EXPECT_EQ(default_k(14, 6), 84u);
  EXPECT_EQ(default_k(4, 2), 8u);
}

TEST(RetrievalDump, Layout) {
  RetrievalResult r{"nurse", "q", 2, {{"a", 0.5}, {"b", 0.25}}};
  const std::vector<RetrievalResult> all = {r};
  EXPECT_EQ(retrieval_dump_csv(all), "subject,rank,assetId,score\nnurse,1,a,0.5\nnurse,2,b,0.25\n");
}

}  // namespace
}  // namespace cfprobe
