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

#ifndef CFPROBE_RETRIEVAL_HPP_
#define CFPROBE_RETRIEVAL_HPP_

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cfprobe/caption_engine.hpp"
#include "cfprobe/embedding_store.hpp"
#include "cfprobe/linalg.hpp"

namespace cfprobe {

struct RankedItem {
  std::string asset_id;
  double score = 0.0;

  friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

// Top-K images for one neutral query. Scores are non-increasing and equal
// scores are ordered by asset id.
struct RetrievalResult {
  std::string subject;
  std::string query_embedding_id;
  std::size_t k = 0;
  std::vector<RankedItem> ranked;
};

// Per-prefix neutral prompt embeddings averaged into one subject query.
template <typename Scalar>
Vector<Scalar> average_text_embedding(std::span<const Vector<Scalar>> per_prefix) {
  return normalized_mean(per_prefix);
}

// Exact scan over the given pool rows.
template <typename Derived, typename Scalar>
RetrievalResult top_k(const Eigen::MatrixBase<Derived>& query,
                      const BasicEmbeddingStore<Scalar>& pool,
                      std::span<const std::size_t> rows, std::size_t k) {
  if (k == 0) throw ArgumentError("K must be >= 1");
  if (static_cast<std::size_t>(query.size()) != pool.dimension()) {
    throw DimensionMismatch("query dimension " + std::to_string(query.size()) +
                            " does not match pool dimension " +
                            std::to_string(pool.dimension()));
  }
  std::vector<std::size_t> candidates(rows.begin(), rows.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) throw ArgumentError("retrieval pool is empty");
  if (candidates.back() >= pool.size()) throw ArgumentError("pool row out of range");

  const Vector<Scalar> q = query.template cast<Scalar>();
  std::vector<double> scores(pool.size());
  for (std::size_t row : candidates) {
    scores[row] = static_cast<double>(pool.vector(row).dot(q));
  }
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return pool.id(a) < pool.id(b);
                    });
  RetrievalResult result;
  result.k = k;
  result.ranked.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.ranked.push_back(RankedItem{pool.id(candidates[i]), scores[candidates[i]]});
  }
  return result;
}

template <typename Derived, typename Scalar>
RetrievalResult top_k(const Eigen::MatrixBase<Derived>& query,
                      const BasicEmbeddingStore<Scalar>& pool, std::size_t k) {
  std::vector<std::size_t> rows(pool.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return top_k(query, pool, rows, k);
}

// K = |A| x |B|.
std::size_t default_k(std::size_t cardinality_a, std::size_t cardinality_b);
std::size_t default_k(const Configuration& config, CategoryPair pair);

// Header "subject,rank,assetId,score"; ranks start at 1.
std::string retrieval_dump_csv(std::span<const RetrievalResult> results);

}  // namespace cfprobe

#endif  // CFPROBE_RETRIEVAL_HPP_
