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

#include "cfprobe/csv.hpp"

namespace cfprobe {

std::size_t default_k(std::size_t cardinality_a, std::size_t cardinality_b) {
  return cardinality_a * cardinality_b;
}

std::size_t default_k(const Configuration& config, CategoryPair pair) {
  return default_k(config.cardinality(pair.first), config.cardinality(pair.second));
}

std::string retrieval_dump_csv(std::span<const RetrievalResult> results) {
  csv::Writer w({"subject", "rank", "assetId", "score"});
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      w.row({r.subject, std::to_string(i + 1), r.ranked[i].asset_id,
             csv::format_double(r.ranked[i].score)});
    }
  }
  return w.str();
}

}  // namespace cfprobe
