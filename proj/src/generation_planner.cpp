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

#include "cfprobe/generation_planner.hpp"

#include <charconv>

#include "cfprobe/csv.hpp"
#include "cfprobe/errors.hpp"
#include "cfprobe/hashing.hpp"

namespace cfprobe {
namespace {

constexpr std::uint64_t kMasterTag = 0x6366702d6a6f6273ULL;  // "cfp-jobs"
constexpr std::uint64_t kSeedStream = 1;
constexpr std::uint64_t kShareStream = 2;

}  // namespace

GenerationJob draw_job(std::uint64_t master_seed, std::string_view set_id,
                       std::uint32_t sample_index) {
  std::uint64_t key = splitmix64(master_seed ^ kMasterTag);
  key = splitmix64(key ^ fnv1a64(set_id));
  key = splitmix64(key ^ static_cast<std::uint64_t>(sample_index));
  GenerationJob job;
  job.set_id = std::string(set_id);
  job.sample_index = sample_index;
  job.seed = splitmix64(key ^ kSeedStream);
  job.attention_share =
      kMinAttentionShare + (kMaxAttentionShare - kMinAttentionShare) *
                               unit_interval(splitmix64(key ^ kShareStream));
  return job;
}

std::vector<GenerationJob> plan_jobs(std::span<const std::string> set_ids,
                                     std::int64_t samples_per_set,
                                     std::uint64_t master_seed) {
  if (samples_per_set <= 0) {
    throw ArgumentError("samples per set must be >= 1, got " +
                        std::to_string(samples_per_set));
  }
  std::vector<GenerationJob> jobs;
  jobs.reserve(set_ids.size() * static_cast<std::size_t>(samples_per_set));
  for (const auto& id : set_ids) {
    for (std::int64_t i = 0; i < samples_per_set; ++i) {
      jobs.push_back(draw_job(master_seed, id, static_cast<std::uint32_t>(i)));
    }
  }
  return jobs;
}

std::vector<GenerationJob> plan_jobs(std::span<const CounterfactualSet> sets,
                                     std::int64_t samples_per_set,
                                     std::uint64_t master_seed) {
  std::vector<std::string> ids;
  ids.reserve(sets.size());
  for (const auto& s : sets) ids.push_back(s.id);
  return plan_jobs(ids, samples_per_set, master_seed);
}

std::string job_manifest(std::span<const GenerationJob> jobs) {
  csv::Writer w({"set_id", "sample_index", "p", "seed"});
  for (const auto& job : jobs) {
    w.row({job.set_id, std::to_string(job.sample_index),
           csv::format_fixed(job.attention_share, 6), std::to_string(job.seed)});
  }
  return w.str();
}

std::vector<GenerationJob> parse_job_manifest(std::string_view text) {
  const auto table = csv::parse(text, "job manifest");
  const auto set_col = table.column("set_id");
  const auto idx_col = table.column("sample_index");
  const auto p_col = table.column("p");
  const auto seed_col = table.column("seed");
  std::vector<GenerationJob> jobs;
  jobs.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    GenerationJob job;
    job.set_id = row[set_col];
    const auto& idx = row[idx_col];
    const auto& seed = row[seed_col];
    if (std::from_chars(idx.data(), idx.data() + idx.size(), job.sample_index).ec !=
            std::errc() ||
        std::from_chars(seed.data(), seed.data() + seed.size(), job.seed).ec !=
            std::errc()) {
      throw IngestError("job manifest: bad integer field for set " + job.set_id);
    }
    job.attention_share = csv::parse_double(row[p_col]);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

}  // namespace cfprobe
