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

#ifndef CFPROBE_GENERATION_PLANNER_HPP_
#define CFPROBE_GENERATION_PLANNER_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfprobe/caption_engine.hpp"

namespace cfprobe {

// Attention-share fraction bounds for over-generation.
inline constexpr double kMinAttentionShare = 0.1;
inline constexpr double kMaxAttentionShare = 0.9;

// Name of the counter-based generator. Bump the suffix if the derivation
// below ever changes; manifests are only comparable within one version.
inline constexpr std::string_view kJobGeneratorName = "cfprobe-job-splitmix64-v1";

// One sampled generation of a whole counterfactual set: every member shares
// the attention share and the seed.
struct GenerationJob {
  std::string set_id;
  std::uint32_t sample_index = 0;
  double attention_share = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const GenerationJob&, const GenerationJob&) = default;
};

// Keyed draw for (master_seed, set_id, sample_index). Independent of the
// order in which jobs are planned.
GenerationJob draw_job(std::uint64_t master_seed, std::string_view set_id,
                       std::uint32_t sample_index);

std::vector<GenerationJob> plan_jobs(std::span<const std::string> set_ids,
                                     std::int64_t samples_per_set,
                                     std::uint64_t master_seed);
std::vector<GenerationJob> plan_jobs(std::span<const CounterfactualSet> sets,
                                     std::int64_t samples_per_set,
                                     std::uint64_t master_seed);

// Manifest: header "set_id,sample_index,p,seed", p with 6 decimals.
std::string job_manifest(std::span<const GenerationJob> jobs);
std::vector<GenerationJob> parse_job_manifest(std::string_view text);

}  // namespace cfprobe

#endif  // CFPROBE_GENERATION_PLANNER_HPP_
