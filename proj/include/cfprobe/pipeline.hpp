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

#ifndef CFPROBE_PIPELINE_HPP_
#define CFPROBE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cfprobe/caption_engine.hpp"
#include "cfprobe/counterfactual_filter.hpp"

// Stage drivers behind the command-line tool. Every stage reads its inputs
// completely, computes all outputs in memory, and only then writes them
// into the run directory together with "<stage>.manifest.json", which records
// the content hash of every input and output. Failures throw StageError
// before anything is written.
namespace cfprobe::pipeline {

namespace fs = std::filesystem;

inline constexpr std::uint64_t kDefaultMasterSeed = 20231016;
inline constexpr std::size_t kDefaultConditionalK = 12;
inline constexpr std::size_t kDefaultMockDimension = 64;

struct RunOptions {
  fs::path config;
  fs::path out;
  std::uint64_t seed = kDefaultMasterSeed;
  std::size_t workers = 1;
};

struct StageReport {
  std::string stage;
  std::vector<fs::path> outputs;
  // True when the manifest showed identical inputs and intact outputs, so
  // nothing was rewritten.
  bool up_to_date = false;
};

// captions.csv, sets.csv, texts.csv, census.csv.
struct CaptionsOptions {
  RunOptions run;
  std::uint64_t samples_per_set = kDefaultSamplesPerSet;
  std::string male_query = "A male person";
  std::string female_query = "A female person";
};
struct CaptionsReport : StageReport {
  Census census;
  std::uint64_t captions = 0;
  std::uint64_t sets = 0;
};
CaptionsReport run_captions(const CaptionsOptions& options);

// jobs.csv.
struct PlanOptions {
  RunOptions run;
  std::int64_t samples_per_set = static_cast<std::int64_t>(kDefaultSamplesPerSet);
};
StageReport run_plan(const PlanOptions& options);

// ingest_report.csv. Validates embedding files and asset metadata and, when
// a configuration is given, that assets reference known captions and sets.
struct IngestOptions {
  RunOptions run;
  fs::path text_embeddings;
  fs::path image_embeddings;
  fs::path assets;
};
StageReport run_ingest(const IngestOptions& options);

// retention.csv.
struct FilterStageOptions {
  RunOptions run;
  fs::path text_embeddings;
  fs::path image_embeddings;
  fs::path assets;
  double min_cosine = kDefaultMinCaptionImageCosine;
  std::size_t keep = kDefaultKeepPerGroup;
  // "set" or "subject" (one group per subject and category pair).
  std::string group_by = "set";
};
StageReport run_filter(const FilterStageOptions& options);

// Per group "<kind>__<cat_a>-<cat_b>/": retrieval.csv, skew.csv,
// maxskew.csv, summary.csv, proportions.csv, conditional.csv, boxplot.svg.
// Top level: aggregate.csv, conditional_summary.csv.
struct EvaluateOptions {
  RunOptions run;
  fs::path text_embeddings;
  fs::path image_embeddings;
  fs::path assets;
  fs::path retention;
  std::optional<std::size_t> k;
  std::size_t conditional_k = kDefaultConditionalK;
  std::optional<fs::path> desired;
};
StageReport run_evaluate(const EvaluateOptions& options);

// predictions.csv, confusion.csv, error_census.csv.
struct AuditOptions {
  RunOptions run;
  fs::path annotations;
  fs::path image_embeddings;
  fs::path text_embeddings;
  // Optional; enables the per race/gender census when set with a config.
  std::optional<fs::path> assets;
  std::string male_query = "A male person";
  std::string female_query = "A female person";
};
StageReport run_audit(const AuditOptions& options);

// Stand-in for the external model adapter: text_embeddings.cfeb,
// image_embeddings.cfeb and assets.csv from the deterministic mock embedder.
struct MockAdapterOptions {
  RunOptions run;
  fs::path jobs;
  std::size_t dimension = kDefaultMockDimension;
  double noise = 0.5;
  std::string male_query = "A male person";
  std::string female_query = "A female person";
};
StageReport run_mock_adapter(const MockAdapterOptions& options);

// Directory name of an evaluation group, e.g. "occupation__race-gender".
std::string group_directory(SubjectKind kind, CategoryPair pair);

}  // namespace cfprobe::pipeline

#endif  // CFPROBE_PIPELINE_HPP_
