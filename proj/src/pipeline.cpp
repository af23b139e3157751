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

#include "cfprobe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "cfprobe/bias_metrics.hpp"
#include "cfprobe/boxplot_svg.hpp"
#include "cfprobe/csv.hpp"
#include "cfprobe/embedding_store.hpp"
#include "cfprobe/errors.hpp"
#include "cfprobe/generation_planner.hpp"
#include "cfprobe/hashing.hpp"
#include "cfprobe/quality_audit.hpp"
#include "cfprobe/retrieval.hpp"
#include "json.hpp"

namespace cfprobe::pipeline {
namespace {

using nlohmann::json;

struct Output {
  std::string name;
  std::string content;
};

std::string content_hash(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next.store(n);
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Bookkeeping shared by every stage: input fingerprints, the manifest, and
// the all-or-nothing write of outputs.
class Stage {
 public:
  Stage(std::string name, const RunOptions& run) : name_(std::move(name)), run_(run) {
    if (run_.out.empty()) fail("--out is required");
    key_["stage"] = name_;
    key_["seed"] = run_.seed;
    key_["inputs"] = json::object();
    key_["options"] = json::object();
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw StageError(name_, message);
  }

  void input(const std::string& label, const fs::path& path) {
    if (path.empty()) fail("missing required input: " + label);
    if (!fs::is_regular_file(path)) fail(label + " not found: " + path.string());
    std::string bytes;
    try {
      bytes = csv::read_text_file(path);
    } catch (const std::exception& e) {
      fail(e.what());
    }
    key_["inputs"][label] = {{"path", path.string()}, {"fnv1a64", content_hash(bytes)}};
  }

  template <typename T>
  void option(const std::string& key, const T& value) {
    key_["options"][key] = value;
  }

  fs::path manifest_path() const { return run_.out / (name_ + ".manifest.json"); }

  // Report for a run whose manifest matches the current inputs and whose
  // outputs are intact, or nullopt when the stage has to run.
  std::optional<StageReport> current() const {
    std::error_code ec;
    if (!fs::is_regular_file(manifest_path(), ec)) return std::nullopt;
    json previous;
    try {
      previous = json::parse(csv::read_text_file(manifest_path()));
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (previous.value("key", json()) != key_) return std::nullopt;
    StageReport report{name_, {}, true};
    const json outputs = previous.value("outputs", json::object());
    for (const auto& [name, hash] : outputs.items()) {
      const fs::path p = run_.out / name;
      if (!fs::is_regular_file(p, ec)) return std::nullopt;
      if (content_hash(csv::read_text_file(p)) != hash.get<std::string>()) return std::nullopt;
      report.outputs.push_back(p);
    }
    return report;
  }

  StageReport commit(std::vector<Output> outputs) const {
    std::sort(outputs.begin(), outputs.end(),
              [](const Output& a, const Output& b) { return a.name < b.name; });
    json manifest;
    manifest["key"] = key_;
    manifest["outputs"] = json::object();
    StageReport report{name_, {}, false};
    try {
      fs::create_directories(run_.out);
      for (const auto& o : outputs) {
        const fs::path p = run_.out / o.name;
        fs::create_directories(p.parent_path());
        csv::write_text_file(p, o.content);
        manifest["outputs"][o.name] = content_hash(o.content);
        report.outputs.push_back(p);
      }
      csv::write_text_file(manifest_path(), manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
      fail(e.what());
    }
    return report;
  }

  // Runs `body`, converting any failure into a StageError for this stage.
  template <typename Fn>
  auto guard(Fn&& body) const {
    try {
      return body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

 private:
  std::string name_;
  RunOptions run_;
  json key_;
};

std::string embeddings_bytes(std::uint32_t dimension, const std::vector<std::string>& ids,
                             const std::vector<float>& values) {
  std::ostringstream out(std::ios::binary);
  write_embedding_file(out, dimension, ids, values);
  return out.str();
}

struct CaptionIndex {
  std::vector<CounterfactualSet> sets;
  std::unordered_map<std::string, std::size_t> set_by_id;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> caption_by_id;

  const CaptionRecord& caption(const std::string& id) const {
    const auto [s, m] = caption_by_id.at(id);
    return sets[s].members[m];
  }
};

CaptionIndex build_index(const Configuration& config) {
  CaptionIndex index;
  index.sets = enumerate_all(config);
  for (std::size_t s = 0; s < index.sets.size(); ++s) {
    index.set_by_id.emplace(index.sets[s].id, s);
    for (std::size_t m = 0; m < index.sets[s].members.size(); ++m) {
      index.caption_by_id.emplace(index.sets[s].members[m].id, std::pair{s, m});
    }
  }
  return index;
}

// Checks every asset against the caption index and the image store.
void validate_assets(const std::vector<ImageAsset>& assets, const CaptionIndex& index,
                     const EmbeddingStore& images) {
  for (std::size_t r = 0; r < assets.size(); ++r) {
    const auto& a = assets[r];
    const auto where = "asset record " + std::to_string(r) + " ('" + a.asset_id + "'): ";
    const auto set = index.set_by_id.find(a.set_id);
    if (set == index.set_by_id.end()) throw IngestError(where + "unknown set " + a.set_id);
    const auto cap = index.caption_by_id.find(a.caption_id);
    if (cap == index.caption_by_id.end() || cap->second.first != set->second) {
      throw IngestError(where + "caption " + a.caption_id + " is not a member of set " +
                        a.set_id);
    }
    if (!images.find(a.asset_id)) throw IngestError(where + "no image embedding");
  }
}

std::string subject_group_key(const CounterfactualSet& set) {
  return std::string(to_string(set.subject.kind)) + "|" + set.subject.display() + "|" +
         std::string(to_string(set.categories.first)) + "|" +
         std::string(to_string(set.categories.second));
}

std::vector<std::string> labels(const std::vector<AttributeValue>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) out.push_back(v.label);
  return out;
}

}  // namespace

std::string group_directory(SubjectKind kind, CategoryPair pair) {
  return std::string(to_string(kind)) + "__" + std::string(to_string(pair.first)) + "-" +
         std::string(to_string(pair.second));
}

CaptionsReport run_captions(const CaptionsOptions& options) {
  Stage stage("captions", options.run);
  stage.input("config", options.run.config);
  stage.option("samples_per_set", options.samples_per_set);
  stage.option("male_query", options.male_query);
  stage.option("female_query", options.female_query);

  const auto config = stage.guard([&] { return load_configuration(options.run.config); });
  CaptionsReport report;
  report.census = dataset_census(config, options.samples_per_set);
  report.captions = report.census.total_captions;
  report.sets = report.census.total_sets;
  if (auto done = stage.current()) {
    static_cast<StageReport&>(report) = *done;
    return report;
  }

  const auto sets = stage.guard([&] { return enumerate_all(config); });
  csv::Writer captions({"caption_id", "set_id", "prefix", "subject_kind", "subject", "cat_a",
                        "attr_a", "cat_b", "attr_b", "text"});
  csv::Writer set_rows({"set_id", "prefix", "subject_kind", "subject", "cat_a", "cat_b",
                        "members"});
  csv::Writer texts({"text_id", "kind", "text"});
  std::uint64_t caption_count = 0;
  for (const auto& set : sets) {
    set_rows.row({set.id, set.prefix.text, std::string(to_string(set.subject.kind)),
                  set.subject.display(), std::string(to_string(set.categories.first)),
                  std::string(to_string(set.categories.second)),
                  std::to_string(set.members.size())});
    for (const auto& m : set.members) {
      captions.row({m.id, set.id, m.prefix.text, std::string(to_string(m.subject.kind)),
                    m.subject.display(), std::string(to_string(m.attr1.category)),
                    m.attr1.label, std::string(to_string(m.attr2.category)), m.attr2.label,
                    m.text});
      texts.row({m.id, "caption", m.text});
      ++caption_count;
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& prefix : config.prefixes) {
    for (const auto& subject : config.subjects) {
      const auto prompt = neutral_prompt(prefix, subject);
      if (seen.insert(text_id(prompt)).second) texts.row({text_id(prompt), "neutral", prompt});
    }
  }
  for (const auto& probe : {options.male_query, options.female_query}) {
    if (seen.insert(text_id(probe)).second) texts.row({text_id(probe), "probe", probe});
  }
  if (caption_count != report.census.total_captions || sets.size() != report.census.total_sets) {
    stage.fail("enumeration does not match census arithmetic");
  }

  std::vector<Output> outputs;
  outputs.push_back({"captions.csv", captions.str()});
  outputs.push_back({"sets.csv", set_rows.str()});
  outputs.push_back({"texts.csv", texts.str()});
  outputs.push_back({"census.csv", census_csv(report.census)});
  static_cast<StageReport&>(report) = stage.commit(std::move(outputs));
  return report;
}

StageReport run_plan(const PlanOptions& options) {
  Stage stage("plan", options.run);
  stage.input("config", options.run.config);
  stage.option("samples_per_set", options.samples_per_set);
  stage.option("generator", std::string(kJobGeneratorName));
  if (options.samples_per_set <= 0) stage.fail("--samples must be >= 1");
  if (auto done = stage.current()) return *done;

  const auto jobs = stage.guard([&] {
    const auto config = load_configuration(options.run.config);
    const auto sets = enumerate_all(config);
    return plan_jobs(std::span<const CounterfactualSet>(sets), options.samples_per_set,
                     options.run.seed);
  });
  return stage.commit({{"jobs.csv", job_manifest(jobs)}});
}

StageReport run_ingest(const IngestOptions& options) {
  Stage stage("ingest", options.run);
  stage.input("text_embeddings", options.text_embeddings);
  stage.input("image_embeddings", options.image_embeddings);
  stage.input("assets", options.assets);
  if (!options.run.config.empty()) stage.input("config", options.run.config);
  if (auto done = stage.current()) return *done;

  return stage.guard([&] {
    const auto texts = EmbeddingStore::ingest(options.text_embeddings, EmbeddingKind::text);
    const auto images = EmbeddingStore::ingest(options.image_embeddings, EmbeddingKind::image);
    if (texts.dimension() != images.dimension()) {
      throw IngestError("text dimension " + std::to_string(texts.dimension()) +
                        " differs from image dimension " + std::to_string(images.dimension()));
    }
    const auto assets = read_asset_metadata(options.assets);
    if (!options.run.config.empty()) {
      validate_assets(assets, build_index(load_configuration(options.run.config)), images);
    } else {
      for (const auto& a : assets) {
        if (!images.find(a.asset_id)) {
          throw IngestError("asset '" + a.asset_id + "' has no image embedding");
        }
      }
    }
    csv::Writer w({"file", "kind", "records", "dimension"});
    w.row({options.text_embeddings.filename().string(), "text", std::to_string(texts.size()),
           std::to_string(texts.dimension())});
    w.row({options.image_embeddings.filename().string(), "image",
           std::to_string(images.size()), std::to_string(images.dimension())});
    w.row({options.assets.filename().string(), "assets", std::to_string(assets.size()), ""});
    return stage.commit({{"ingest_report.csv", w.str()}});
  });
}

StageReport run_filter(const FilterStageOptions& options) {
  Stage stage("filter", options.run);
  stage.input("config", options.run.config);
  stage.input("text_embeddings", options.text_embeddings);
  stage.input("image_embeddings", options.image_embeddings);
  stage.input("assets", options.assets);
  stage.option("min_cosine", options.min_cosine);
  stage.option("keep", options.keep);
  stage.option("group_by", options.group_by);
  if (options.group_by != "set" && options.group_by != "subject") {
    stage.fail("--group-by must be 'set' or 'subject'");
  }
  if (options.keep == 0) stage.fail("--keep must be >= 1");
  if (auto done = stage.current()) return *done;

  return stage.guard([&] {
    const auto index = build_index(load_configuration(options.run.config));
    const auto texts = EmbeddingStore::ingest(options.text_embeddings, EmbeddingKind::text);
    const auto images = EmbeddingStore::ingest(options.image_embeddings, EmbeddingKind::image);
    const auto assets = read_asset_metadata(options.assets);
    validate_assets(assets, index, images);

    // (set, sample) -> image row per member, npos where missing.
    constexpr std::size_t kMissing = static_cast<std::size_t>(-1);
    std::map<std::pair<std::size_t, std::uint32_t>, std::vector<std::size_t>> samples;
    for (const auto& a : assets) {
      const auto [s, m] = index.caption_by_id.at(a.caption_id);
      auto& rows = samples[{s, a.sample_index}];
      if (rows.empty()) rows.assign(index.sets[s].members.size(), kMissing);
      if (rows[m] != kMissing) {
        throw IngestError("two assets for caption " + a.caption_id + " in sample " +
                          std::to_string(a.sample_index));
      }
      rows[m] = *images.find(a.asset_id);
    }

    std::vector<std::pair<std::pair<std::size_t, std::uint32_t>, std::vector<std::size_t>>>
        work(samples.begin(), samples.end());
    std::vector<ScoredSample> scored(work.size());
    parallel_for(work.size(), options.run.workers, [&](std::size_t i) {
      const auto& [key, rows] = work[i];
      const auto& set = index.sets[key.first];
      ScoredSample sample{set.id, key.second, {}, std::numeric_limits<double>::quiet_NaN()};
      if (std::find(rows.begin(), rows.end(), kMissing) == rows.end()) {
        std::vector<Vector<double>> image_vecs, text_vecs;
        for (std::size_t m = 0; m < rows.size(); ++m) {
          const auto& caption = texts.at(set.members[m].id);
          const auto& image = images.vector(rows[m]);
          sample.member_cosines.push_back(caption_image_similarity(caption, image));
          image_vecs.push_back(image);
          text_vecs.push_back(caption);
        }
        try {
          sample.directional_score = set_directional_score<double>(image_vecs, text_vecs);
        } catch (const DegenerateInputError&) {
        }
      }
      scored[i] = std::move(sample);
    });

    FilterOptions filter;
    filter.min_cosine = options.min_cosine;
    filter.keep = options.keep;
    if (options.group_by == "subject") {
      filter.group_key = [&](const ScoredSample& s) {
        return subject_group_key(index.sets[index.set_by_id.at(s.set_id)]);
      };
    }
    const auto decisions = select_and_filter(scored, filter);
    return stage.commit({{"retention.csv", retention_report_csv(decisions)}});
  });
}

namespace {

struct SubjectOutcome {
  std::string subject;
  std::size_t pool_size = 0;
  std::optional<RetrievalResult> retrieval;
  std::optional<SkewReport> report;
  std::optional<ProportionBreakdown> breakdown;
  // One entry per value of the first category that has pool assets.
  std::vector<std::pair<std::string, SkewReport>> conditional;
};

}  // namespace

StageReport run_evaluate(const EvaluateOptions& options) {
  Stage stage("evaluate", options.run);
  stage.input("config", options.run.config);
  stage.input("text_embeddings", options.text_embeddings);
  stage.input("image_embeddings", options.image_embeddings);
  stage.input("assets", options.assets);
  stage.input("retention", options.retention);
  if (options.desired) stage.input("desired", *options.desired);
  stage.option("k", options.k ? json(*options.k) : json());
  stage.option("conditional_k", options.conditional_k);
  if ((options.k && *options.k == 0) || options.conditional_k == 0) {
    stage.fail("K must be >= 1");
  }
  if (auto done = stage.current()) return *done;

  return stage.guard([&] {
    const auto config = load_configuration(options.run.config);
    const auto index = build_index(config);
    const auto texts = EmbeddingStore::ingest(options.text_embeddings, EmbeddingKind::text);
    const auto images = EmbeddingStore::ingest(options.image_embeddings, EmbeddingKind::image);
    const auto assets = read_asset_metadata(options.assets);
    validate_assets(assets, index, images);
    const auto decisions =
        parse_retention_report(csv::read_text_file(options.retention),
                               options.retention.string());
    std::vector<DesiredOverride> overrides;
    if (options.desired) {
      overrides = parse_desired_overrides(csv::read_text_file(*options.desired),
                                          options.desired->string());
    }

    std::set<std::pair<std::string, std::uint32_t>> retained;
    for (const auto& d : decisions) {
      if (d.retained) retained.insert({d.set_id, d.sample_index});
    }
    // Retained image rows per (subject group key).
    std::unordered_map<std::string, std::vector<std::size_t>> pools;
    AssetAttributeIndex attributes;
    for (const auto& a : assets) {
      if (!retained.count({a.set_id, a.sample_index})) continue;
      const auto& set = index.sets[index.set_by_id.at(a.set_id)];
      pools[subject_group_key(set)].push_back(*images.find(a.asset_id));
      const auto& caption = index.caption(a.caption_id);
      attributes.emplace(a.asset_id, AssetAttributes{caption.attr1, caption.attr2});
    }

    std::vector<Output> outputs;
    std::vector<std::pair<std::string, DistributionSummary>> aggregates;
    csv::Writer conditional_summary({"group", "filter_value", "k", "mean_maxskew", "subjects"});

    for (auto kind : config.subject_kinds()) {
      const auto subjects = config.subjects_of(kind);
      for (const auto& pair : config.pairs_for(kind)) {
        const auto values_a = labels(config.values_of(pair.first));
        const auto values_b = labels(config.values_of(pair.second));
        std::vector<std::string> keys;
        for (const auto& a : values_a) {
          for (const auto& b : values_b) keys.push_back(pair_key(a, b));
        }
        std::optional<DesiredDistribution> desired;
        for (const auto& o : overrides) {
          if (o.categories == pair) desired = o.desired;
        }
        if (!desired) desired = DesiredDistribution::uniform(keys);
        const auto marginal_desired = DesiredDistribution::uniform(values_b);
        const std::size_t k = options.k.value_or(default_k(config, pair));
        const std::string cat_a(to_string(pair.first));
        const std::string cat_b(to_string(pair.second));

        std::vector<SubjectOutcome> outcomes(subjects.size());
        parallel_for(subjects.size(), options.run.workers, [&](std::size_t i) {
          const auto& subject = subjects[i];
          SubjectOutcome& out = outcomes[i];
          out.subject = subject.display();
          const std::string group_key = std::string(to_string(kind)) + "|" + subject.display() +
                                        "|" + cat_a + "|" + cat_b;
          const auto pool = pools.find(group_key);
          if (pool == pools.end() || pool->second.empty()) return;
          out.pool_size = pool->second.size();

          std::vector<Vector<double>> per_prefix;
          for (const auto& prefix : config.prefixes) {
            const auto prompt = neutral_prompt(prefix, subject);
            const auto row = texts.find(text_id(prompt));
            if (!row) {
              throw IngestError("no text embedding for neutral prompt '" + prompt + "' (" +
                                text_id(prompt) + ")");
            }
            per_prefix.push_back(texts.vector(*row));
          }
          const auto query = average_text_embedding<double>(per_prefix);

          auto result = top_k(query, images, pool->second, k);
          result.subject = out.subject;
          result.query_embedding_id = "mean:" + text_id(neutral_prompt(config.prefixes.front(), subject));
          const auto retrieved_keys = ranked_keys(result, attributes, pair.first, pair.second);
          out.report = skew_report(out.subject, cat_a, cat_b, k, retrieved_keys, *desired);
          std::vector<AssetAttributes> retrieved;
          for (const auto& item : result.ranked) retrieved.push_back(attributes.at(item.asset_id));
          out.breakdown =
              proportion_breakdown(retrieved, pair.first, values_a, pair.second, values_b);
          out.retrieval = std::move(result);

          for (const auto& value : config.values_of(pair.first)) {
            try {
              out.conditional.emplace_back(
                  value.label,
                  conditional_skew(query, images, pool->second, attributes, value, pair.second,
                                   options.conditional_k, marginal_desired, out.subject));
            } catch (const ArgumentError&) {
              // No retained images for this value.
            }
          }
        });

        std::vector<SkewReport> reports;
        std::vector<RetrievalResult> retrievals;
        for (const auto& o : outcomes) {
          if (o.report) reports.push_back(*o.report);
          if (o.retrieval) retrievals.push_back(*o.retrieval);
        }
        if (reports.empty()) continue;

        const std::string dir = group_directory(kind, pair) + "/";
        const std::string group_name = std::string(to_string(kind)) + ":" + cat_a + "-" + cat_b;
        csv::Writer summary({"subject", "k", "pool_size", "maxskew"});
        csv::Writer proportions({"subject", "table", "key", "proportion"});
        csv::Writer conditional({"subject", "filter_category", "filter_value",
                                 "measured_category", "k", "maxskew"});
        std::map<std::string, std::vector<double>> by_filter;
        for (const auto& o : outcomes) {
          summary.row({o.subject, std::to_string(k), std::to_string(o.pool_size),
                       o.report ? csv::format_double(o.report->max_skew) : "nan"});
          if (o.breakdown) {
            const auto& b = *o.breakdown;
            for (Eigen::Index r = 0; r < b.joint.rows(); ++r) {
              for (Eigen::Index c = 0; c < b.joint.cols(); ++c) {
                proportions.row({o.subject, "joint", pair_key(b.labels_a[r], b.labels_b[c]),
                                 csv::format_double(b.joint(r, c))});
              }
            }
            for (Eigen::Index r = 0; r < b.marginal_a.size(); ++r) {
              proportions.row({o.subject, cat_a, b.labels_a[r], csv::format_double(b.marginal_a(r))});
            }
            for (Eigen::Index c = 0; c < b.marginal_b.size(); ++c) {
              proportions.row({o.subject, cat_b, b.labels_b[c], csv::format_double(b.marginal_b(c))});
            }
          }
          for (const auto& [value, rep] : o.conditional) {
            conditional.row({o.subject, cat_a, value, cat_b, std::to_string(rep.k),
                             csv::format_double(rep.max_skew)});
            by_filter[value].push_back(rep.max_skew);
          }
        }
        for (const auto& value : values_a) {
          const auto it = by_filter.find(value);
          if (it == by_filter.end()) continue;
          double sum = 0.0;
          for (double v : it->second) sum += v;
          conditional_summary.row({group_name, value, std::to_string(options.conditional_k),
                                   csv::format_double(sum / static_cast<double>(it->second.size())),
                                   std::to_string(it->second.size())});
        }

        const auto agg = aggregate_across_subjects(reports);
        aggregates.emplace_back(group_name, agg);
        const BoxplotSeries series[] = {{group_name, agg}};
        const std::string title = "MaxSkew@" + std::to_string(k) + " across " +
                                  std::string(to_string(kind)) + " subjects, (" + cat_a + ", " +
                                  cat_b + ")";
        outputs.push_back({dir + "retrieval.csv", retrieval_dump_csv(retrievals)});
        outputs.push_back({dir + "skew.csv", skew_csv(reports)});
        outputs.push_back({dir + "maxskew.csv", max_skew_csv(reports)});
        outputs.push_back({dir + "summary.csv", summary.str()});
        outputs.push_back({dir + "proportions.csv", proportions.str()});
        outputs.push_back({dir + "conditional.csv", conditional.str()});
        outputs.push_back({dir + "boxplot.svg", boxplot_svg(title, series)});
      }
    }
    if (aggregates.empty()) throw IngestError("no retained images for any subject");
    outputs.push_back({"aggregate.csv", aggregate_csv(aggregates)});
    outputs.push_back({"conditional_summary.csv", conditional_summary.str()});
    return stage.commit(std::move(outputs));
  });
}

StageReport run_audit(const AuditOptions& options) {
  Stage stage("audit", options.run);
  stage.input("annotations", options.annotations);
  stage.input("image_embeddings", options.image_embeddings);
  stage.input("text_embeddings", options.text_embeddings);
  if (options.assets) {
    stage.input("assets", *options.assets);
    stage.input("config", options.run.config);
  }
  stage.option("male_query", options.male_query);
  stage.option("female_query", options.female_query);
  if (auto done = stage.current()) return *done;

  return stage.guard([&] {
    const auto annotations = parse_annotations(csv::read_text_file(options.annotations),
                                               options.annotations.string());
    const auto images = EmbeddingStore::ingest(options.image_embeddings, EmbeddingKind::image);
    const auto texts = EmbeddingStore::ingest(options.text_embeddings, EmbeddingKind::text);
    const auto query = [&](const std::string& text) -> const Vector<double>& {
      const auto row = texts.find(text_id(text));
      if (!row) throw IngestError("no text embedding for probe '" + text + "'");
      return texts.vector(*row);
    };
    const auto& male = query(options.male_query);
    const auto& female = query(options.female_query);

    std::map<std::string, GenderPrediction> predictions;
    csv::Writer pred_rows({"assetId", "prediction", "annotatedGender"});
    for (const auto& a : annotations) {
      const auto row = images.find(a.asset_id);
      if (!row) continue;
      const auto p = predict_gender(images.vector(*row), male, female);
      predictions.emplace(a.asset_id, p);
      pred_rows.row({a.asset_id, std::string(to_string(p)),
                     a.annotated_gender ? std::string(to_string(*a.annotated_gender)) : ""});
    }
    const auto stats = confusion_stats(predictions, annotations);

    std::function<std::optional<std::string>(std::string_view)> group_of;
    std::unordered_map<std::string, std::string> groups;
    if (options.assets) {
      const auto index = build_index(load_configuration(options.run.config));
      for (const auto& asset : read_asset_metadata(*options.assets)) {
        const auto it = index.caption_by_id.find(asset.caption_id);
        if (it == index.caption_by_id.end()) {
          throw IngestError("asset '" + asset.asset_id + "' references unknown caption");
        }
        const AssetAttributes attrs{index.caption(asset.caption_id).attr1,
                                    index.caption(asset.caption_id).attr2};
        const auto* race = attrs.label_of(AttributeCategory::race);
        const auto* gender = attrs.label_of(AttributeCategory::gender);
        if (race && gender) groups.emplace(asset.asset_id, *race + "/" + *gender);
      }
      group_of = [&](std::string_view id) -> std::optional<std::string> {
        const auto it = groups.find(std::string(id));
        if (it == groups.end()) return std::nullopt;
        return it->second;
      };
    }
    const auto census = error_census(annotations, group_of);
    return stage.commit({{"predictions.csv", pred_rows.str()},
                         {"confusion.csv", confusion_csv(stats)},
                         {"error_census.csv", error_census_csv(census)}});
  });
}

StageReport run_mock_adapter(const MockAdapterOptions& options) {
  Stage stage("mock-adapter", options.run);
  stage.input("config", options.run.config);
  stage.input("jobs", options.jobs);
  stage.option("dimension", options.dimension);
  stage.option("noise", options.noise);
  stage.option("male_query", options.male_query);
  stage.option("female_query", options.female_query);
  if (options.dimension < 2) stage.fail("--dimension must be >= 2");
  if (auto done = stage.current()) return *done;

  return stage.guard([&] {
    const auto config = load_configuration(options.run.config);
    const auto index = build_index(config);
    const auto jobs = parse_job_manifest(csv::read_text_file(options.jobs));
    const auto dim = static_cast<std::uint32_t>(options.dimension);

    std::vector<std::string> text_ids;
    std::vector<float> text_values;
    std::unordered_map<std::string, Vector<double>> caption_vectors;
    std::unordered_set<std::string> seen;
    const auto add_text = [&](const std::string& id, const std::string& text) {
      if (!seen.insert(id).second) return;
      const auto rec = mock_embed(text, options.dimension);
      text_ids.push_back(id);
      for (Eigen::Index c = 0; c < rec.vector.size(); ++c) {
        text_values.push_back(static_cast<float>(rec.vector(c)));
      }
    };
    for (const auto& set : index.sets) {
      for (const auto& m : set.members) {
        add_text(m.id, m.text);
        caption_vectors.emplace(m.id, mock_embed(m.text, options.dimension).vector);
      }
    }
    for (const auto& prefix : config.prefixes) {
      for (const auto& subject : config.subjects) {
        const auto prompt = neutral_prompt(prefix, subject);
        add_text(text_id(prompt), prompt);
      }
    }
    add_text(text_id(options.male_query), options.male_query);
    add_text(text_id(options.female_query), options.female_query);

    std::vector<std::string> image_ids;
    std::vector<float> image_values;
    std::vector<ImageAsset> assets;
    for (const auto& job : jobs) {
      const auto it = index.set_by_id.find(job.set_id);
      if (it == index.set_by_id.end()) throw IngestError("job references unknown set " + job.set_id);
      for (const auto& m : index.sets[it->second].members) {
        const std::string asset_id =
            "a" + hex64(fnv1a64_fields({job.set_id, std::to_string(job.sample_index), m.id}));
        const auto noise = mock_embed(asset_id + ":" + std::to_string(job.seed), options.dimension);
        const Vector<double> v = normalized(caption_vectors.at(m.id) + options.noise * noise.vector);
        image_ids.push_back(asset_id);
        for (Eigen::Index c = 0; c < v.size(); ++c) image_values.push_back(static_cast<float>(v(c)));
        assets.push_back(ImageAsset{asset_id, m.id, job.set_id, job.sample_index});
      }
    }
    return stage.commit({{"text_embeddings.cfeb", embeddings_bytes(dim, text_ids, text_values)},
                         {"image_embeddings.cfeb", embeddings_bytes(dim, image_ids, image_values)},
                         {"assets.csv", asset_metadata_csv(assets)}});
  });
}

}  // namespace cfprobe::pipeline
