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

#ifndef CFPROBE_CAPTION_ENGINE_HPP_
#define CFPROBE_CAPTION_ENGINE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfprobe {

enum class AttributeCategory : std::uint8_t { gender, race, religion, physical };
enum class SubjectKind : std::uint8_t { occupation, personality_trait };

std::string_view to_string(AttributeCategory category);
std::string_view to_string(SubjectKind kind);
AttributeCategory parse_category(std::string_view name);
SubjectKind parse_subject_kind(std::string_view name);

struct AttributeValue {
  AttributeCategory category;
  std::string label;

  friend bool operator==(const AttributeValue&, const AttributeValue&) = default;
};

struct Subject {
  SubjectKind kind;
  std::string label;
  // Position among identically labelled subjects of the same kind. Only
  // non-zero when the configuration keeps duplicate subjects.
  int occurrence = 0;

  // Label used in ids and reports: "doctor", then "doctor#2", ...
  std::string display() const;

  friend bool operator==(const Subject&, const Subject&) = default;
};

// Caption opening, including any trailing article ("A photo of a").
struct Prefix {
  std::string text;

  friend bool operator==(const Prefix&, const Prefix&) = default;
};

struct CategoryPair {
  AttributeCategory first;
  AttributeCategory second;

  friend bool operator==(const CategoryPair&, const CategoryPair&) = default;
};

struct CaptionRecord {
  std::string id;
  Prefix prefix;
  Subject subject;
  AttributeValue attr1;
  AttributeValue attr2;
  std::string text;
};

// All captions sharing one prefix and subject across the cross product of
// two attribute sets. Members are ordered attr1-major.
struct CounterfactualSet {
  std::string id;
  Prefix prefix;
  Subject subject;
  CategoryPair categories;
  std::vector<CaptionRecord> members;
};

struct Configuration {
  std::vector<Prefix> prefixes;
  std::vector<Subject> subjects;
  std::vector<AttributeValue> attributes;
  // Categories in first-declaration order.
  std::vector<AttributeCategory> categories;
  // Category pairs evaluated per subject kind, in declaration order.
  std::vector<std::pair<SubjectKind, CategoryPair>> pairs;
  bool keep_duplicate_subjects = false;

  std::vector<Subject> subjects_of(SubjectKind kind) const;
  std::vector<AttributeValue> values_of(AttributeCategory category) const;
  std::size_t cardinality(AttributeCategory category) const;
  std::vector<SubjectKind> subject_kinds() const;
  std::vector<CategoryPair> pairs_for(SubjectKind kind) const;
};

// Parses line records "kind,category,label" (kind is prefix, subject,
// attribute, pair or option). '#' starts a comment line.
Configuration parse_configuration(std::string_view text,
                                  std::string_view source_name = "<config>");
Configuration load_configuration(const std::filesystem::path& path);

// Sets in prefix order, then subject order; members in attr_a then attr_b
// order. Throws ConfigError on empty or duplicated inputs.
std::vector<CounterfactualSet> enumerate_captions(
    std::span<const Prefix> prefixes, std::span<const Subject> subjects,
    std::span<const AttributeValue> attrs_a,
    std::span<const AttributeValue> attrs_b);

// Every set of the configuration: subject kinds in enum order, then the
// configured pairs of that kind.
std::vector<CounterfactualSet> enumerate_all(const Configuration& config);

std::string caption_text(const Prefix& prefix, const AttributeValue& a,
                         const AttributeValue& b, const Subject& subject);
std::string neutral_prompt(const Prefix& prefix, const Subject& subject);

// Stable id for free text (neutral prompts, audit probes).
std::string text_id(std::string_view text);

// True when the token sequence of `needle` occurs in `haystack`.
bool contains_tokens(std::string_view haystack, std::string_view needle);

struct CensusRow {
  SubjectKind kind;
  CategoryPair pair;
  std::uint64_t sets = 0;
  std::uint64_t images_per_set = 0;
  std::uint64_t total_images = 0;

  std::uint64_t captions() const { return sets * images_per_set; }
};

struct Census {
  std::vector<CensusRow> rows;
  std::uint64_t total_sets = 0;
  std::uint64_t total_captions = 0;
  std::uint64_t total_images = 0;
};

inline constexpr std::uint64_t kDefaultSamplesPerSet = 100;

Census dataset_census(const Configuration& config,
                      std::uint64_t samples_per_set = kDefaultSamplesPerSet);

// Header: subject_kind,cat_a,cat_b,sets,images_per_set,total_images; the
// last row is the grand total with subject_kind "total".
std::string census_csv(const Census& census);

}  // namespace cfprobe

#endif  // CFPROBE_CAPTION_ENGINE_HPP_
