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

#include "cfprobe/caption_engine.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "cfprobe/csv.hpp"
#include "cfprobe/errors.hpp"
#include "cfprobe/hashing.hpp"

namespace cfprobe {
namespace {

constexpr std::string_view kCategoryNames[] = {"gender", "race", "religion",
                                               "physical"};
constexpr std::string_view kSubjectKindNames[] = {"occupation",
                                                  "personality_trait"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto start = text.find_first_not_of(' ', pos);
    if (start == std::string_view::npos) break;
    auto end = text.find(' ', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    pos = end;
  }
  return out;
}

std::string join_words(std::initializer_list<std::string_view> words) {
  std::string out;
  for (std::string_view w : words) {
    if (w.empty()) continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string set_id(const Prefix& prefix, const Subject& subject,
                   CategoryPair pair) {
  return "s" + hex64(fnv1a64_fields({prefix.text, to_string(subject.kind),
                                     subject.display(), to_string(pair.first),
                                     to_string(pair.second)}));
}

std::string caption_id(const Prefix& prefix, const Subject& subject,
                       const AttributeValue& a, const AttributeValue& b) {
  return "c" + hex64(fnv1a64_fields(
                   {prefix.text, to_string(subject.kind), subject.display(),
                    to_string(a.category), a.label, to_string(b.category),
                    b.label}));
}

void require_single_category(std::span<const AttributeValue> values,
                             const char* which) {
  if (values.empty()) {
    throw ConfigError(std::string("attribute set ") + which + " is empty");
  }
  std::set<std::string_view> seen;
  for (const auto& v : values) {
    if (v.category != values.front().category) {
      throw ConfigError(std::string("attribute set ") + which +
                        " mixes categories");
    }
    if (v.label.empty()) throw ConfigError("empty attribute label");
    if (!seen.insert(v.label).second) {
      throw ConfigError("duplicate attribute label '" + v.label + "'");
    }
  }
}

}  // namespace

std::string_view to_string(AttributeCategory category) {
  return kCategoryNames[static_cast<std::size_t>(category)];
}

std::string_view to_string(SubjectKind kind) {
  return kSubjectKindNames[static_cast<std::size_t>(kind)];
}

AttributeCategory parse_category(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kCategoryNames); ++i) {
    if (kCategoryNames[i] == name) return static_cast<AttributeCategory>(i);
  }
  throw ConfigError("unknown attribute category '" + std::string(name) + "'");
}

SubjectKind parse_subject_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kSubjectKindNames); ++i) {
    if (kSubjectKindNames[i] == name) return static_cast<SubjectKind>(i);
  }
  throw ConfigError("unknown subject kind '" + std::string(name) + "'");
}

std::string Subject::display() const {
  if (occurrence == 0) return label;
  return label + "#" + std::to_string(occurrence + 1);
}

std::vector<Subject> Configuration::subjects_of(SubjectKind kind) const {
  std::vector<Subject> out;
  for (const auto& s : subjects) {
    if (s.kind == kind) out.push_back(s);
  }
  return out;
}

std::vector<AttributeValue> Configuration::values_of(
    AttributeCategory category) const {
  std::vector<AttributeValue> out;
  for (const auto& a : attributes) {
    if (a.category == category) out.push_back(a);
  }
  return out;
}

std::size_t Configuration::cardinality(AttributeCategory category) const {
  return static_cast<std::size_t>(
      std::count_if(attributes.begin(), attributes.end(),
                    [&](const auto& a) { return a.category == category; }));
}

std::vector<SubjectKind> Configuration::subject_kinds() const {
  std::vector<SubjectKind> out;
  for (auto kind : {SubjectKind::occupation, SubjectKind::personality_trait}) {
    if (std::any_of(subjects.begin(), subjects.end(),
                    [&](const auto& s) { return s.kind == kind; })) {
      out.push_back(kind);
    }
  }
  return out;
}

std::vector<CategoryPair> Configuration::pairs_for(SubjectKind kind) const {
  std::vector<CategoryPair> out;
  for (const auto& [k, pair] : pairs) {
    if (k == kind) out.push_back(pair);
  }
  return out;
}

Configuration parse_configuration(std::string_view text,
                                  std::string_view source_name) {
  Configuration config;
  std::map<std::pair<SubjectKind, std::string>, int> subject_counts;
  std::set<std::pair<AttributeCategory, std::string>> attribute_keys;
  std::set<std::string> prefix_texts;
  std::vector<std::pair<std::size_t, std::pair<SubjectKind, CategoryPair>>> pair_lines;
  std::vector<std::pair<std::size_t, std::pair<SubjectKind, std::string>>> duplicate_lines;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto where = [&] {
      return std::string(source_name) + ":" + std::to_string(line_no) + ": ";
    };
    auto fields = csv::split(line);
    if (fields.size() != 3) {
      throw ConfigError(where() + "expected 3 fields (kind,category,label), got " +
                        std::to_string(fields.size()));
    }
    const std::string kind(trim(fields[0]));
    const std::string category(trim(fields[1]));
    const std::string label(trim(fields[2]));
    try {
      if (kind == "prefix") {
        if (label.empty()) throw ConfigError("empty prefix");
        if (!prefix_texts.insert(label).second) {
          throw ConfigError("duplicate prefix '" + label + "'");
        }
        config.prefixes.push_back(Prefix{label});
      } else if (kind == "subject") {
        const SubjectKind sk = parse_subject_kind(category);
        if (label.empty()) throw ConfigError("empty subject label");
        int& count = subject_counts[{sk, label}];
        if (count > 0) duplicate_lines.push_back({line_no, {sk, label}});
        config.subjects.push_back(Subject{sk, label, count});
        ++count;
      } else if (kind == "attribute") {
        const AttributeCategory cat = parse_category(category);
        if (label.empty()) throw ConfigError("empty attribute label");
        if (!attribute_keys.insert({cat, label}).second) {
          throw ConfigError("duplicate attribute '" + category + "," + label + "'");
        }
        if (std::find(config.categories.begin(), config.categories.end(), cat) ==
            config.categories.end()) {
          config.categories.push_back(cat);
        }
        config.attributes.push_back(AttributeValue{cat, label});
      } else if (kind == "pair") {
        const SubjectKind sk = parse_subject_kind(category);
        const auto colon = label.find(':');
        if (colon == std::string::npos) {
          throw ConfigError("pair label must be 'cat_a:cat_b'");
        }
        const CategoryPair pair{parse_category(trim(std::string_view(label).substr(0, colon))),
                                parse_category(trim(std::string_view(label).substr(colon + 1)))};
        if (pair.first == pair.second) {
          throw ConfigError("pair categories must differ");
        }
        pair_lines.push_back({line_no, {sk, pair}});
      } else if (kind == "option") {
        if (category == "duplicate_subjects") {
          if (label == "keep") {
            config.keep_duplicate_subjects = true;
          } else if (label == "reject") {
            config.keep_duplicate_subjects = false;
          } else {
            throw ConfigError("duplicate_subjects must be keep or reject");
          }
        } else {
          throw ConfigError("unknown option '" + category + "'");
        }
      } else {
        throw ConfigError("unknown record kind '" + kind + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }

  const std::string src(source_name);
  if (!config.keep_duplicate_subjects && !duplicate_lines.empty()) {
    const auto& [ln, key] = duplicate_lines.front();
    throw ConfigError(src + ":" + std::to_string(ln) + ": duplicate subject '" +
                      key.second + "' (set option,duplicate_subjects,keep to allow)");
  }
  if (config.prefixes.empty()) throw ConfigError(src + ": no prefixes");
  if (config.subjects.empty()) throw ConfigError(src + ": no subjects");
  if (config.categories.size() < 2) {
    throw ConfigError(src + ": need at least two attribute categories");
  }

  for (const auto& [ln, entry] : pair_lines) {
    const auto& [sk, pair] = entry;
    for (auto cat : {pair.first, pair.second}) {
      if (config.cardinality(cat) == 0) {
        throw ConfigError(src + ":" + std::to_string(ln) + ": category '" +
                          std::string(to_string(cat)) + "' has no attributes");
      }
    }
    const bool dup = std::any_of(
        config.pairs.begin(), config.pairs.end(), [&](const auto& p) {
          return p.first == sk &&
                 ((p.second.first == pair.first && p.second.second == pair.second) ||
                  (p.second.first == pair.second && p.second.second == pair.first));
        });
    if (dup) {
      throw ConfigError(src + ":" + std::to_string(ln) + ": duplicate pair");
    }
    config.pairs.push_back(entry);
  }
  for (auto sk : config.subject_kinds()) {
    if (!config.pairs_for(sk).empty()) continue;
    for (std::size_t i = 0; i < config.categories.size(); ++i) {
      for (std::size_t j = i + 1; j < config.categories.size(); ++j) {
        config.pairs.push_back(
            {sk, CategoryPair{config.categories[i], config.categories[j]}});
      }
    }
  }

  // Neutral prompts must not mention any attribute label.
  for (const auto& prefix : config.prefixes) {
    for (const auto& subject : config.subjects) {
      const std::string prompt = neutral_prompt(prefix, subject);
      for (const auto& attr : config.attributes) {
        if (contains_tokens(prompt, attr.label)) {
          throw ConfigError(src + ": neutral prompt '" + prompt +
                            "' contains attribute label '" + attr.label + "'");
        }
      }
    }
  }
  return config;
}

Configuration load_configuration(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("configuration file not found: " + path.string());
  }
  return parse_configuration(csv::read_text_file(path), path.string());
}

std::string caption_text(const Prefix& prefix, const AttributeValue& a,
                         const AttributeValue& b, const Subject& subject) {
  return join_words({prefix.text, a.label, b.label, subject.label});
}

std::string neutral_prompt(const Prefix& prefix, const Subject& subject) {
  return join_words({prefix.text, subject.label});
}

std::string text_id(std::string_view text) {
  return "t" + hex64(fnv1a64(text));
}

bool contains_tokens(std::string_view haystack, std::string_view needle) {
  const auto hay = tokens(haystack);
  const auto ndl = tokens(needle);
  if (ndl.empty() || ndl.size() > hay.size()) return false;
  for (std::size_t i = 0; i + ndl.size() <= hay.size(); ++i) {
    if (std::equal(ndl.begin(), ndl.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

std::vector<CounterfactualSet> enumerate_captions(
    std::span<const Prefix> prefixes, std::span<const Subject> subjects,
    std::span<const AttributeValue> attrs_a,
    std::span<const AttributeValue> attrs_b) {
  if (prefixes.empty()) throw ConfigError("prefix list is empty");
  if (subjects.empty()) throw ConfigError("subject list is empty");
  require_single_category(attrs_a, "A");
  require_single_category(attrs_b, "B");
  const CategoryPair pair{attrs_a.front().category, attrs_b.front().category};
  if (pair.first == pair.second) {
    throw ConfigError("attribute sets must come from different categories");
  }
  {
    std::set<std::string_view> seen;
    for (const auto& p : prefixes) {
      if (p.text.empty()) throw ConfigError("empty prefix");
      if (!seen.insert(p.text).second) {
        throw ConfigError("duplicate prefix '" + p.text + "'");
      }
    }
    std::set<std::tuple<SubjectKind, std::string_view, int>> seen_subjects;
    for (const auto& s : subjects) {
      if (s.label.empty()) throw ConfigError("empty subject label");
      if (!seen_subjects.insert({s.kind, s.label, s.occurrence}).second) {
        throw ConfigError("duplicate subject '" + s.display() + "'");
      }
    }
  }

  std::vector<CounterfactualSet> sets;
  sets.reserve(prefixes.size() * subjects.size());
  for (const auto& prefix : prefixes) {
    for (const auto& subject : subjects) {
      CounterfactualSet set{set_id(prefix, subject, pair), prefix, subject, pair, {}};
      set.members.reserve(attrs_a.size() * attrs_b.size());
      for (const auto& a : attrs_a) {
        for (const auto& b : attrs_b) {
          set.members.push_back(CaptionRecord{caption_id(prefix, subject, a, b),
                                              prefix, subject, a, b,
                                              caption_text(prefix, a, b, subject)});
        }
      }
      sets.push_back(std::move(set));
    }
  }
  return sets;
}

std::vector<CounterfactualSet> enumerate_all(const Configuration& config) {
  std::vector<CounterfactualSet> all;
  std::unordered_set<std::string> ids;
  for (auto kind : config.subject_kinds()) {
    const auto subjects = config.subjects_of(kind);
    for (const auto& pair : config.pairs_for(kind)) {
      const auto a = config.values_of(pair.first);
      const auto b = config.values_of(pair.second);
      auto sets = enumerate_captions(config.prefixes, subjects, a, b);
      for (auto& set : sets) {
        if (!ids.insert(set.id).second) {
          throw ConfigError("set id collision: " + set.id);
        }
        for (const auto& m : set.members) {
          if (!ids.insert(m.id).second) {
            throw ConfigError("caption id collision: " + m.id);
          }
        }
        all.push_back(std::move(set));
      }
    }
  }
  return all;
}

Census dataset_census(const Configuration& config, std::uint64_t samples_per_set) {
  Census census;
  for (auto kind : config.subject_kinds()) {
    const std::uint64_t subjects = config.subjects_of(kind).size();
    for (const auto& pair : config.pairs_for(kind)) {
      CensusRow row{kind, pair};
      row.sets = config.prefixes.size() * subjects;
      row.images_per_set = config.cardinality(pair.first) * config.cardinality(pair.second);
      row.total_images = row.sets * row.images_per_set * samples_per_set;
      census.total_sets += row.sets;
      census.total_captions += row.captions();
      census.total_images += row.total_images;
      census.rows.push_back(row);
    }
  }
  return census;
}

std::string census_csv(const Census& census) {
  csv::Writer w({"subject_kind", "cat_a", "cat_b", "sets", "images_per_set",
                 "total_images"});
  for (const auto& row : census.rows) {
    w.row({std::string(to_string(row.kind)), std::string(to_string(row.pair.first)),
           std::string(to_string(row.pair.second)), std::to_string(row.sets),
           std::to_string(row.images_per_set), std::to_string(row.total_images)});
  }
  w.row({"total", "", "", std::to_string(census.total_sets), "",
         std::to_string(census.total_images)});
  return w.str();
}

}  // namespace cfprobe
