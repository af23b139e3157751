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

#include "cfprobe/quality_audit.hpp"

#include <array>
#include <unordered_set>

#include "cfprobe/csv.hpp"
#include "cfprobe/errors.hpp"

namespace cfprobe {
namespace {

constexpr std::array<std::string_view, 5> kCategoryNames = {
    "good", "cannot_discern_gender", "fail_female", "fail_male", "out_of_frame"};

std::vector<CensusEntry> tabulate(const std::array<std::size_t, 5>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::vector<CensusEntry> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.push_back(CensusEntry{static_cast<AuditCategory>(i), counts[i],
                              total ? 100.0 * static_cast<double>(counts[i]) /
                                          static_cast<double>(total)
                                    : 0.0});
  }
  return out;
}

ClassStats class_stats(std::size_t true_positive, std::size_t predicted,
                       std::size_t support) {
  ClassStats s;
  s.support = support;
  s.precision = predicted ? static_cast<double>(true_positive) / static_cast<double>(predicted)
                          : 0.0;
  s.recall =
      support ? static_cast<double>(true_positive) / static_cast<double>(support) : 0.0;
  if (s.precision > 0.0 && s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

std::string_view to_string(GenderPrediction p) {
  switch (p) {
    case GenderPrediction::male:
      return "male";
    case GenderPrediction::female:
      return "female";
    case GenderPrediction::undetermined:
      break;
  }
  return "undetermined";
}

std::string_view to_string(AuditCategory c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}

AuditCategory parse_audit_category(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<AuditCategory>(i);
  }
  throw IngestError("unknown audit category '" + std::string(name) + "'");
}

ConfusionStats confusion_stats(const std::map<std::string, GenderPrediction>& predictions,
                               std::span<const AuditAnnotation> annotations) {
  std::size_t tp_male = 0, tp_female = 0;
  std::size_t pred_male = 0, pred_female = 0;
  std::size_t support_male = 0, support_female = 0;
  std::size_t evaluated = 0;
  for (const auto& a : annotations) {
    if (!a.annotated_gender) continue;
    const auto it = predictions.find(a.asset_id);
    if (it == predictions.end()) continue;
    ++evaluated;
    const bool truth_male = *a.annotated_gender == Gender::male;
    (truth_male ? support_male : support_female) += 1;
    if (it->second == GenderPrediction::male) {
      ++pred_male;
      if (truth_male) ++tp_male;
    } else if (it->second == GenderPrediction::female) {
      ++pred_female;
      if (!truth_male) ++tp_female;
    }
  }
  if (evaluated == 0) {
    throw ArgumentError("no prediction matches an annotation with a known gender");
  }
  return ConfusionStats{class_stats(tp_male, pred_male, support_male),
                        class_stats(tp_female, pred_female, support_female), evaluated};
}

ErrorCensus error_census(
    std::span<const AuditAnnotation> annotations,
    const std::function<std::optional<std::string>(std::string_view)>& group_of) {
  std::array<std::size_t, 5> overall{};
  std::map<std::string, std::array<std::size_t, 5>> groups;
  for (const auto& a : annotations) {
    const auto idx = static_cast<std::size_t>(a.category);
    ++overall[idx];
    if (group_of) {
      if (auto g = group_of(a.asset_id)) ++groups[*g][idx];
    }
  }
  ErrorCensus census;
  census.total = annotations.size();
  census.overall = tabulate(overall);
  for (const auto& [name, counts] : groups) {
    census.by_group.emplace_back(name, tabulate(counts));
  }
  return census;
}

std::vector<AuditAnnotation> parse_annotations(std::string_view text,
                                               std::string_view source_name) {
  const auto table = csv::parse(text, source_name);
  const auto id_col = table.column("assetId");
  const auto cat_col = table.column("category");
  const auto g_col = table.column("annotatedGender");
  std::vector<AuditAnnotation> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto where = [&] {
      return std::string(source_name) + ": record " + std::to_string(r) + " ('" +
             row[id_col] + "'): ";
    };
    AuditAnnotation a;
    a.asset_id = row[id_col];
    if (a.asset_id.empty() || !seen.insert(a.asset_id).second) {
      throw IngestError(where() + "duplicate or empty asset id");
    }
    try {
      a.category = parse_audit_category(row[cat_col]);
    } catch (const IngestError& e) {
      throw IngestError(where() + e.what());
    }
    const auto& g = row[g_col];
    if (g == "male") {
      a.annotated_gender = Gender::male;
    } else if (g == "female") {
      a.annotated_gender = Gender::female;
    } else if (!g.empty()) {
      throw IngestError(where() + "annotatedGender must be male, female or empty");
    }
    const bool needs_gender = a.category == AuditCategory::good ||
                              a.category == AuditCategory::fail_female ||
                              a.category == AuditCategory::fail_male;
    if (needs_gender && !a.annotated_gender) {
      throw IngestError(where() + "category requires annotatedGender");
    }
    if (a.category == AuditCategory::cannot_discern_gender && a.annotated_gender) {
      throw IngestError(where() + "cannot_discern_gender must not carry a gender");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string confusion_csv(const ConfusionStats& stats) {
  csv::Writer w({"gender", "precision", "recall", "f1", "support"});
  for (const auto& [name, s] :
       {std::pair{"male", stats.male}, std::pair{"female", stats.female}}) {
    w.row({name, csv::format_double(s.precision), csv::format_double(s.recall),
           csv::format_double(s.f1), std::to_string(s.support)});
  }
  return w.str();
}

std::string error_census_csv(const ErrorCensus& census) {
  csv::Writer w({"scope", "category", "count", "percent"});
  const auto emit = [&](const std::string& scope, const std::vector<CensusEntry>& entries) {
    for (const auto& e : entries) {
      w.row({scope, std::string(to_string(e.category)), std::to_string(e.count),
             csv::format_fixed(e.percent, 1)});
    }
  };
  emit("all", census.overall);
  for (const auto& [name, entries] : census.by_group) emit(name, entries);
  return w.str();
}

}  // namespace cfprobe
