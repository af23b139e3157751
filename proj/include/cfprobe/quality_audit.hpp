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

#ifndef CFPROBE_QUALITY_AUDIT_HPP_
#define CFPROBE_QUALITY_AUDIT_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfprobe/linalg.hpp"

namespace cfprobe {

enum class Gender : std::uint8_t { male, female };
enum class GenderPrediction : std::uint8_t { male, female, undetermined };
enum class AuditCategory : std::uint8_t {
  good,
  cannot_discern_gender,
  fail_female,
  fail_male,
  out_of_frame,
};

inline constexpr std::string_view kDefaultMaleQuery = "A male person";
inline constexpr std::string_view kDefaultFemaleQuery = "A female person";

std::string_view to_string(Gender g);
std::string_view to_string(GenderPrediction p);
std::string_view to_string(AuditCategory c);
AuditCategory parse_audit_category(std::string_view name);

struct AuditAnnotation {
  std::string asset_id;
  AuditCategory category = AuditCategory::good;
  // Present when the annotator could tell the depicted gender.
  std::optional<Gender> annotated_gender;
};

// Index of the query with the highest cosine to `image`, or nullopt when the
// top score is shared.
template <typename D, typename Scalar>
std::optional<std::size_t> predict_label(const Eigen::MatrixBase<D>& image,
                                         std::span<const Vector<Scalar>> queries) {
  std::optional<std::size_t> best;
  double best_score = 0.0;
  bool tied = false;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const double s = static_cast<double>(unit_cosine(image, queries[i]));
    if (!best || s > best_score) {
      best = i;
      best_score = s;
      tied = false;
    } else if (s == best_score) {
      tied = true;
    }
  }
  if (tied) return std::nullopt;
  return best;
}

template <typename I, typename M, typename F>
GenderPrediction predict_gender(const Eigen::MatrixBase<I>& image,
                                const Eigen::MatrixBase<M>& male_query,
                                const Eigen::MatrixBase<F>& female_query) {
  const double male = static_cast<double>(unit_cosine(image, male_query));
  const double female = static_cast<double>(unit_cosine(image, female_query));
  if (male > female) return GenderPrediction::male;
  if (male < female) return GenderPrediction::female;
  return GenderPrediction::undetermined;
}

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ConfusionStats {
  ClassStats male;
  ClassStats female;
  std::size_t evaluated = 0;
};

// Scores predictions against annotations with a known gender. Undetermined
// predictions count against the true class's recall and toward no class's
// precision.
ConfusionStats confusion_stats(const std::map<std::string, GenderPrediction>& predictions,
                               std::span<const AuditAnnotation> annotations);

struct CensusEntry {
  AuditCategory category;
  std::size_t count = 0;
  double percent = 0.0;
};

struct ErrorCensus {
  std::size_t total = 0;
  std::vector<CensusEntry> overall;
  // Per group (e.g. "White/female"), groups in lexicographic order.
  std::vector<std::pair<std::string, std::vector<CensusEntry>>> by_group;
};

// Group labels come from `group_of`; assets it maps to nullopt only count
// toward the overall table.
ErrorCensus error_census(
    std::span<const AuditAnnotation> annotations,
    const std::function<std::optional<std::string>(std::string_view)>& group_of = {});

// Header "assetId,category,annotatedGender".
std::vector<AuditAnnotation> parse_annotations(std::string_view text,
                                               std::string_view source_name);
// Header "gender,precision,recall,f1,support".
std::string confusion_csv(const ConfusionStats& stats);
// Header "scope,category,count,percent"; overall rows use scope "all".
std::string error_census_csv(const ErrorCensus& census);

}  // namespace cfprobe

#endif  // CFPROBE_QUALITY_AUDIT_HPP_
