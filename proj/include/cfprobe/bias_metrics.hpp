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

#ifndef CFPROBE_BIAS_METRICS_HPP_
#define CFPROBE_BIAS_METRICS_HPP_

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cfprobe/caption_engine.hpp"
#include "cfprobe/retrieval.hpp"

namespace cfprobe {

// Skew of a pair that never appears in the top K.
inline constexpr double kNegInfSkew = -std::numeric_limits<double>::infinity();

inline bool is_neg_inf_skew(double skew) { return std::isinf(skew) && skew < 0; }

// Key of a joint attribute assignment, e.g. "White|male". Marginal keys
// are the bare label.
std::string pair_key(std::string_view a, std::string_view b);

// Desired proportion per attribute key. Proportions are positive and sum to
// one; key order is preserved for reporting.
class DesiredDistribution {
 public:
  explicit DesiredDistribution(std::vector<std::pair<std::string, double>> proportions);

  static DesiredDistribution uniform(std::span<const std::string> keys);

  bool contains(std::string_view key) const;
  double proportion(std::string_view key) const;
  const std::vector<std::pair<std::string, double>>& entries() const noexcept {
    return entries_;
  }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, double>> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// log(actual / desired) for one key over the retrieved keys.
double skew_at_k(std::span<const std::string> retrieved_keys, std::string_view key,
                 const DesiredDistribution& desired);

// Max of skew_at_k over every key of `desired`. Every retrieved key must be
// part of `desired`.
double max_skew_at_k(std::span<const std::string> retrieved_keys,
                     const DesiredDistribution& desired);

// The two attribute values carried by an asset's caption.
struct AssetAttributes {
  AttributeValue first;
  AttributeValue second;

  // Label for `category`, or nullptr when the asset does not carry it.
  const std::string* label_of(AttributeCategory category) const;
};

using AssetAttributeIndex = std::unordered_map<std::string, AssetAttributes>;

// Keys of the ranked assets: joint keys when `second` is set, else the
// label of `first`.
std::vector<std::string> ranked_keys(const RetrievalResult& result,
                                     const AssetAttributeIndex& attributes,
                                     AttributeCategory first,
                                     std::optional<AttributeCategory> second);

struct SkewReport {
  std::string subject;
  std::string category_a;
  // Empty for a single-category (conditional) report.
  std::string category_b;
  std::size_t k = 0;
  // One entry per desired key, in desired order.
  std::vector<std::pair<std::string, double>> skews;
  double max_skew = 0.0;
  std::vector<std::pair<std::string, double>> proportions;
};

SkewReport skew_report(std::string subject, std::string category_a,
                       std::string category_b, std::size_t k,
                       std::span<const std::string> retrieved_keys,
                       const DesiredDistribution& desired);

// Restricts `rows` to assets carrying `filter`, retrieves the top K for
// `query`, and measures skew over the labels of `measured`.
template <typename Derived, typename Scalar>
SkewReport conditional_skew(const Eigen::MatrixBase<Derived>& query,
                            const BasicEmbeddingStore<Scalar>& pool,
                            std::span<const std::size_t> rows,
                            const AssetAttributeIndex& attributes,
                            const AttributeValue& filter, AttributeCategory measured,
                            std::size_t k, const DesiredDistribution& desired,
                            std::string subject = {}) {
  std::vector<std::size_t> filtered;
  for (std::size_t row : rows) {
    const auto it = attributes.find(pool.id(row));
    if (it == attributes.end()) continue;
    const std::string* label = it->second.label_of(filter.category);
    if (label && *label == filter.label) filtered.push_back(row);
  }
  if (filtered.empty()) {
    throw ArgumentError("no pool assets carry " + std::string(to_string(filter.category)) +
                        "=" + filter.label);
  }
  const auto result = top_k(query, pool, filtered, k);
  const auto keys = ranked_keys(result, attributes, measured, std::nullopt);
  return skew_report(std::move(subject), std::string(to_string(measured)), "", k, keys,
                     desired);
}

// Joint proportions over labels_a x labels_b with their marginals.
struct ProportionBreakdown {
  std::vector<std::string> labels_a;
  std::vector<std::string> labels_b;
  Eigen::MatrixXd joint;
  Eigen::VectorXd marginal_a;
  Eigen::VectorXd marginal_b;
};

ProportionBreakdown proportion_breakdown(std::span<const AssetAttributes> retrieved,
                                         AttributeCategory category_a,
                                         std::span<const std::string> labels_a,
                                         AttributeCategory category_b,
                                         std::span<const std::string> labels_b);

struct DistributionSummary {
  std::size_t count = 0;
  std::size_t neg_inf_count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::string argmin_subject;
  std::string argmax_subject;
};

// Linear-interpolation quantile of sorted values, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

// Summary of max_skew over reports; -inf values are only counted.
DistributionSummary aggregate_across_subjects(std::span<const SkewReport> reports);

// Header "subject,catA,catB,pair,skew".
std::string skew_csv(std::span<const SkewReport> reports);
// Header "subject,maxskew".
std::string max_skew_csv(std::span<const SkewReport> reports);
// Header "group,mean,min,q1,median,q3,max,argmin_subject,argmax_subject,neg_inf_count".
std::string aggregate_csv(std::span<const std::pair<std::string, DistributionSummary>> groups);

// Desired-distribution overrides, header "cat_a,cat_b,pair,proportion".
struct DesiredOverride {
  CategoryPair categories;
  DesiredDistribution desired;
};
std::vector<DesiredOverride> parse_desired_overrides(std::string_view text,
                                                     std::string_view source_name);

}  // namespace cfprobe

#endif  // CFPROBE_BIAS_METRICS_HPP_
