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

#include "cfprobe/bias_metrics.hpp"

#include <algorithm>
#include <numeric>

#include "cfprobe/csv.hpp"
#include "cfprobe/errors.hpp"

namespace cfprobe {
namespace {

constexpr double kSumTolerance = 1e-9;

std::size_t count_key(std::span<const std::string> keys, std::string_view key) {
  return static_cast<std::size_t>(std::count(keys.begin(), keys.end(), key));
}

}  // namespace

std::string pair_key(std::string_view a, std::string_view b) {
  std::string key(a);
  key += '|';
  key += b;
  return key;
}

DesiredDistribution::DesiredDistribution(
    std::vector<std::pair<std::string, double>> proportions)
    : entries_(std::move(proportions)) {
  if (entries_.empty()) throw ArgumentError("desired distribution is empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [key, p] = entries_[i];
    if (!(p > 0.0) || p > 1.0) {
      throw ArgumentError("desired proportion for '" + key + "' must be in (0, 1]");
    }
    if (!index_.emplace(key, i).second) {
      throw ArgumentError("duplicate desired key '" + key + "'");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ArgumentError("desired proportions sum to " + csv::format_double(sum) +
                        ", expected 1");
  }
}

DesiredDistribution DesiredDistribution::uniform(std::span<const std::string> keys) {
  std::vector<std::pair<std::string, double>> entries;
  const double p = 1.0 / static_cast<double>(keys.size());
  for (const auto& k : keys) entries.emplace_back(k, p);
  return DesiredDistribution(std::move(entries));
}

bool DesiredDistribution::contains(std::string_view key) const {
  return index_.find(key) != index_.end();
}

double DesiredDistribution::proportion(std::string_view key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) {
    throw ArgumentError("key '" + std::string(key) + "' is not in the desired distribution");
  }
  return entries_[it->second].second;
}

double skew_at_k(std::span<const std::string> retrieved_keys, std::string_view key,
                 const DesiredDistribution& desired) {
  const double target = desired.proportion(key);
  if (retrieved_keys.empty()) throw ArgumentError("skew of an empty retrieval");
  const std::size_t hits = count_key(retrieved_keys, key);
  if (hits == 0) return kNegInfSkew;
  const double actual =
      static_cast<double>(hits) / static_cast<double>(retrieved_keys.size());
  return std::log(actual / target);
}

double max_skew_at_k(std::span<const std::string> retrieved_keys,
                     const DesiredDistribution& desired) {
  for (const auto& k : retrieved_keys) {
    if (!desired.contains(k)) {
      throw ArgumentError("retrieved key '" + k + "' is not in the desired distribution");
    }
  }
  double best = kNegInfSkew;
  for (const auto& [key, p] : desired.entries()) {
    best = std::max(best, skew_at_k(retrieved_keys, key, desired));
  }
  return best;
}

const std::string* AssetAttributes::label_of(AttributeCategory category) const {
  if (first.category == category) return &first.label;
  if (second.category == category) return &second.label;
  return nullptr;
}

std::vector<std::string> ranked_keys(const RetrievalResult& result,
                                     const AssetAttributeIndex& attributes,
                                     AttributeCategory first,
                                     std::optional<AttributeCategory> second) {
  std::vector<std::string> keys;
  keys.reserve(result.ranked.size());
  for (const auto& item : result.ranked) {
    const auto it = attributes.find(item.asset_id);
    if (it == attributes.end()) {
      throw ArgumentError("no attributes for asset '" + item.asset_id + "'");
    }
    const std::string* a = it->second.label_of(first);
    const std::string* b = second ? it->second.label_of(*second) : nullptr;
    if (!a || (second && !b)) {
      throw ArgumentError("asset '" + item.asset_id + "' lacks a measured category");
    }
    keys.push_back(second ? pair_key(*a, *b) : *a);
  }
  return keys;
}

SkewReport skew_report(std::string subject, std::string category_a,
                       std::string category_b, std::size_t k,
                       std::span<const std::string> retrieved_keys,
                       const DesiredDistribution& desired) {
  SkewReport report;
  report.subject = std::move(subject);
  report.category_a = std::move(category_a);
  report.category_b = std::move(category_b);
  report.k = k;
  report.max_skew = max_skew_at_k(retrieved_keys, desired);
  const double n = static_cast<double>(retrieved_keys.size());
  for (const auto& [key, p] : desired.entries()) {
    report.skews.emplace_back(key, skew_at_k(retrieved_keys, key, desired));
    report.proportions.emplace_back(
        key, static_cast<double>(count_key(retrieved_keys, key)) / n);
  }
  return report;
}

ProportionBreakdown proportion_breakdown(std::span<const AssetAttributes> retrieved,
                                         AttributeCategory category_a,
                                         std::span<const std::string> labels_a,
                                         AttributeCategory category_b,
                                         std::span<const std::string> labels_b) {
  if (retrieved.empty()) throw ArgumentError("proportions of an empty retrieval");
  ProportionBreakdown out;
  out.labels_a.assign(labels_a.begin(), labels_a.end());
  out.labels_b.assign(labels_b.begin(), labels_b.end());
  out.joint = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels_a.size()),
                                    static_cast<Eigen::Index>(labels_b.size()));
  const auto position = [](std::span<const std::string> labels, const std::string* label) {
    if (!label) throw ArgumentError("retrieved asset lacks a breakdown category");
    const auto it = std::find(labels.begin(), labels.end(), *label);
    if (it == labels.end()) throw ArgumentError("unknown label '" + *label + "'");
    return static_cast<Eigen::Index>(it - labels.begin());
  };
  for (const auto& item : retrieved) {
    out.joint(position(labels_a, item.label_of(category_a)),
              position(labels_b, item.label_of(category_b))) += 1.0;
  }
  out.joint /= static_cast<double>(retrieved.size());
  out.marginal_a = out.joint.rowwise().sum();
  out.marginal_b = out.joint.colwise().sum().transpose();
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

DistributionSummary aggregate_across_subjects(std::span<const SkewReport> reports) {
  DistributionSummary s;
  std::vector<double> values;
  const SkewReport* lowest = nullptr;
  const SkewReport* highest = nullptr;
  for (const auto& r : reports) {
    if (is_neg_inf_skew(r.max_skew)) {
      ++s.neg_inf_count;
      continue;
    }
    values.push_back(r.max_skew);
    if (!lowest || r.max_skew < lowest->max_skew) lowest = &r;
    if (!highest || r.max_skew > highest->max_skew) highest = &r;
  }
  s.count = values.size();
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.mean = s.min = s.q1 = s.median = s.q3 = s.max = nan;
    return s;
  }
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  s.argmin_subject = lowest->subject;
  s.argmax_subject = highest->subject;
  return s;
}

std::string skew_csv(std::span<const SkewReport> reports) {
  csv::Writer w({"subject", "catA", "catB", "pair", "skew"});
  for (const auto& r : reports) {
    for (const auto& [key, skew] : r.skews) {
      w.row({r.subject, r.category_a, r.category_b, key, csv::format_double(skew)});
    }
  }
  return w.str();
}

std::string max_skew_csv(std::span<const SkewReport> reports) {
  csv::Writer w({"subject", "maxskew"});
  for (const auto& r : reports) w.row({r.subject, csv::format_double(r.max_skew)});
  return w.str();
}

std::string aggregate_csv(
    std::span<const std::pair<std::string, DistributionSummary>> groups) {
  csv::Writer w({"group", "mean", "min", "q1", "median", "q3", "max", "argmin_subject",
                 "argmax_subject", "neg_inf_count"});
  for (const auto& [name, s] : groups) {
    w.row({name, csv::format_double(s.mean), csv::format_double(s.min),
           csv::format_double(s.q1), csv::format_double(s.median),
           csv::format_double(s.q3), csv::format_double(s.max), s.argmin_subject,
           s.argmax_subject, std::to_string(s.neg_inf_count)});
  }
  return w.str();
}

std::vector<DesiredOverride> parse_desired_overrides(std::string_view text,
                                                     std::string_view source_name) {
  const auto table = csv::parse(text, source_name);
  const auto ca = table.column("cat_a");
  const auto cb = table.column("cat_b");
  const auto pk = table.column("pair");
  const auto pp = table.column("proportion");
  std::vector<std::pair<CategoryPair, std::vector<std::pair<std::string, double>>>> grouped;
  for (const auto& row : table.rows) {
    const CategoryPair cats{parse_category(row[ca]), parse_category(row[cb])};
    auto it = std::find_if(grouped.begin(), grouped.end(),
                           [&](const auto& g) { return g.first == cats; });
    if (it == grouped.end()) {
      grouped.push_back({cats, {}});
      it = std::prev(grouped.end());
    }
    it->second.emplace_back(row[pk], csv::parse_double(row[pp]));
  }
  std::vector<DesiredOverride> out;
  for (auto& [cats, entries] : grouped) {
    out.push_back(DesiredOverride{cats, DesiredDistribution(std::move(entries))});
  }
  return out;
}

}  // namespace cfprobe
