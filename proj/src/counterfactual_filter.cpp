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

#include "cfprobe/counterfactual_filter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include "cfprobe/csv.hpp"

namespace cfprobe {

double ScoredSample::min_member_cosine() const {
  if (member_cosines.empty()) return std::numeric_limits<double>::quiet_NaN();
  return *std::min_element(member_cosines.begin(), member_cosines.end());
}

std::vector<RetentionDecision> select_and_filter(std::span<const ScoredSample> samples,
                                                 const FilterOptions& options) {
  std::vector<RetentionDecision> decisions;
  decisions.reserve(samples.size());
  std::map<std::string, std::vector<std::size_t>> groups;
  for (const auto& s : samples) {
    RetentionDecision d{s.set_id, s.sample_index, false, s.min_member_cosine(),
                        s.directional_score};
    const bool passes = !s.member_cosines.empty() &&
                        std::all_of(s.member_cosines.begin(), s.member_cosines.end(),
                                    [&](double c) { return c >= options.min_cosine; }) &&
                        std::isfinite(s.directional_score);
    if (passes) {
      groups[options.group_key ? options.group_key(s) : s.set_id].push_back(
          decisions.size());
    }
    decisions.push_back(std::move(d));
  }

  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const auto& x = decisions[a];
      const auto& y = decisions[b];
      if (x.directional_score != y.directional_score) {
        return x.directional_score > y.directional_score;
      }
      if (x.sample_index != y.sample_index) return x.sample_index < y.sample_index;
      return x.set_id < y.set_id;
    });
    const std::size_t n = std::min(options.keep, members.size());
    for (std::size_t i = 0; i < n; ++i) decisions[members[i]].retained = true;
  }

  std::sort(decisions.begin(), decisions.end(), [](const auto& a, const auto& b) {
    if (a.set_id != b.set_id) return a.set_id < b.set_id;
    return a.sample_index < b.sample_index;
  });
  return decisions;
}

std::string retention_report_csv(std::span<const RetentionDecision> decisions) {
  csv::Writer w({"setId", "sampleIndex", "retained", "minMemberCosine",
                 "directionalScore"});
  for (const auto& d : decisions) {
    w.row({d.set_id, std::to_string(d.sample_index), d.retained ? "true" : "false",
           csv::format_double(d.min_member_cosine),
           csv::format_double(d.directional_score)});
  }
  return w.str();
}

std::vector<RetentionDecision> parse_retention_report(std::string_view text,
                                                      std::string_view source_name) {
  const auto table = csv::parse(text, source_name);
  const auto set_col = table.column("setId");
  const auto idx_col = table.column("sampleIndex");
  const auto ret_col = table.column("retained");
  const auto min_col = table.column("minMemberCosine");
  const auto dir_col = table.column("directionalScore");
  std::vector<RetentionDecision> out;
  for (const auto& row : table.rows) {
    RetentionDecision d;
    d.set_id = row[set_col];
    const auto& idx = row[idx_col];
    if (std::from_chars(idx.data(), idx.data() + idx.size(), d.sample_index).ec !=
        std::errc()) {
      throw IngestError(std::string(source_name) + ": bad sampleIndex for " + d.set_id);
    }
    if (row[ret_col] != "true" && row[ret_col] != "false") {
      throw IngestError(std::string(source_name) + ": retained must be true or false");
    }
    d.retained = row[ret_col] == "true";
    d.min_member_cosine = csv::parse_double(row[min_col]);
    d.directional_score = csv::parse_double(row[dir_col]);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace cfprobe
