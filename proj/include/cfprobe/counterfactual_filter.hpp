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

#ifndef CFPROBE_COUNTERFACTUAL_FILTER_HPP_
#define CFPROBE_COUNTERFACTUAL_FILTER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfprobe/linalg.hpp"

namespace cfprobe {

inline constexpr double kDefaultMinCaptionImageCosine = 0.2;
inline constexpr std::size_t kDefaultKeepPerGroup = 10;

// Cosine between a caption embedding and its generated image; both unit.
template <typename A, typename B>
double caption_image_similarity(const Eigen::MatrixBase<A>& caption,
                                const Eigen::MatrixBase<B>& image) {
  return static_cast<double>(unit_cosine(caption, image));
}

// Mean directional similarity over all unordered member pairs (i, j) of one
// generated sample, using image_j - image_i against text_j - text_i. Pairs
// with a zero edit direction are skipped; throws DegenerateInputError when
// every pair is skipped.
template <typename Scalar>
double set_directional_score(std::span<const Vector<Scalar>> images,
                             std::span<const Vector<Scalar>> texts) {
  if (images.size() != texts.size()) {
    throw ArgumentError("image and text member counts differ");
  }
  if (images.size() < 2) throw ArgumentError("a set needs at least two members");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t j = i + 1; j < images.size(); ++j) {
      try {
        sum += directional_similarity(images[i], images[j], texts[i], texts[j]);
        ++used;
      } catch (const DegenerateInputError&) {
      }
    }
  }
  if (used == 0) throw DegenerateInputError("every member pair is degenerate");
  return sum / static_cast<double>(used);
}

struct ScoredSample {
  std::string set_id;
  std::uint32_t sample_index = 0;
  // Caption-image cosine per set member, in member order.
  std::vector<double> member_cosines;
  // NaN when the sample could not be scored.
  double directional_score = 0.0;

  double min_member_cosine() const;
};

struct FilterOptions {
  double min_cosine = kDefaultMinCaptionImageCosine;
  std::size_t keep = kDefaultKeepPerGroup;
  // Samples sharing a key compete for the `keep` slots. Empty means one
  // group per counterfactual set.
  std::function<std::string(const ScoredSample&)> group_key;
};

struct RetentionDecision {
  std::string set_id;
  std::uint32_t sample_index = 0;
  bool retained = false;
  double min_member_cosine = 0.0;
  double directional_score = 0.0;
};

// Drops samples with any member cosine below min_cosine (or no usable
// score), then keeps the `keep` best directional scores per group; ties go
// to the lower sample index. Output is sorted by (set_id, sample_index) and
// does not depend on input order.
std::vector<RetentionDecision> select_and_filter(std::span<const ScoredSample> samples,
                                                 const FilterOptions& options = {});

// Header "setId,sampleIndex,retained,minMemberCosine,directionalScore".
std::string retention_report_csv(std::span<const RetentionDecision> decisions);
std::vector<RetentionDecision> parse_retention_report(std::string_view text,
                                                      std::string_view source_name);

}  // namespace cfprobe

#endif  // CFPROBE_COUNTERFACTUAL_FILTER_HPP_
