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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cfprobe/errors.hpp"
#include "cfprobe/linalg.hpp"

namespace cfprobe {
namespace {

using Vec = Vector<double>;

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Plain-loop cosine of (b - a) against (d - c).
double oracle_direction(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  double dot = 0, n1 = 0, n2 = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = b(i) - a(i), y = d(i) - c(i);
    dot += x * y;
    n1 += x * x;
    n2 += y * y;
  }
  return dot / std::sqrt(n1 * n2);
}

ScoredSample sample(std::string set, std::uint32_t idx, std::vector<double> cosines,
                    double score) {
  return {std::move(set), idx, std::move(cosines), score};
}

TEST(CaptionImageSimilarity, DotProduct) {
  EXPECT_DOUBLE_EQ(caption_image_similarity(vec({0.6, 0.8}), vec({0.6, 0.8})), 1.0);
  EXPECT_DOUBLE_EQ(caption_image_similarity(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(caption_image_similarity(vec({0.6, 0.8}), vec({1, 0})), 0.6);
  EXPECT_THROW(caption_image_similarity(vec({1, 0}), vec({1, 0, 0})), DimensionMismatch);
}

TEST(DirectionalSimilarity, IdenticalAndOrthogonalDirections) {
  EXPECT_NEAR(directional_similarity(vec({0, 0}), vec({1, 2}), vec({3, 3}), vec({4, 5})), 1.0,
              1e-15);
  EXPECT_NEAR(directional_similarity(vec({0, 0}), vec({1, 0}), vec({0, 0}), vec({0, 1})), 0.0,
              1e-15);
  EXPECT_THROW(directional_similarity(vec({1, 1}), vec({1, 1}), vec({0, 0}), vec({0, 1})),
               DegenerateInputError);
  EXPECT_THROW(directional_similarity(vec({0, 0}), vec({1, 1}), vec({0, 1}), vec({0, 1})),
               DegenerateInputError);
}

TEST(SetDirectionalScore, TwoMembersEqualsPairScore) {
  const std::vector<Vec> images = {vec({1, 0, 0}), vec({0.2, 0.9, 0.1})};
  const std::vector<Vec> texts = {vec({0.7, 0.7, 0}), vec({0, 0.3, 0.9})};
  EXPECT_NEAR(set_directional_score<double>(images, texts),
              oracle_direction(images[0], images[1], texts[0], texts[1]), 1e-15);
}

TEST(SetDirectionalScore, ThreeMembersIsMeanOfPairs) {
  const double s = (1.0 + std::sqrt(3.0)) / 2.0;
  const std::vector<Vec> texts = {vec({0, 0}), vec({1, 0}), vec({0, 1})};
  const std::vector<Vec> images = {vec({0, 0}), vec({1, 0}), vec({1 + s, s})};
  EXPECT_NEAR(oracle_direction(images[0], images[1], texts[0], texts[1]), 1.0, 1e-12);
  EXPECT_NEAR(oracle_direction(images[0], images[2], texts[0], texts[2]), 0.5, 1e-12);
  EXPECT_NEAR(oracle_direction(images[1], images[2], texts[1], texts[2]), 0.0, 1e-12);
  EXPECT_NEAR(set_directional_score<double>(images, texts), 0.5, 1e-12);
}

TEST(SetDirectionalScore, MatchesPairwiseOracleOnRandomSets) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const int members = 2 + trial % 7;
    const int d = 3 + trial % 5;
    std::vector<Vec> images, texts;
    for (int m = 0; m < members; ++m) {
      Vec a(d), b(d);
      for (int i = 0; i < d; ++i) {
        a(i) = normal(rng);
        b(i) = normal(rng);
      }
      images.push_back(normalized(a));
      texts.push_back(normalized(b));
    }
    double sum = 0;
    int pairs = 0;
    for (int i = 0; i < members; ++i) {
      for (int j = i + 1; j < members; ++j) {
        sum += oracle_direction(images[i], images[j], texts[i], texts[j]);
        ++pairs;
      }
    }
    EXPECT_NEAR(set_directional_score<double>(images, texts), sum / pairs, 1e-12);
  }
}

TEST(SetDirectionalScore, EqualDiffsScoreOneAndDegeneratePairsSkipped) {
  const std::vector<Vec> texts = {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})};
  const Vec shift = vec({0.3, -0.2, 0.5});
  std::vector<Vec> images;
  for (const auto& t : texts) images.push_back(t + shift);
  EXPECT_NEAR(set_directional_score<double>(images, texts), 1.0, 1e-12);

  // Members 0 and 1 share an image, so their pair is skipped.
  const std::vector<Vec> collapsed = {vec({1, 0, 0}), vec({1, 0, 0}), vec({0, 0, 1})};
  const double expected = (oracle_direction(collapsed[0], collapsed[2], texts[0], texts[2]) +
                           oracle_direction(collapsed[1], collapsed[2], texts[1], texts[2])) /
                          2.0;
  EXPECT_NEAR(set_directional_score<double>(collapsed, texts), expected, 1e-12);

  const std::vector<Vec> all_same = {vec({1, 0, 0}), vec({1, 0, 0})};
  const std::vector<Vec> two_texts = {texts[0], texts[1]};
  EXPECT_THROW(set_directional_score<double>(all_same, two_texts), DegenerateInputError);
  const std::vector<Vec> one = {texts[0]};
  EXPECT_THROW(set_directional_score<double>(one, one), ArgumentError);
}

TEST(SelectAndFilter, DiscardsLowMemberCosine) {
  const std::vector<ScoredSample> samples = {sample("s", 0, {0.5, 0.19}, 0.9),
                                             sample("s", 1, {0.2, 0.3}, 0.1)};
  const auto d = select_and_filter(samples);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_FALSE(d[0].retained);
  EXPECT_TRUE(d[1].retained);
}

TEST(SelectAndFilter, KeepsTenBestOfTwelve) {
  std::vector<ScoredSample> samples;
  for (std::uint32_t i = 0; i < 12; ++i) samples.push_back(sample("s", i, {0.5}, 0.1 * i));
  const auto d = select_and_filter(samples);
  ASSERT_EQ(d.size(), 12u);
  EXPECT_FALSE(d[0].retained);
  EXPECT_FALSE(d[1].retained);
  for (std::size_t i = 2; i < 12; ++i) EXPECT_TRUE(d[i].retained) << i;
}

TEST(SelectAndFilter, KeepsAllWhenFewerThanLimit) {
  std::vector<ScoredSample> samples;
  for (std::uint32_t i = 0; i < 3; ++i) samples.push_back(sample("s", i, {0.5}, -0.3));
  for (const auto& d : select_and_filter(samples)) EXPECT_TRUE(d.retained);
}

TEST(SelectAndFilter, TiesGoToLowerSampleIndex) {
  std::vector<ScoredSample> samples;
  for (std::uint32_t i = 0; i < 4; ++i) samples.push_back(sample("s", 3 - i, {0.5}, 0.7));
  FilterOptions options;
  options.keep = 2;
  const auto d = select_and_filter(samples, options);
  EXPECT_TRUE(d[0].retained);
  EXPECT_TRUE(d[1].retained);
  EXPECT_FALSE(d[2].retained);
  EXPECT_FALSE(d[3].retained);
}

TEST(SelectAndFilter, UnscorableSamplesAreDropped) {
  const std::vector<ScoredSample> samples = {
      sample("s", 0, {}, 0.9), sample("s", 1, {0.9, 0.9}, std::nan("")),
      sample("s", 2, {0.9, 0.9}, 0.0)};
  const auto d = select_and_filter(samples);
  EXPECT_FALSE(d[0].retained);
  EXPECT_FALSE(d[1].retained);
  EXPECT_TRUE(d[2].retained);
}

TEST(SelectAndFilter, GroupKeyPoolsSets) {
  std::vector<ScoredSample> samples;
  for (std::uint32_t i = 0; i < 6; ++i) {
    samples.push_back(sample("a", i, {0.5}, 0.1 * i));
    samples.push_back(sample("b", i, {0.5}, 0.1 * i + 0.05));
  }
  FilterOptions options;
  options.keep = 4;
  options.group_key = [](const ScoredSample&) { return std::string("all"); };
  std::size_t kept = 0;
  for (const auto& d : select_and_filter(samples, options)) {
    if (d.retained) {
      ++kept;
      EXPECT_GE(d.sample_index, 4u);
    }
  }
  EXPECT_EQ(kept, 4u);
}

class FilterProperties : public ::testing::Test {
 protected:
  std::vector<ScoredSample> random_samples(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> cos(0.1, 0.6), score(-1, 1);
    std::vector<ScoredSample> out;
    for (int s = 0; s < 8; ++s) {
      for (std::uint32_t i = 0; i < 30; ++i) {
        std::vector<double> c = {cos(rng), cos(rng), cos(rng)};
        double sc = std::round(score(rng) * 10) / 10;  // coarse to force ties
        out.push_back(sample("set" + std::to_string(s), i, c, sc));
      }
    }
    return out;
  }
};

TEST_F(FilterProperties, MonotoneInThreshold) {
  const auto samples = random_samples(3);
  std::size_t previous = samples.size() + 1;
  for (double t = 0.0; t <= 0.7; t += 0.05) {
    FilterOptions o;
    o.min_cosine = t;
    std::size_t kept = 0;
    for (const auto& d : select_and_filter(samples, o)) kept += d.retained;
    EXPECT_LE(kept, previous) << t;
    previous = kept;
  }
}

TEST_F(FilterProperties, PermutationInvariant) {
  auto samples = random_samples(4);
  const auto reference = retention_report_csv(select_and_filter(samples));
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(samples.begin(), samples.end(), rng);
    EXPECT_EQ(retention_report_csv(select_and_filter(samples)), reference);
  }
}

TEST(RetentionReport, RoundTrip) {
  const std::vector<ScoredSample> samples = {sample("s", 0, {0.5, 0.25}, 0.125),
                                             sample("s", 1, {0.1}, std::nan(""))};
  const auto report = retention_report_csv(select_and_filter(samples));
  EXPECT_EQ(report,
            "setId,sampleIndex,retained,minMemberCosine,directionalScore\n"
            "s,0,true,0.25,0.125\n"
            "s,1,false,0.1,nan\n");
  const auto parsed = parse_retention_report(report, "r");
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_TRUE(parsed[0].retained);
  EXPECT_TRUE(std::isnan(parsed[1].directional_score));
  EXPECT_EQ(retention_report_csv(parsed), report);
}

}  // namespace
}  // namespace cfprobe
