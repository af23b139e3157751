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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cfprobe/errors.hpp"

namespace cfprobe {
namespace {

const double kLn2 = std::log(2.0);
const double kLn3 = std::log(3.0);

std::vector<std::string> twelve_keys() {
  std::vector<std::string> keys;
  for (const char* r : {"White", "Black", "Indian", "Asian", "Middle Eastern", "Latino"}) {
    for (const char* g : {"male", "female"}) keys.push_back(pair_key(r, g));
  }
  return keys;
}

// Expands per-key counts into a retrieved-key list.
std::vector<std::string> retrieved(const std::vector<std::string>& keys,
                                   const std::vector<int>& counts) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (int c = 0; c < counts[i]; ++c) out.push_back(keys[i]);
  }
  return out;
}

// Brute-force evaluation straight from the definition.
double oracle_skew(const std::vector<std::string>& topk, const std::string& key, double desired) {
  int hits = 0;
  for (const auto& k : topk) hits += (k == key);
  if (hits == 0) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(hits) / static_cast<double>(topk.size()) / desired);
}

TEST(SkewAtK, HandComputedValues) {
  const auto keys = twelve_keys();
  const auto desired = DesiredDistribution::uniform(keys);
  std::vector<int> counts(12, 1);
  counts[0] = 3;
  counts[10] = 0;
  counts[11] = 0;
  const auto top = retrieved(keys, counts);
  ASSERT_EQ(top.size(), 12u);
  EXPECT_NEAR(skew_at_k(top, keys[0], desired), kLn3, 1e-15);
  EXPECT_NEAR(skew_at_k(top, keys[1], desired), 0.0, 1e-15);
  EXPECT_TRUE(is_neg_inf_skew(skew_at_k(top, keys[10], desired)));
  EXPECT_NEAR(max_skew_at_k(top, desired), 1.0986122886681098, 1e-12);

  const auto uniform = retrieved(keys, std::vector<int>(12, 1));
  EXPECT_EQ(max_skew_at_k(uniform, desired), 0.0);
  EXPECT_THROW(skew_at_k(top, "Purple|male", desired), ArgumentError);
  EXPECT_THROW(skew_at_k({}, keys[0], desired), ArgumentError);
}

TEST(DesiredDistribution, Validation) {
  EXPECT_THROW(DesiredDistribution({}), ArgumentError);
  EXPECT_THROW(DesiredDistribution({{"a", 0.5}, {"b", 0.4}}), ArgumentError);
  EXPECT_THROW(DesiredDistribution({{"a", 0.5}, {"a", 0.5}}), ArgumentError);
  EXPECT_THROW(DesiredDistribution({{"a", 0.0}, {"b", 1.0}}), ArgumentError);
  const DesiredDistribution d({{"a", 0.25}, {"b", 0.75}});
  EXPECT_DOUBLE_EQ(d.proportion("b"), 0.75);
  EXPECT_FALSE(d.contains("c"));
}

TEST(MaxSkew, RandomFixturesMatchOracleAndBounds) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n_keys = 2 + rng() % 83;
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < n_keys; ++i) keys.push_back("k" + std::to_string(i));
    const bool uniform = trial % 2 == 0;
    std::vector<std::pair<std::string, double>> entries;
    std::vector<double> w(n_keys);
    double total = 0;
    for (auto& x : w) total += (x = 0.05 + std::uniform_real_distribution<double>(0, 1)(rng));
    for (std::size_t i = 0; i < n_keys; ++i) {
      entries.emplace_back(keys[i], uniform ? 1.0 / n_keys : w[i] / total);
    }
    const DesiredDistribution desired = uniform ? DesiredDistribution::uniform(keys)
                                                : DesiredDistribution(entries);
    const std::size_t k = 1 + rng() % 84;
    std::vector<std::string> top;
    for (std::size_t i = 0; i < k; ++i) top.push_back(keys[rng() % n_keys]);

    double oracle_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_keys; ++i) {
      const double expected = oracle_skew(top, keys[i], entries[i].second);
      const double got = skew_at_k(top, keys[i], desired);
      if (std::isinf(expected)) {
        EXPECT_TRUE(is_neg_inf_skew(got));
      } else {
        EXPECT_NEAR(got, expected, 1e-12);
      }
      oracle_max = std::max(oracle_max, expected);
    }
    const double max = max_skew_at_k(top, desired);
    EXPECT_NEAR(max, oracle_max, 1e-12);
    if (uniform) {
      EXPECT_GE(max, -1e-12);
      EXPECT_LE(max, std::log(static_cast<double>(n_keys)) + 1e-12);
    }
  }
}

TEST(MaxSkew, OrderAndRelabelingInvariance) {
  std::mt19937_64 rng(8);
  const auto keys = twelve_keys();
  const auto desired = DesiredDistribution::uniform(keys);
  std::vector<std::string> top;
  for (int i = 0; i < 12; ++i) top.push_back(keys[rng() % 12]);
  const double base = max_skew_at_k(top, desired);

  auto shuffled = top;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_EQ(max_skew_at_k(shuffled, desired), base);

  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> relabeled;
  for (const auto& key : top) {
    const auto idx = std::find(keys.begin(), keys.end(), key) - keys.begin();
    relabeled.push_back(keys[perm[idx]]);
  }
  EXPECT_NEAR(max_skew_at_k(relabeled, desired), base, 1e-15);

  auto doubled = top;
  doubled.insert(doubled.end(), top.begin(), top.end());
  for (const auto& key : keys) {
    const double a = skew_at_k(top, key, desired);
    const double b = skew_at_k(doubled, key, desired);
    if (is_neg_inf_skew(a)) {
      EXPECT_TRUE(is_neg_inf_skew(b));
    } else {
      EXPECT_NEAR(a, b, 1e-15);
    }
  }
}

class PoolFixture : public ::testing::Test {
 protected:
  // Six images of one subject: White and Black, male and female.
  void SetUp() override {
    const char* layout[][3] = {{"w_m1", "White", "male"},   {"w_m2", "White", "male"},
                             {"w_f1", "White", "female"}, {"b_m1", "Black", "male"},
                             {"b_f1", "Black", "female"}, {"b_f2", "Black", "female"}};
    std::vector<EmbeddingRecord> records;
    int i = 0;
    for (const auto& s : layout) {
      Vector<double> v = Vector<double>::Zero(8);
      v(0) = 1.0;
      v(1 + i) = 0.1 * (i + 1);
      ++i;
      records.push_back({s[0], EmbeddingKind::image, v});
      attributes.emplace(s[0], AssetAttributes{{AttributeCategory::race, s[1]},
                                               {AttributeCategory::gender, s[2]}});
    }
    pool = EmbeddingStore::from_records<double>(EmbeddingKind::image, 8, records);
    rows.resize(pool.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    query = Vector<double>::Zero(8);
    query(0) = 1.0;
  }

  EmbeddingStore pool = EmbeddingStore::from_records<double>(EmbeddingKind::image, 8,
                                                             std::span<const EmbeddingRecord>{});
  AssetAttributeIndex attributes;
  std::vector<std::size_t> rows;
  Vector<double> query;
  const std::vector<std::string> genders = {"male", "female"};
};

TEST_F(PoolFixture, ConditionalSkewOnlyMaleRetrieved) {
  const auto desired = DesiredDistribution::uniform(genders);
  // Query prefers male images among White: w_m1 and w_m2 have the largest
  // first component after normalization.
  const auto report = conditional_skew(query, pool, rows, attributes,
                                       {AttributeCategory::race, "White"},
                                       AttributeCategory::gender, 2, desired, "nurse");
  EXPECT_EQ(report.k, 2u);
  EXPECT_EQ(report.category_a, "gender");
  EXPECT_NEAR(report.max_skew, kLn2, 1e-15);

  const auto balanced = conditional_skew(query, pool, rows, attributes,
                                         {AttributeCategory::race, "Black"},
                                         AttributeCategory::gender, 3, desired);
  // Black pool: 1 male, 2 female, all retrieved at K=3.
  EXPECT_NEAR(balanced.max_skew, std::log((2.0 / 3.0) / 0.5), 1e-15);
  EXPECT_THROW(conditional_skew(query, pool, rows, attributes, {AttributeCategory::race, "Asian"},
                                AttributeCategory::gender, 2, desired),
               ArgumentError);
}

TEST_F(PoolFixture, ConditionalSkewEqualGendersIsZero) {
  const std::vector<std::size_t> two = {*pool.find("w_m1"), *pool.find("w_f1")};
  const auto report =
      conditional_skew(query, pool, two, attributes, {AttributeCategory::race, "White"},
                       AttributeCategory::gender, 2, DesiredDistribution::uniform(genders));
  EXPECT_EQ(report.max_skew, 0.0);
}

TEST_F(PoolFixture, RankedKeysJointAndMarginal) {
  const auto result = top_k(query, pool, 6);
  const auto joint = ranked_keys(result, attributes, AttributeCategory::race,
                                 AttributeCategory::gender);
  const auto marginal = ranked_keys(result, attributes, AttributeCategory::gender, std::nullopt);
  ASSERT_EQ(joint.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& a = attributes.at(result.ranked[i].asset_id);
    EXPECT_EQ(joint[i], a.first.label + "|" + a.second.label);
    EXPECT_EQ(marginal[i], a.second.label);
  }
}

TEST(ProportionBreakdown, SinglePairAndRandomRecounts) {
  const std::vector<std::string> races = {"White", "Black", "Asian"};
  const std::vector<std::string> genders = {"male", "female"};
  const AssetAttributes wm{{AttributeCategory::race, "White"}, {AttributeCategory::gender, "male"}};
  const std::vector<AssetAttributes> same(5, wm);
  const auto b = proportion_breakdown(same, AttributeCategory::race, races,
                                      AttributeCategory::gender, genders);
  EXPECT_EQ(b.joint(0, 0), 1.0);
  EXPECT_EQ(b.joint.sum(), 1.0);
  EXPECT_EQ(b.marginal_a(0), 1.0);
  EXPECT_EQ(b.marginal_b(1), 0.0);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AssetAttributes> items;
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      // Second attribute first to check category lookup is by name.
      items.push_back({{AttributeCategory::gender, genders[rng() % 2]},
                       {AttributeCategory::race, races[rng() % 3]}});
    }
    const auto p = proportion_breakdown(items, AttributeCategory::race, races,
                                        AttributeCategory::gender, genders);
    for (std::size_t r = 0; r < 3; ++r) {
      int count_r = 0;
      for (const auto& it : items) count_r += it.second.label == races[r];
      EXPECT_NEAR(p.marginal_a(r), static_cast<double>(count_r) / n, 1e-15);
      for (std::size_t g = 0; g < 2; ++g) {
        int count = 0;
        for (const auto& it : items) count += it.second.label == races[r] && it.first.label == genders[g];
        EXPECT_NEAR(p.joint(r, g), static_cast<double>(count) / n, 1e-15);
      }
    }
    for (std::size_t g = 0; g < 2; ++g) {
      int count_g = 0;
      for (const auto& it : items) count_g += it.first.label == genders[g];
      EXPECT_NEAR(p.marginal_b(g), static_cast<double>(count_g) / n, 1e-15);
    }
  }
}

SkewReport report_with(std::string subject, double max_skew) {
  SkewReport r;
  r.subject = std::move(subject);
  r.max_skew = max_skew;
  return r;
}

TEST(Aggregate, SingleReport) {
  const std::vector<SkewReport> one = {report_with("nurse", 0.4)};
  const auto s = aggregate_across_subjects(one);
  EXPECT_EQ(s.count, 1u);
  for (double v : {s.mean, s.min, s.q1, s.median, s.q3, s.max}) EXPECT_EQ(v, 0.4);
  EXPECT_EQ(s.argmin_subject, "nurse");
  EXPECT_EQ(s.argmax_subject, "nurse");
}

TEST(Aggregate, ThreeValues) {
  const std::vector<SkewReport> reports = {report_with("a", kLn2), report_with("b", 0.0),
                                           report_with("c", kLn3),
                                           report_with("d", kNegInfSkew)};
  const auto s = aggregate_across_subjects(reports);
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.neg_inf_count, 1u);
  EXPECT_EQ(s.min, 0.0);
  EXPECT_NEAR(s.max, 1.0986, 1e-4);
  EXPECT_NEAR(s.median, 0.6931, 1e-4);
  EXPECT_NEAR(s.q1, kLn2 / 2, 1e-15);
  EXPECT_NEAR(s.q3, (kLn2 + kLn3) / 2, 1e-15);
  EXPECT_NEAR(s.mean, (kLn2 + kLn3) / 3, 1e-15);
  EXPECT_EQ(s.argmin_subject, "b");
  EXPECT_EQ(s.argmax_subject, "c");
}

TEST(Aggregate, QuantileInterpolation) {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  EXPECT_EQ(quantile_sorted(v, 0.0), 1);
  EXPECT_EQ(quantile_sorted(v, 0.25), 2);
  EXPECT_EQ(quantile_sorted(v, 0.5), 3);
  EXPECT_EQ(quantile_sorted(v, 1.0), 5);
  const std::vector<double> w = {0, 10};
  EXPECT_DOUBLE_EQ(quantile_sorted(w, 0.3), 3.0);
}

TEST(Reports, CsvLayouts) {
  const auto desired = DesiredDistribution::uniform(std::vector<std::string>{"a|x", "b|x"});
  const std::vector<std::string> top = {"a|x", "a|x"};
  const auto r = skew_report("nurse", "race", "gender", 2, top, desired);
  const std::vector<SkewReport> reports = {r};
  EXPECT_EQ(skew_csv(reports),
            "subject,catA,catB,pair,skew\nnurse,race,gender,a|x,0.6931471805599453\n"
            "nurse,race,gender,b|x,-inf\n");
  EXPECT_EQ(max_skew_csv(reports), "subject,maxskew\nnurse,0.6931471805599453\n");
}

TEST(Reports, DesiredOverrides) {
  const auto overrides = parse_desired_overrides(
      "cat_a,cat_b,pair,proportion\nrace,gender,White|male,0.75\nrace,gender,White|female,0.25\n",
      "d.csv");
  ASSERT_EQ(overrides.size(), 1u);
  EXPECT_EQ(overrides[0].categories.first, AttributeCategory::race);
  EXPECT_DOUBLE_EQ(overrides[0].desired.proportion("White|male"), 0.75);
  EXPECT_THROW(parse_desired_overrides("cat_a,cat_b,pair,proportion\nrace,gender,x,0.5\n", "d"),
               ArgumentError);
}

}  // namespace
}  // namespace cfprobe
