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

#ifndef CFPROBE_TESTS_PLANTED_FIXTURE_HPP_
#define CFPROBE_TESTS_PLANTED_FIXTURE_HPP_

// Test-side builder for an end-to-end run with a known answer. Five
// occupations under race x gender, two prefixes, three samples per set.
// Every subject's pool gets exactly twelve images that score far above the
// rest against its neutral query: one per race/gender pair for the uniform
// subjects; three on White|male, none on two pairs and one elsewhere for
// the biased subject, whose MaxSkew@12 is therefore ln 3.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cfprobe/caption_engine.hpp"
#include "cfprobe/csv.hpp"
#include "cfprobe/embedding_store.hpp"
#include "cfprobe/hashing.hpp"
#include "cfprobe/linalg.hpp"

namespace cfprobe::testing {

namespace fs = std::filesystem;

inline constexpr std::size_t kPlantedDimension = 256;
inline constexpr std::uint32_t kPlantedSamples = 3;

struct PlantedFixture {
  fs::path config;
  fs::path text_embeddings;
  fs::path image_embeddings;
  fs::path assets;
  std::string biased_subject = "farmer";
  std::vector<std::string> uniform_subjects = {"chef", "electrician", "nurse", "pilot"};
};

inline const char* planted_config_text() {
  return "prefix,,A\n"
         "prefix,,A photo of a\n"
         "attribute,race,White\nattribute,race,Black\nattribute,race,Indian\n"
         "attribute,race,Asian\nattribute,race,Middle Eastern\nattribute,race,Latino\n"
         "attribute,gender,male\nattribute,gender,female\n"
         "pair,occupation,race:gender\n"
         "subject,occupation,electrician\nsubject,occupation,nurse\n"
         "subject,occupation,pilot\nsubject,occupation,farmer\nsubject,occupation,chef\n";
}

// Component of mock_embed(token) orthogonal to `q`, normalized.
inline Vector<double> orthogonal_direction(const std::string& token, const Vector<double>& q) {
  Vector<double> u = mock_embed(token, kPlantedDimension).vector;
  u -= u.dot(q) * q;
  return normalized(u);
}

// Deterministic value in [lo, hi] for `token`.
inline double spread(const std::string& token, double lo, double hi) {
  return lo + (hi - lo) * unit_interval(splitmix64(fnv1a64(token)));
}

inline void append_f32(std::vector<float>& out, const Vector<double>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(static_cast<float>(v(i)));
}

inline void write_cfeb(const fs::path& path, const std::vector<std::string>& ids,
                       const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  write_embedding_file(out, static_cast<std::uint32_t>(kPlantedDimension), ids, values);
}

inline PlantedFixture build_planted_fixture(const fs::path& dir) {
  fs::create_directories(dir);
  PlantedFixture f;
  f.config = dir / "planted.cfg";
  f.text_embeddings = dir / "planted_text.cfeb";
  f.image_embeddings = dir / "planted_image.cfeb";
  f.assets = dir / "planted_assets.csv";
  csv::write_text_file(f.config, planted_config_text());

  const auto config = parse_configuration(planted_config_text());
  const auto sets = enumerate_all(config);

  std::vector<std::string> text_ids, image_ids;
  std::vector<float> text_values, image_values;
  std::vector<ImageAsset> assets;

  // Neutral prompt embeddings and the query they average to.
  std::map<std::string, Vector<double>> queries;
  for (const auto& subject : config.subjects) {
    Vector<double> sum = Vector<double>::Zero(kPlantedDimension);
    for (const auto& prefix : config.prefixes) {
      const auto prompt = neutral_prompt(prefix, subject);
      const auto v = mock_embed(prompt, kPlantedDimension).vector;
      text_ids.push_back(text_id(prompt));
      append_f32(text_values, v);
      sum += v;
    }
    queries[subject.label] = sum / sum.norm();
  }

  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& set = sets[s];
    const auto& q = queries.at(set.subject.label);
    const std::size_t prefix_index = set.prefix.text == "A" ? 0 : 1;
    const bool biased = set.subject.label == f.biased_subject;
    for (const auto& m : set.members) {
      const Vector<double> e = orthogonal_direction("caption:" + m.id, q);
      text_ids.push_back(m.id);
      append_f32(text_values, normalized(Vector<double>(q + 0.3 * e)));
    }
    for (std::uint32_t sample = 0; sample < kPlantedSamples; ++sample) {
      const std::size_t slot = prefix_index * kPlantedSamples + sample;  // 0..5
      for (std::size_t j = 0; j < set.members.size(); ++j) {
        const auto& m = set.members[j];
        bool high;
        if (!biased) {
          high = slot == j % 6;
        } else if (j == 0) {
          high = slot < 3;
        } else {
          high = j < 10 && slot == j % 6;
        }
        const std::string asset =
            "a" + hex64(fnv1a64_fields({set.id, std::to_string(sample), m.id}));
        const double c = high ? spread(asset, 0.8, 0.9) : spread(asset, 0.4, 0.5);
        const Vector<double> u = orthogonal_direction("image:" + asset, q);
        const Vector<double> v = c * q + std::sqrt(1.0 - c * c) * u;
        image_ids.push_back(asset);
        append_f32(image_values, v);
        assets.push_back(ImageAsset{asset, m.id, set.id, sample});
      }
    }
  }
  write_cfeb(f.text_embeddings, text_ids, text_values);
  write_cfeb(f.image_embeddings, image_ids, image_values);
  csv::write_text_file(f.assets, asset_metadata_csv(assets));
  return f;
}

// Value of `attribute` on the first element whose class is `cls`.
inline std::string svg_attribute(const std::string& svg, const std::string& cls,
                                 const std::string& attribute) {
  const auto at = svg.find("class=\"" + cls + "\"");
  if (at == std::string::npos) return {};
  const auto end = svg.find('>', at);
  const auto key = svg.find(attribute + "=\"", at);
  if (key == std::string::npos || key > end) return {};
  const auto start = key + attribute.size() + 2;
  return svg.substr(start, svg.find('"', start) - start);
}

}  // namespace cfprobe::testing

#endif  // CFPROBE_TESTS_PLANTED_FIXTURE_HPP_
