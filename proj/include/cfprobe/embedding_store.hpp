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

#ifndef CFPROBE_EMBEDDING_STORE_HPP_
#define CFPROBE_EMBEDDING_STORE_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cfprobe/errors.hpp"
#include "cfprobe/linalg.hpp"

namespace cfprobe {

enum class EmbeddingKind : std::uint8_t { text, image };

std::string_view to_string(EmbeddingKind kind);

// Binary embedding file, all integers little-endian:
//   "CFEB" | u16 version | u32 dimension | u64 count |
//   count x ( u16 id_len | id bytes | dimension x f32 )
inline constexpr std::array<char, 4> kEmbeddingMagic{'C', 'F', 'E', 'B'};
inline constexpr std::uint16_t kEmbeddingFormatVersion = 1;

// Decoded file contents before normalization. Values are row-major.
struct RawEmbeddings {
  std::uint32_t dimension = 0;
  std::vector<std::string> ids;
  std::vector<float> values;
};

RawEmbeddings read_embedding_file(std::istream& in, std::string_view source_name);
RawEmbeddings read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(std::ostream& out, std::uint32_t dimension,
                          std::span<const std::string> ids,
                          std::span<const float> values);

template <typename Scalar>
struct BasicEmbeddingRecord {
  std::string id;
  EmbeddingKind kind = EmbeddingKind::text;
  Vector<Scalar> vector;
};
using EmbeddingRecord = BasicEmbeddingRecord<double>;

// Deterministic unit vector derived from a hash of `token`. Test double for a
// real encoder; identical on every platform.
EmbeddingRecord mock_embed(std::string_view token, std::size_t dimension,
                           EmbeddingKind kind = EmbeddingKind::text);

// Immutable collection of unit-norm embeddings sharing one dimension.
// Construction is the only mutation; every accessor is const, so a store can
// be shared across threads without locking.
template <typename Scalar>
class BasicEmbeddingStore {
 public:
  using VectorType = Vector<Scalar>;

  static BasicEmbeddingStore ingest(const std::filesystem::path& path,
                                    EmbeddingKind kind) {
    return from_raw(read_embedding_file(path), kind, path.string());
  }

  static BasicEmbeddingStore from_raw(const RawEmbeddings& raw, EmbeddingKind kind,
                                      std::string_view source_name = "<memory>") {
    BasicEmbeddingStore store(raw.dimension, kind);
    const std::size_t d = raw.dimension;
    for (std::size_t r = 0; r < raw.ids.size(); ++r) {
      Vector<double> v(static_cast<Eigen::Index>(d));
      for (std::size_t c = 0; c < d; ++c) v(static_cast<Eigen::Index>(c)) = raw.values[r * d + c];
      store.add(raw.ids[r], v, source_name, r);
    }
    return store;
  }

  // Records are normalized on the way in.
  template <typename OtherScalar>
  static BasicEmbeddingStore from_records(
      EmbeddingKind kind, std::size_t dimension,
      std::span<const BasicEmbeddingRecord<OtherScalar>> records) {
    BasicEmbeddingStore store(static_cast<std::uint32_t>(dimension), kind);
    for (std::size_t r = 0; r < records.size(); ++r) {
      store.add(records[r].id, records[r].vector.template cast<double>(), "<records>", r);
    }
    return store;
  }

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }
  EmbeddingKind kind() const noexcept { return kind_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const VectorType& vector(std::size_t row) const { return vectors_.at(row); }

  std::optional<std::size_t> find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const VectorType& at(std::string_view id) const {
    const auto row = find(id);
    if (!row) throw ArgumentError("no embedding with id '" + std::string(id) + "'");
    return vectors_[*row];
  }

  // Writes the store in the binary format as 32-bit floats.
  void write(std::ostream& out) const {
    std::vector<float> values;
    values.reserve(size() * dimension_);
    for (const auto& v : vectors_) {
      for (Eigen::Index c = 0; c < v.size(); ++c) values.push_back(static_cast<float>(v(c)));
    }
    write_embedding_file(out, dimension_, ids_, values);
  }

 private:
  BasicEmbeddingStore(std::uint32_t dimension, EmbeddingKind kind)
      : dimension_(dimension), kind_(kind) {}

  void add(const std::string& id, const Vector<double>& raw, std::string_view source,
           std::size_t record) {
    const auto where = [&] {
      return std::string(source) + ": record " + std::to_string(record) + " ('" + id + "')";
    };
    if (static_cast<std::size_t>(raw.size()) != dimension_) {
      throw IngestError(where() + ": dimension " + std::to_string(raw.size()) +
                        " does not match " + std::to_string(dimension_));
    }
    if (!raw.allFinite()) throw IngestError(where() + ": non-finite component");
    if (index_.count(id)) throw IngestError(where() + ": duplicate id");
    Vector<double> unit;
    try {
      unit = normalized(raw);
    } catch (const DegenerateInputError&) {
      throw IngestError(where() + ": zero vector");
    }
    index_.emplace(id, ids_.size());
    ids_.push_back(id);
    vectors_.push_back(unit.template cast<Scalar>());
  }

  std::uint32_t dimension_;
  EmbeddingKind kind_;
  std::vector<std::string> ids_;
  std::vector<VectorType> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

using EmbeddingStore = BasicEmbeddingStore<double>;

struct ImageAsset {
  std::string asset_id;
  std::string caption_id;
  std::string set_id;
  std::uint32_t sample_index = 0;

  // One embedding per asset, keyed by the asset id.
  const std::string& embedding_id() const noexcept { return asset_id; }

  friend bool operator==(const ImageAsset&, const ImageAsset&) = default;
};

// Header "asset_id,caption_id,set_id,sample_index". Duplicate asset ids are
// rejected.
std::vector<ImageAsset> parse_asset_metadata(std::string_view text,
                                             std::string_view source_name = "<assets>");
std::vector<ImageAsset> read_asset_metadata(const std::filesystem::path& path);
std::string asset_metadata_csv(std::span<const ImageAsset> assets);

}  // namespace cfprobe

#endif  // CFPROBE_EMBEDDING_STORE_HPP_
