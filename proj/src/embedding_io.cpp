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

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "cfprobe/csv.hpp"
#include "cfprobe/embedding_store.hpp"
#include "cfprobe/hashing.hpp"

namespace cfprobe {
namespace {

template <typename T>
T load_le(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  }
  return value;
}

template <typename T>
void store_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string_view source) : in_(in), source_(source) {}

  template <typename T>
  T read(const std::string& what) {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T), what);
    return load_le<T>(buf);
  }

  void bytes(void* dst, std::size_t n, const std::string& what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw IngestError(source_ + ": truncated payload reading " + what);
    }
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
};

}  // namespace

std::string_view to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::text ? "text" : "image";
}

RawEmbeddings read_embedding_file(std::istream& in, std::string_view source_name) {
  Reader r(in, source_name);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kEmbeddingMagic.data(), 4) != 0) {
    throw IngestError(r.source() + ": bad magic, not an embedding file");
  }
  const auto version = r.read<std::uint16_t>("version");
  if (version != kEmbeddingFormatVersion) {
    throw IngestError(r.source() + ": unsupported version " + std::to_string(version));
  }
  RawEmbeddings raw;
  raw.dimension = r.read<std::uint32_t>("dimension");
  const auto count = r.read<std::uint64_t>("record count");
  if (raw.dimension == 0) throw IngestError(r.source() + ": dimension is zero");

  std::unordered_set<std::string> seen;
  std::vector<unsigned char> payload(std::size_t{raw.dimension} * 4);
  for (std::uint64_t rec = 0; rec < count; ++rec) {
    const std::string what = "record " + std::to_string(rec);
    const auto id_len = r.read<std::uint16_t>(what + " id length");
    std::string id(id_len, '\0');
    r.bytes(id.data(), id_len, what + " id");
    if (id.empty()) throw IngestError(r.source() + ": " + what + ": empty id");
    if (!seen.insert(id).second) {
      throw IngestError(r.source() + ": " + what + " ('" + id + "'): duplicate id");
    }
    r.bytes(payload.data(), payload.size(), what + " ('" + id + "') vector");
    for (std::size_t c = 0; c < raw.dimension; ++c) {
      const float f = std::bit_cast<float>(load_le<std::uint32_t>(&payload[c * 4]));
      if (!std::isfinite(f)) {
        throw IngestError(r.source() + ": " + what + " ('" + id +
                          "'): non-finite component " + std::to_string(c));
      }
      raw.values.push_back(f);
    }
    raw.ids.push_back(std::move(id));
  }
  if (!r.at_end()) {
    throw IngestError(r.source() + ": trailing bytes after " + std::to_string(count) +
                      " records (header count mismatch)");
  }
  return raw;
}

RawEmbeddings read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open embedding file " + path.string());
  return read_embedding_file(in, path.string());
}

void write_embedding_file(std::ostream& out, std::uint32_t dimension,
                          std::span<const std::string> ids,
                          std::span<const float> values) {
  if (values.size() != ids.size() * dimension) {
    throw ArgumentError("embedding values do not match ids x dimension");
  }
  std::string buf(kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  store_le<std::uint16_t>(buf, kEmbeddingFormatVersion);
  store_le<std::uint32_t>(buf, dimension);
  store_le<std::uint64_t>(buf, ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r].size() > 0xffff) throw ArgumentError("embedding id too long");
    store_le<std::uint16_t>(buf, static_cast<std::uint16_t>(ids[r].size()));
    buf += ids[r];
    for (std::size_t c = 0; c < dimension; ++c) {
      store_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(values[r * dimension + c]));
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

EmbeddingRecord mock_embed(std::string_view token, std::size_t dimension,
                           EmbeddingKind kind) {
  if (dimension < 2) throw ArgumentError("mock embedding dimension must be >= 2");
  const std::uint64_t key = splitmix64(fnv1a64(token));
  Vector<double> v(static_cast<Eigen::Index>(dimension));
  for (std::size_t i = 0; i < dimension; ++i) {
    v(static_cast<Eigen::Index>(i)) = 2.0 * unit_interval(splitmix64(key + i)) - 1.0;
  }
  return EmbeddingRecord{std::string(token), kind, normalized(v)};
}

std::vector<ImageAsset> parse_asset_metadata(std::string_view text,
                                             std::string_view source_name) {
  const auto table = csv::parse(text, source_name);
  const auto a = table.column("asset_id");
  const auto c = table.column("caption_id");
  const auto s = table.column("set_id");
  const auto i = table.column("sample_index");
  std::vector<ImageAsset> assets;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ImageAsset asset{row[a], row[c], row[s], 0};
    const auto& idx = row[i];
    if (std::from_chars(idx.data(), idx.data() + idx.size(), asset.sample_index).ec !=
        std::errc()) {
      throw IngestError(std::string(source_name) + ": record " + std::to_string(r) +
                        " ('" + asset.asset_id + "'): bad sample_index");
    }
    if (asset.asset_id.empty() || !seen.insert(asset.asset_id).second) {
      throw IngestError(std::string(source_name) + ": record " + std::to_string(r) +
                        " ('" + asset.asset_id + "'): duplicate or empty asset id");
    }
    assets.push_back(std::move(asset));
  }
  return assets;
}

std::vector<ImageAsset> read_asset_metadata(const std::filesystem::path& path) {
  return parse_asset_metadata(csv::read_text_file(path), path.string());
}

std::string asset_metadata_csv(std::span<const ImageAsset> assets) {
  csv::Writer w({"asset_id", "caption_id", "set_id", "sample_index"});
  for (const auto& asset : assets) {
    w.row({asset.asset_id, asset.caption_id, asset.set_id,
           std::to_string(asset.sample_index)});
  }
  return w.str();
}

}  // namespace cfprobe
