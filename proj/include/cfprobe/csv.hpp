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

#ifndef CFPROBE_CSV_HPP_
#define CFPROBE_CSV_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 style CSV used by every report and metadata file.
namespace cfprobe::csv {

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);
std::vector<std::string> split(std::string_view line);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column; throws IngestError when absent.
  std::size_t column(std::string_view name) const;
};

// Reads a headered CSV file. Blank lines are skipped; every row must have
// as many fields as the header.
Table read_file(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view source_name);

// Shortest round-trippable text, with "inf", "-inf", "nan" for non-finite.
std::string format_double(double value);
std::string format_fixed(double value, int places);
double parse_double(std::string_view text);

// Builds a CSV document in memory; files are written in one piece.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  const std::string& str() const noexcept { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace cfprobe::csv

#endif  // CFPROBE_CSV_HPP_
