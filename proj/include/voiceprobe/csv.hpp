// include/voiceprobe/csv.hpp

// Copyright 2026  The voiceprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace voiceprobe {

/// Parsed CSV: header plus rows of raw fields. Lines starting with '#' before
/// the header are collected as comments (the provenance block of our own
/// outputs) and are otherwise ignored.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  /// Index of a column, or nullopt.
  std::optional<std::size_t> find(const std::string& column) const;
  /// Index of a column; throws DataError naming the file when absent.
  std::size_t require(const std::string& column) const;
};

CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::string& path);

/// Quotes a field only when it contains a separator, quote or newline.
std::string csv_escape(const std::string& field);

std::string read_text_file(const std::string& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Shortest round-trip representation of a double ("NA" for NaN).
std::string format_double(double value);

double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);

}  // namespace voiceprobe
