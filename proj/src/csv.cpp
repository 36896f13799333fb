// src/csv.cpp

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

#include "voiceprobe/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "voiceprobe/common.hpp"

namespace voiceprobe {

std::optional<std::size_t> CsvTable::find(const std::string& column) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) return i;
  return std::nullopt;
}

std::size_t CsvTable::require(const std::string& column) const {
  auto idx = find(column);
  if (!idx) throw DataError(source, "missing column '" + column + "'");
  return *idx;
}

namespace {

// Splits one logical record starting at `pos`; handles quoted fields with
// embedded separators, doubled quotes and newlines.
std::vector<std::string> next_record(const std::string& text, std::size_t& pos,
                                     const std::string& source) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (quoted) throw DataError(source, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::size_t pos = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) pos = 3;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t line_end = text.find('\n', pos);
    std::string line = text.substr(pos, line_end == std::string::npos ? std::string::npos
                                                                      : line_end - pos);
    if (!have_header && !line.empty() && line[0] == '#') {
      table.comments.push_back(line);
      pos = line_end == std::string::npos ? text.size() : line_end + 1;
      continue;
    }
    if (blank(line)) {
      pos = line_end == std::string::npos ? text.size() : line_end + 1;
      continue;
    }
    auto record = next_record(text, pos, source);
    if (!have_header) {
      table.header = std::move(record);
      have_header = true;
    } else {
      if (record.size() != table.header.size())
        throw DataError(source, "row " + std::to_string(table.rows.size() + 1) + " has " +
                                    std::to_string(record.size()) + " fields, expected " +
                                    std::to_string(table.header.size()));
      table.rows.push_back(std::move(record));
    }
  }
  if (!have_header) throw DataError(source, "empty CSV (no header)");
  return table;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path), path); }

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path, "cannot open output for writing");
    out << contents;
    out.flush();
    if (!out) throw DataError(path, "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError(path, "rename failed: " + ec.message());
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  std::string t = text;
  while (!t.empty() && (t.back() == ' ' || t.back() == '\r')) t.pop_back();
  std::size_t start = t.find_first_not_of(' ');
  if (start == std::string::npos) throw DataError(context, "empty numeric field");
  t = t.substr(start);
  if (t == "NA" || t == "nan" || t == "NaN") return std::nan("");
  double v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw DataError(context, "not a number: '" + text + "'");
  return v;
}

long long parse_int(const std::string& text, const std::string& context) {
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw DataError(context, "not an integer: '" + text + "'");
  return v;
}

}  // namespace voiceprobe
