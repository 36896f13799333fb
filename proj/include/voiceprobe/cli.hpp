// include/voiceprobe/cli.hpp

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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace voiceprobe::cli {

using Value = std::variant<std::string, long long, double>;

/// Tabular output. `meta` adds key/value lines after the provenance block.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  std::vector<std::pair<std::string, std::string>> meta;
};

struct Provenance {
  bool has_seed = false;  // "none" is written for seedless commands
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// "key=value\n" lines sorted by key.
std::string canonical_config(const std::map<std::string, std::string>& config);
/// FNV-1a of the canonical config, 16 lowercase hex digits.
std::string config_hash(const std::map<std::string, std::string>& config);

/// CSV preceded by "# tool_version: ", "# seed: ", "# config_hash: " lines.
std::string format_csv(const Table& table, const Provenance& provenance);
/// {"tool_version", "seed", "config_hash", "meta", "columns", "rows"}.
std::string format_json(const Table& table, const Provenance& provenance);

/// key=value lines; blank lines and '#' comments ignored. Throws UsageError
/// for malformed lines or duplicate keys.
std::map<std::string, std::string> parse_config(const std::string& text, const std::string& source);

/// Full command-line entry point. Returns the exit code: 0 success, 1 usage
/// error, 2 data error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace voiceprobe::cli
