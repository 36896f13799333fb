// src/cli.cpp

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

#include "voiceprobe/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <set>
#include <sstream>

#include <omp.h>
#include <json.hpp>

#include "cli_commands.hpp"
#include "voiceprobe/common.hpp"
#include "voiceprobe/csv.hpp"
#include "voiceprobe/log.hpp"

namespace voiceprobe::cli {

std::string canonical_config(const std::map<std::string, std::string>& config) {
  std::string s;
  for (const auto& [k, v] : config) s += k + "=" + v + "\n";
  return s;
}

std::string config_hash(const std::map<std::string, std::string>& config) {
  const auto h = fnv1a64(canonical_config(config));
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(15 - i)] = digits[(h >> (4 * i)) & 0xf];
  return out;
}

namespace {

std::string cell(const Value& v) {
  if (auto s = std::get_if<std::string>(&v)) return csv_escape(*s);
  if (auto i = std::get_if<long long>(&v)) return std::to_string(*i);
  return format_double(std::get<double>(v));
}

std::string seed_text(const Provenance& p) { return p.has_seed ? std::to_string(p.seed) : "none"; }

}  // namespace

std::string format_csv(const Table& table, const Provenance& provenance) {
  std::string s = std::string("# tool_version: ") + VOICEPROBE_VERSION + "\n";
  s += "# seed: " + seed_text(provenance) + "\n";
  s += "# config_hash: " + provenance.config_hash + "\n";
  for (const auto& [k, v] : table.meta) s += "# " + k + ": " + v + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) s += (i ? "," : "") + csv_escape(table.columns[i]);
  s += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + cell(row[i]);
    s += '\n';
  }
  return s;
}

std::string format_json(const Table& table, const Provenance& provenance) {
  nlohmann::ordered_json j;
  j["tool_version"] = VOICEPROBE_VERSION;
  if (provenance.has_seed)
    j["seed"] = provenance.seed;
  else
    j["seed"] = nullptr;
  j["config_hash"] = provenance.config_hash;
  j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : table.meta) j["meta"][k] = v;
  j["columns"] = table.columns;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& v : row) {
      if (auto s = std::get_if<std::string>(&v)) r.push_back(*s);
      else if (auto i = std::get_if<long long>(&v)) r.push_back(*i);
      else {
        const double d = std::get<double>(v);
        if (std::isfinite(d)) r.push_back(d);
        else r.push_back(nullptr);
      }
    }
    j["rows"].push_back(std::move(r));
  }
  return j.dump(1) + "\n";
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_config(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(source + ":" + std::to_string(n) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(n) + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second)
      throw UsageError(source + ":" + std::to_string(n) + ": duplicate key '" + key + "'");
  }
  return out;
}

namespace {

// Options that name outputs or the runtime; they do not enter the hash.
const std::set<std::string> kUnhashed{"help", "config", "out", "json", "threads", "model-out", "correlations-out"};

std::string long_name(const CLI::Option* opt) {
  const auto& names = opt->get_lnames();
  return names.empty() ? "" : names.front();
}

std::map<std::string, std::string> effective_config(const CLI::App* leaf, const std::string& command) {
  std::map<std::string, std::string> cfg;
  cfg["command"] = command;
  for (const auto* opt : leaf->get_options()) {
    const auto name = long_name(opt);
    if (name.empty() || kUnhashed.count(name)) continue;
    std::string v;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) v += (i ? "," : "") + res[i];
    } else {
      v = opt->get_default_str();
    }
    cfg[name] = v;
  }
  return cfg;
}

std::string json_path(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension(".json");
  return p.string();
}

bool user_set(const std::vector<std::string>& tokens, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& t : tokens)
    if (t == flag || t.rfind(flag + "=", 0) == 0) return true;
  return false;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speaker identity analysis over precomputed speech embeddings.", "voiceprobe"};
  app.set_version_flag("--version", std::string(VOICEPROBE_VERSION));
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);

  auto commands = register_commands(app);
  std::string config_dummy;
  for (auto& c : commands)
    c.app->add_option("--config", config_dummy, "key=value defaults file; command-line flags take precedence");

  auto tokens = args;
  try {
    // Locate the leaf subcommand and merge the config file ahead of the flags.
    CLI::App* cur = &app;
    std::size_t leaf_pos = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto& t = tokens[i];
      if (t == "--threads") {
        ++i;
        continue;
      }
      if (t.rfind("-", 0) == 0) continue;
      CLI::App* sub = nullptr;
      for (auto* s : cur->get_subcommands({}))
        if (s->get_name() == t) sub = s;
      if (!sub) break;
      cur = sub;
      leaf_pos = i;
    }
    std::string config_path;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == "--config" && i + 1 < tokens.size()) config_path = tokens[i + 1];
      else if (tokens[i].rfind("--config=", 0) == 0) config_path = tokens[i].substr(9);
    }
    if (!config_path.empty()) {
      if (cur == &app) throw UsageError("--config needs a subcommand");
      std::string text;
      try {
        text = read_text_file(config_path);
      } catch (const DataError&) {
        throw UsageError("cannot read config file '" + config_path + "'");
      }
      auto cfg = parse_config(text, config_path);
      std::vector<std::string> injected;
      for (const auto& [k, v] : cfg) {
        if (k == "config") throw UsageError(config_path + ": config files cannot include other config files");
        if (!cur->get_option_no_throw("--" + k))
          throw UsageError(config_path + ": unknown key '" + k + "' for '" + cur->get_name() + "'");
        if (!user_set(tokens, k)) injected.push_back("--" + k + "=" + v);
      }
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(leaf_pos + 1), injected.begin(), injected.end());
    }
    std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "voiceprobe: usage error: " << msg << "\n";
    return 1;
  } catch (const UsageError& e) {
    err << "voiceprobe: usage error: " << e.what() << "\n";
    return 1;
  }

  const Command* chosen = nullptr;
  for (const auto& c : commands)
    if (c.app->parsed()) chosen = &c;
  if (!chosen) {
    err << "voiceprobe: usage error: missing subcommand\n";
    return 1;
  }
  if (threads > 0) omp_set_num_threads(threads);

  std::string command = chosen->app->get_name();
  if (auto* parent = chosen->app->get_parent(); parent && parent != &app) command = parent->get_name() + " " + command;
  Provenance prov;
  prov.has_seed = chosen->seed != nullptr;
  prov.seed = chosen->seed ? *chosen->seed : 0;
  prov.config_hash = config_hash(effective_config(chosen->app, command));

  auto previous = set_warning_sink([&err](const std::string& m) { err << "WARNING: " << m << "\n"; });
  int code = 0;
  try {
    auto result = chosen->run(prov);
    for (const auto& o : result.outputs) {
      write_file_atomic(o.path, format_csv(o.table, prov));
      if (o.json) write_file_atomic(json_path(o.path), format_json(o.table, prov));
    }
    for (const auto& x : result.extras) write_file_atomic(x.path, x.contents);
  } catch (const UsageError& e) {
    err << "voiceprobe: usage error: " << e.what() << "\n";
    code = 1;
  } catch (const Error& e) {
    err << "voiceprobe: error: " << e.what() << "\n";
    code = 2;
  } catch (const std::exception& e) {
    err << "voiceprobe: error: " << e.what() << "\n";
    code = 2;
  }
  set_warning_sink(previous);
  return code;
}

}  // namespace voiceprobe::cli
