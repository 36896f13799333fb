// tests/test_cli.cpp

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

#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "voiceprobe/cli.hpp"

using namespace voiceprobe;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::uint64_t fnv_oracle(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

std::string header_value(const std::string& text, const std::string& key) {
  for (const auto& l : lines(text))
    if (l.rfind("# " + key + ": ", 0) == 0) return l.substr(key.size() + 4);
  return "";
}

struct BlobCorpus {
  vptest::TempDir dir;
  std::string manifest;
  std::string root;

  BlobCorpus() {
    auto f = vptest::cluster_fixture(4, 10, 8, 4.0, 0.3, 17);
    root = dir.file("emb");
    manifest = dir.file("manifest.csv");
    vptest::write_text(manifest, format_manifest_csv(f.manifest));
    std::mt19937_64 rng(2);
    vptest::write_corpus(root, "L0", f.manifest, [&](std::size_t i) {
      Matrix frames = vptest::random_matrix(3, 8, rng, 0.1);
      frames.rowwise() += f.pooled.rows.row(static_cast<Eigen::Index>(i));
      return frames;
    });
  }

  std::vector<std::string> probe_args(const std::string& out, const std::string& seed = "3") const {
    return {"probe", "--manifest", manifest, "--embeddings-dir", root, "--layer", "L0", "--repeats", "2",
            "--lr-grid", "0.01", "--max-epochs", "40", "--patience", "5", "--batch-size", "16",
            "--seed", seed, "--out", out};
  }
};

}  // namespace

TEST_CASE("config hash") {
  CHECK(hex16(fnv_oracle("")) == "cbf29ce484222325");
  CHECK(hex16(fnv_oracle("a")) == "af63dc4c8601ec8c");
  std::map<std::string, std::string> cfg{{"seed", "4"}, {"command", "probe"}, {"lr-grid", "0.001,0.01"}};
  CHECK(cli::canonical_config(cfg) == "command=probe\nlr-grid=0.001,0.01\nseed=4\n");
  CHECK(cli::config_hash(cfg) == hex16(fnv_oracle("command=probe\nlr-grid=0.001,0.01\nseed=4\n")));
  auto other = cfg;
  other["seed"] = "5";
  CHECK(cli::config_hash(other) != cli::config_hash(cfg));
}

TEST_CASE("config file parsing") {
  auto cfg = cli::parse_config("# grid\nseed = 3\n\nlr-grid=0.1,0.2\n", "c.cfg");
  CHECK(cfg.at("seed") == "3");
  CHECK(cfg.at("lr-grid") == "0.1,0.2");
  CHECK_THROWS_AS(cli::parse_config("seed\n", "c"), UsageError);
  CHECK_THROWS_AS(cli::parse_config("a=1\na=2\n", "c"), UsageError);
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({}).code == 1);
  vptest::TempDir d;
  auto missing = run_cli({"probe", "--manifest", d.file("nope.csv"), "--embeddings-dir", d.file("e"), "--out",
                          d.file("o.csv")});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.csv") != std::string::npos);
  CHECK(lines(missing.err).size() == 1);
  CHECK(run_cli({"probe", "--embeddings-dir", d.file("e"), "--out", d.file("o.csv")}).code == 1);
  CHECK(run_cli({"probe", "--manifest", "m", "--embeddings-dir", "e", "--out", "o", "--bogus", "1"}).code == 1);
  auto help = run_cli({"--help"});
  CHECK(help.code == 0);
  for (const char* cmd : {"probe", "layerwise", "crosscond", "cka", "distmat", "stimsel", "behave", "aspd",
                          "confusion", "encode", "decode-labels"})
    CHECK(help.out.find(cmd) != std::string::npos);
}

TEST_CASE("probe command output and provenance") {
  BlobCorpus c;
  const auto a = c.dir.file("a.csv"), b = c.dir.file("b.csv"), s = c.dir.file("s.csv");
  auto r = run_cli(c.probe_args(a));
  REQUIRE(r.code == 0);
  const auto text = read_text_file(a);
  auto ls = lines(text);
  REQUIRE(ls.size() >= 4);
  CHECK(ls[0] == std::string("# tool_version: ") + VOICEPROBE_VERSION);
  CHECK(ls[1] == "# seed: 3");
  CHECK(ls[2].rfind("# config_hash: ", 0) == 0);
  CHECK(header_value(text, "config_hash").size() == 16);
  std::size_t hdr = 0;
  while (ls[hdr][0] == '#') ++hdr;
  CHECK(ls[hdr] == "layer,condition,run,lr,uar,std_uar");
  CHECK(ls.size() == hdr + 1 + 2 + 1);  // two runs and the mean row

  REQUIRE(run_cli(c.probe_args(b)).code == 0);
  CHECK(read_text_file(b) == text);

  REQUIRE(run_cli(c.probe_args(s, "4")).code == 0);
  const auto changed = read_text_file(s);
  CHECK(header_value(changed, "seed") == "4");
  CHECK(header_value(changed, "config_hash") != header_value(text, "config_hash"));
  auto cs = lines(changed);
  CHECK(cs.size() == ls.size());
  CHECK(cs[hdr] == ls[hdr]);

  // A config file supplies defaults; the flag wins.
  const auto cfg = c.dir.file("p.cfg");
  vptest::write_text(cfg, "seed=4\nrepeats=2\n");
  auto args = c.probe_args(c.dir.file("cfg.csv"));
  args.insert(args.begin() + 1, {"--config", cfg});
  REQUIRE(run_cli(args).code == 0);
  CHECK(read_text_file(c.dir.file("cfg.csv")) == text);
  vptest::write_text(cfg, "colour=blue\n");
  CHECK(run_cli(args).code == 1);

  auto js = c.probe_args(c.dir.file("j.csv"));
  js.push_back("--json");
  REQUIRE(run_cli(js).code == 0);
  const auto json = read_text_file(c.dir.file("j.json"));
  CHECK(json.find("\"config_hash\": \"" + header_value(text, "config_hash") + "\"") != std::string::npos);
  CHECK(json.find("\"seed\": 3") != std::string::npos);
}
