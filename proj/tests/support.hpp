// tests/support.hpp

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

// Fixture builders shared by the unit and acceptance tests.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "voiceprobe/common.hpp"
#include "voiceprobe/corpus.hpp"
#include "voiceprobe/csv.hpp"
#include "voiceprobe/npy.hpp"
#include "voiceprobe/probe.hpp"

namespace vptest {

using voiceprobe::Manifest;
using voiceprobe::Matrix;
using voiceprobe::PooledSet;
using voiceprobe::UtteranceMeta;
using voiceprobe::Vector;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "voiceprobe_XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double sd = 1.0) {
  return random_matrix(n, 1, rng, sd).col(0);
}

inline std::string two_digits(std::size_t i) {
  return (i < 10 ? "0" : "") + std::to_string(i);
}

/// Utterance metadata for `n_speakers` speakers with `per_speaker` utterances
/// each; even speakers are M, odd F; sentence ids t00, t01, ... per speaker.
inline Manifest make_manifest(std::size_t n_speakers, std::size_t per_speaker) {
  std::vector<UtteranceMeta> items;
  for (std::size_t s = 0; s < n_speakers; ++s)
    for (std::size_t u = 0; u < per_speaker; ++u) {
      UtteranceMeta m;
      m.speaker_id = "spk" + two_digits(s);
      m.utterance_id = m.speaker_id + "_u" + two_digits(u);
      m.sex = s % 2 == 0 ? voiceprobe::Sex::M : voiceprobe::Sex::F;
      m.dataset = "synthetic";
      m.sentence_id = "t" + two_digits(u);
      m.duration_s = 2.0 + 0.1 * static_cast<double>(u);
      m.path = m.speaker_id + "/" + m.utterance_id + ".npy";
      items.push_back(std::move(m));
    }
  return Manifest(std::move(items), "fixture");
}

struct ClusterFixture {
  Manifest manifest;
  PooledSet pooled;
  Matrix centers;
};

/// Gaussian clusters: speaker s has center ~ N(0, separation^2 I) and
/// utterances center + N(0, noise^2 I).
inline ClusterFixture cluster_fixture(std::size_t n_speakers, std::size_t per_speaker, Eigen::Index dim,
                                      double separation, double noise, std::uint64_t seed) {
  ClusterFixture f;
  f.manifest = make_manifest(n_speakers, per_speaker);
  std::mt19937_64 rng(seed);
  f.centers = random_matrix(static_cast<Eigen::Index>(n_speakers), dim, rng, separation);
  f.pooled.rows.resize(static_cast<Eigen::Index>(f.manifest.size()), dim);
  for (std::size_t i = 0; i < f.manifest.size(); ++i) {
    const auto s = i / per_speaker;
    f.pooled.ids.push_back(f.manifest[i].utterance_id);
    f.pooled.rows.row(static_cast<Eigen::Index>(i)) =
        f.centers.row(static_cast<Eigen::Index>(s)) + random_vector(dim, rng, noise).transpose();
  }
  return f;
}

inline voiceprobe::probe::LabeledSet labeled(const ClusterFixture& f, const std::vector<std::string>& ids) {
  voiceprobe::probe::LabeledSet s;
  s.x = f.pooled.select(ids);
  for (const auto& id : ids) s.labels.push_back(f.manifest.at(id).speaker_id);
  return s;
}

/// Writes frame matrices to <root>/<layer>/<path> and the manifest CSV.
/// Frames for utterance i are `frames_for(i)`.
template <typename FrameFn>
void write_corpus(const std::filesystem::path& root, const std::string& layer, const Manifest& manifest,
                  FrameFn frames_for) {
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto path = std::filesystem::path(voiceprobe::embedding_path(root.string(), layer, manifest[i]));
    std::filesystem::create_directories(path.parent_path());
    voiceprobe::write_npy(path.string(), frames_for(i));
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Strips the "# tool_version" line so outputs of different builds compare.
inline std::string without_version(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    if (line.rfind("# tool_version", 0) != 0 && line.find("\"tool_version\"") == std::string::npos)
      out += line + "\n";
    pos = end + 1;
  }
  return out;
}

}  // namespace vptest
