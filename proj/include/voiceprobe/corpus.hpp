// include/voiceprobe/corpus.hpp

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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "voiceprobe/common.hpp"

namespace voiceprobe {

enum class Sex { M, F };

Sex parse_sex(const std::string& text, const std::string& context);
const char* to_string(Sex sex);

/// Metadata for one utterance. Condition keys are free-form; the reserved
/// experiment keys are background, direction, emotion, language, style and
/// pitch_condition.
struct UtteranceMeta {
  std::string utterance_id;
  std::string speaker_id;
  Sex sex = Sex::M;
  std::string dataset;
  std::string sentence_id;
  std::map<std::string, std::string> conditions;
  double duration_s = 0.0;
  std::string path;

  /// Value of a condition key, or nullopt when the utterance does not carry it.
  std::optional<std::string> condition(const std::string& key) const;
};

/// Ordered, id-indexed collection of utterances. Immutable once built.
class Manifest {
 public:
  Manifest() = default;
  /// Throws DataError on duplicate ids or invalid durations.
  explicit Manifest(std::vector<UtteranceMeta> items, std::string source = "");

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const UtteranceMeta& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  const std::vector<UtteranceMeta>& items() const noexcept { return items_; }
  const std::string& source() const noexcept { return source_; }

  const UtteranceMeta* find(const std::string& utterance_id) const;
  const UtteranceMeta& at(const std::string& utterance_id) const;
  std::optional<std::size_t> index_of(const std::string& utterance_id) const;

  /// Union of condition keys over all utterances.
  std::vector<std::string> condition_keys() const;
  /// Speaker ids in first-appearance order.
  std::vector<std::string> speakers() const;

 private:
  std::vector<UtteranceMeta> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string source_;
};

/// CSV with header utterance_id,speaker_id,sex,dataset,sentence_id,duration_s,path
/// plus optional cond:<key> columns.
Manifest parse_manifest_csv(const std::string& text, const std::string& source);
/// JSON array of objects with the same fields; conditions either as a nested
/// "conditions" object or as "cond:<key>" members.
Manifest parse_manifest_json(const std::string& text, const std::string& source);
/// Dispatches on content (a leading '[' means JSON).
Manifest read_manifest(const std::string& path);
std::string format_manifest_csv(const Manifest& manifest);

/// Frame-level features for one (utterance, model, layer).
struct EmbeddingMatrix {
  Matrix frames;  // T x D
  std::string model_tag;
  std::string layer_tag;
};

EmbeddingMatrix load_embedding(const std::string& path, std::string model_tag = "",
                               std::string layer_tag = "");

/// Embedding file for an utterance: <root>/<layer>/<path>, or <root>/<path>
/// when the layer is empty.
std::string embedding_path(const std::string& root, const std::string& layer,
                           const UtteranceMeta& meta);

/// Concatenation of per-feature mean and max over frames (length 2D).
Vector pool(const Matrix& frames);

/// Per-feature z-scoring with population standard deviation, floored.
class Standardizer {
 public:
  static constexpr double kStdFloor = 1e-8;

  /// Fits on the rows of `samples`; needs at least two rows.
  static Standardizer fit(const Matrix& samples);
  /// Rebuilds a fitted standardiser from stored statistics.
  static Standardizer from_stats(Vector mean, Vector stddev);

  Vector apply(const Vector& v) const;
  Matrix apply_rows(const Matrix& samples) const;

  const Vector& mean() const noexcept { return mean_; }
  const Vector& stddev() const noexcept { return std_; }

 private:
  Vector mean_;
  Vector std_;
};

/// One predicate term: field == value. Field is one of speaker_id, sex,
/// dataset, sentence_id, utterance_id, or a condition key (optionally
/// prefixed with "cond:" or "conditions.").
struct Criterion {
  std::string field;
  std::string value;

  /// Parses "key=value".
  static Criterion parse(const std::string& text);
  std::string to_string() const { return field + "=" + value; }
};

/// Subset (order preserved) matching every criterion. A condition key that
/// no utterance in the manifest carries raises Error.
Manifest filter(const Manifest& manifest, const std::vector<Criterion>& criteria);
Manifest filter(const Manifest& manifest,
                const std::function<bool(const UtteranceMeta&)>& keep);

enum class Partition { Train, Val, Test };
const char* to_string(Partition p);
Partition parse_partition(const std::string& text, const std::string& context);

struct SplitSpec {
  std::map<std::string, Partition> assignment;

  /// Ids of one partition in manifest order.
  std::vector<std::string> ids(const Manifest& manifest, Partition p) const;
  std::size_t count(Partition p) const;
};

/// Per-speaker ratio split: each speaker with n utterances gets
/// round(train_ratio * n) train items (clamped so at least one goes to test
/// when n >= 2); `val_ratio * n` of those (rounded) are moved to validation,
/// keeping at least one in train. Speakers with a single utterance go to
/// train with a warning. Deterministic in `seed`.
SplitSpec split_by_ratio(const Manifest& manifest, double train_ratio, std::uint64_t seed,
                         double val_ratio = 0.0);

/// Explicit id lists; every id must exist in the manifest and lists must be disjoint.
SplitSpec split_explicit(const Manifest& manifest, const std::vector<std::string>& train,
                         const std::vector<std::string>& val,
                         const std::vector<std::string>& test);

/// Benchmark list file: CSV `utterance_id,partition` (train|val|test).
SplitSpec read_split(const std::string& path, const Manifest& manifest);

/// Samples n_speakers speakers, half per sex (the odd one goes to F), and
/// keeps all their utterances.
Manifest balanced_speaker_sample(const Manifest& manifest, std::size_t n_speakers,
                                 std::uint64_t seed);

/// Pooled vectors for a list of utterances, row i belonging to ids[i].
struct PooledSet {
  std::vector<std::string> ids;
  Matrix rows;

  std::optional<std::size_t> row_of(const std::string& id) const;
  /// Rows for the given ids, in that order.
  Matrix select(const std::vector<std::string>& wanted) const;
};

/// Loads and pools every utterance of the manifest from disk (parallel over
/// files). Checks that the feature dimension is consistent.
PooledSet load_pooled(const Manifest& manifest, const std::string& root,
                      const std::string& layer);

/// Loads frame matrices (used by Hausdorff distances).
std::vector<Matrix> load_frames(const Manifest& manifest, const std::string& root,
                                const std::string& layer);

}  // namespace voiceprobe
