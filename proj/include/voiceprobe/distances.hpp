// include/voiceprobe/distances.hpp

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

#include "voiceprobe/common.hpp"
#include "voiceprobe/corpus.hpp"

namespace voiceprobe::distances {

enum class Metric { Euclidean, Cosine, Hausdorff, Spearman };

inline constexpr Metric kAllMetrics[] = {Metric::Euclidean, Metric::Cosine, Metric::Hausdorff, Metric::Spearman};

Metric parse_metric(const std::string& name);
const char* to_string(Metric m);
/// Spearman is a similarity (1 on the diagonal); the others are distances.
bool is_similarity(Metric m);

double euclidean(const Vector& x, const Vector& y);
/// 1 - cos(x, y); throws for a zero-norm input.
double cosine_distance(const Vector& x, const Vector& y);
/// Symmetric Hausdorff distance between two frame sets (rows), euclidean ground metric.
double hausdorff(const Matrix& a, const Matrix& b);
/// Pearson correlation of average ranks; throws "undefined rank correlation"
/// for a constant input.
double spearman_corr(const Vector& x, const Vector& y);

enum class Representation { Pooled, Frames };

struct DistanceMatrix {
  std::vector<std::string> ids;
  Matrix values;  // NaN marks a missing entry
  Metric metric = Metric::Euclidean;
};

/// Full symmetric matrix over utterances. Euclidean, cosine and spearman use
/// the pooled rows; hausdorff uses `frames` with Representation::Frames, or
/// the pooled rows as singleton sets with Representation::Pooled.
DistanceMatrix pairwise_matrix(const std::vector<std::string>& ids, const Matrix& pooled,
                               const std::vector<Matrix>* frames, Metric metric,
                               Representation representation = Representation::Frames);

/// Hausdorff distance between speakers, each represented by the set of its
/// utterances' pooled vectors.
DistanceMatrix speaker_set_hausdorff(const Manifest& manifest, const PooledSet& pooled);

struct PairRecord {
  std::string utt_a, utt_b;
  bool same_speaker = false;
  std::map<Metric, double> metrics;
  std::map<Metric, double> z;
  std::optional<double> score;

  /// Unordered key "a|b" with a < b.
  std::string key() const;
};

/// One record per unordered utterance pair of the matrices (which must share
/// their id list), labelled with same/different speaker from the manifest.
std::vector<PairRecord> pair_records(const std::vector<DistanceMatrix>& matrices, const Manifest& manifest);

/// Speaker x speaker matrix: off-diagonal = mean over cross pairs, diagonal =
/// mean over within-speaker pairs (NaN when a speaker has one utterance).
DistanceMatrix speaker_aggregate(const std::vector<PairRecord>& records, const Manifest& manifest, Metric metric);

/// z-scores the metric over all given records (population std).
void standardize_pairs(std::vector<PairRecord>& records, Metric metric);

}  // namespace voiceprobe::distances
