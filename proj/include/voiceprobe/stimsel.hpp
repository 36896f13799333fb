// include/voiceprobe/stimsel.hpp

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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "voiceprobe/corpus.hpp"
#include "voiceprobe/csv.hpp"
#include "voiceprobe/distances.hpp"

namespace voiceprobe::stimsel {

using distances::Metric;
using distances::PairRecord;

enum class Truth { Same, Different };
enum class NoiseOrder { CleanNoisy, NoisyClean };  // C-N: second stimulus noisy; N-C: first

const char* to_string(Truth t);
const char* to_string(NoiseOrder o);
Truth parse_truth(const std::string& s, const std::string& context);
NoiseOrder parse_noise_order(const std::string& s, const std::string& context);

struct TrialSpec {
  int trial_id = 0;
  std::string stim_1, stim_2;
  Truth truth = Truth::Same;
  NoiseOrder noise_order = NoiseOrder::CleanNoisy;
  double score = 0.0;
};

/// Keeps same-speaker pairs of distinct sentences and different-speaker pairs
/// of the same sex uttering different sentences. Pairs involving a noisy
/// background variant are dropped (trials are built from clean pairs).
/// Throws when an utterance is missing from the manifest or has no sentence id.
std::vector<PairRecord> filter_pairs(const std::vector<PairRecord>& records, const Manifest& manifest);

struct OverlapOptions {
  /// Trims the envelope: the lower end becomes this quantile of the lower
  /// population instead of its minimum, the upper end the (1 - q) quantile.
  double quantile_trim = 0.0;
  /// Use standardised values (z); raw metric values otherwise.
  bool standardized = true;
};

/// Records whose value lies inside the closed overlap interval of the same
/// and different populations: [min different, max same] for distances,
/// [min same, max different] for the spearman similarity. Warns when empty.
std::vector<PairRecord> overlap_filter(const std::vector<PairRecord>& records, Metric metric,
                                       const OverlapOptions& options = {});

struct CommonPairs {
  std::vector<PairRecord> records;  // order of the first set
  std::size_t same = 0;
  std::size_t different = 0;
};

/// Intersection keyed by unordered pair.
CommonPairs intersect_common(const std::vector<std::vector<PairRecord>>& sets);

/// (euclidean + cosine + hausdorff + (1 - spearman)) / 4 over standardised
/// values (raw values with standardized = false). Throws when a metric is missing.
double score(const PairRecord& record, bool standardized = true);

struct Picks {
  std::vector<PairRecord> same;
  std::vector<PairRecord> different;
};

/// Top-k same pairs by descending score and bottom-k different pairs by
/// ascending score; ties by (score, utt_a, utt_b). Pairs whose key is in
/// `excluded` are skipped and replaced by the next-ranked one.
Picks select_extremes(const std::vector<PairRecord>& scored, std::size_t k,
                      const std::set<std::string>& excluded = {});

/// Balances noise order within each truth condition (half C-N, half N-C,
/// seeded), then shuffles trial order. When the manifest carries a
/// `background` condition, the noisy stimulus is replaced by its
/// background=noisy variant (same speaker, sentence and dataset).
std::vector<TrialSpec> assign_noise_order(const Picks& picks, std::uint64_t seed, const Manifest* manifest = nullptr);

struct PipelineConfig {
  std::size_t k = 50;
  std::uint64_t seed = 0;
  std::set<std::string> excluded;  // unordered pair keys "a|b"
  OverlapOptions overlap;
  bool raw_scores = false;
};

struct PipelineReport {
  std::size_t retained = 0;
  std::map<Metric, std::size_t> overlap_counts;
  std::size_t common_same = 0;
  std::size_t common_different = 0;
  std::vector<TrialSpec> trials;
};

/// filter -> standardise -> per-metric overlap -> intersect -> score ->
/// extremes -> noise order. `records` must carry all four metrics.
PipelineReport select_stimuli(const std::vector<PairRecord>& records, const Manifest& manifest,
                              const PipelineConfig& config);

/// Trial list CSV: trial_id,stim_1,stim_2,truth,noise_order[,score].
std::vector<TrialSpec> parse_trials(const CsvTable& table);
std::vector<TrialSpec> read_trials(const std::string& path);

/// "a|b" with a < b.
std::string pair_key(const std::string& a, const std::string& b);

}  // namespace voiceprobe::stimsel
