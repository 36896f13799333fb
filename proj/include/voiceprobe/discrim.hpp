// include/voiceprobe/discrim.hpp

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

// Speaker discrimination: same/different pair generation from utterance
// triplets, the binary pair decoder and its hyper-parameter grid, plus the
// bootstrapped identification confusion matrix.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "voiceprobe/behavior.hpp"
#include "voiceprobe/corpus.hpp"
#include "voiceprobe/distances.hpp"
#include "voiceprobe/nn.hpp"
#include "voiceprobe/probe.hpp"
#include "voiceprobe/stimsel.hpp"

namespace voiceprobe::discrim {

struct PairDraw {
  std::size_t a = 0, b = 0;  // rows of the pooled set, in concatenation order
  int label = 0;             // 1 = same speaker
};

/// Indexed pair sampler. Pair 2t and 2t+1 come from triplet t of an epoch:
/// an anchor, a same-speaker utterance of another sentence, and a same-sex
/// utterance of another speaker. Every draw depends only on (seed, epoch, t),
/// so epochs of any size are generated lazily. Each pair is emitted with
/// its halves swapped with probability 1/2.
class PairGenerator {
 public:
  /// `pooled` must cover every manifest utterance. Speakers without two
  /// distinct sentences or without a same-sex alternative are skipped with a
  /// warning; throws when no speaker is usable.
  PairGenerator(const Manifest& manifest, const PooledSet& pooled, std::uint64_t seed);

  PairDraw draw(std::uint64_t epoch, std::uint64_t index) const;
  const std::vector<std::string>& anchor_speakers() const noexcept { return anchor_speakers_; }

 private:
  struct SpeakerInfo {
    std::vector<std::size_t> rows;
    std::vector<std::string> sentences;  // parallel to rows
    std::vector<std::size_t> same_sex_others;  // indices into speakers_
  };
  std::vector<SpeakerInfo> speakers_;
  std::vector<std::size_t> anchors_;  // usable speakers
  std::vector<std::string> anchor_speakers_;
  std::uint64_t seed_;
};

/// Epoch used for the fixed validation stream.
inline constexpr std::uint64_t kValidationEpoch = 0xffffffffULL;

/// Streams `n_pairs` concatenated pairs per epoch. Rows are standardised
/// pooled vectors; the input is [x_a, x_b].
class PairSource : public nn::BatchSource {
 public:
  PairSource(const PairGenerator& gen, const Matrix& rows, std::size_t n_pairs);
  std::size_t size() const override { return n_pairs_; }
  void begin_epoch(int epoch) override { epoch_ = static_cast<std::uint64_t>(epoch); }
  void fill(std::size_t start, std::size_t count, Matrix& x, std::vector<int>& labels) override;

 private:
  const PairGenerator& gen_;
  const Matrix& rows_;
  std::size_t n_pairs_;
  std::uint64_t epoch_ = 0;
};

struct PairSample {
  Vector input;
  int label = 0;
  std::string utt_a, utt_b;
};

/// Materialised stream for one epoch. Throws for odd n_pairs.
std::vector<PairSample> generate_pairs(const Manifest& manifest, const PooledSet& pooled, std::size_t n_pairs,
                                       std::uint64_t seed, std::uint64_t epoch = 0);

/// Stacks the first `n_pairs` pairs of an epoch into (x, labels).
void materialize(const PairGenerator& gen, const Matrix& rows, std::uint64_t epoch, std::size_t n_pairs, Matrix& x,
                 std::vector<int>& labels);

struct DecoderConfig {
  std::vector<int> layer_sizes{4096};
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  int max_epochs = 100;
  int patience = 10;
  nn::Activation activation = nn::Activation::Relu;
  std::uint64_t seed = 0;

  std::string layers_label() const;  // e.g. "4096-256"
};

/// 4 depths x 2 learning rates x 3 batch sizes.
std::vector<DecoderConfig> decoder_grid(std::uint64_t seed);
/// Single-layer node round at a fixed learning rate and batch size.
std::vector<DecoderConfig> node_grid(double learning_rate, std::size_t batch_size, std::uint64_t seed);

struct TrainedDecoder {
  nn::Mlp net;
  DecoderConfig config;
  double val_accuracy = 0.0;
  nn::TrainTrace trace;
};

/// Sigmoid-headed MLP trained with binary cross-entropy and Adam, early
/// stopping on validation loss. Throws when the training or validation
/// labels contain a single class.
TrainedDecoder train_decoder(nn::BatchSource& train, const Matrix& val_x, const std::vector<int>& val_labels,
                             const DecoderConfig& config);

struct GridRow {
  DecoderConfig config;
  double val_accuracy = 0.0;
  int epochs_run = 0;
};

/// Trains every configuration on a fresh stream of `pairs_per_epoch` pairs;
/// validation is the fixed stream. Returns rows in grid order and the best
/// decoder (highest accuracy, first wins ties).
std::vector<GridRow> grid_search(const PairGenerator& gen, const Matrix& rows, std::size_t pairs_per_epoch,
                                 std::size_t val_pairs, const std::vector<DecoderConfig>& grid,
                                 TrainedDecoder* best = nullptr);

struct TrialDecision {
  int trial_id = 0;
  std::string stim_1, stim_2;
  double p_same = 0.0;
  bool same = false;  // p_same >= 0.5
};

/// `rows` holds standardised pooled vectors of `pooled.ids`.
std::vector<TrialDecision> evaluate_on_trials(const nn::Mlp& net, const std::vector<stimsel::TrialSpec>& trials,
                                              const PooledSet& pooled);

struct BootstrapConfig {
  std::size_t n_trials = 10000;
  std::size_t train_per_speaker = 7;
  std::size_t test_per_speaker = 3;
  std::uint64_t seed = 0;
  probe::ProbeConfig probe;  // hidden [100]; the first learning rate of its grid is used

  BootstrapConfig() { probe.learning_rate_grid = {1e-3}; }
};

struct ConfusionMatrix {
  std::vector<std::string> speakers;  // sorted by misidentification total, then id
  /// counts[i][j]: test utterances of speaker i identified as j, summed over
  /// trials. The diagonal holds correct identifications.
  std::vector<std::vector<long long>> counts;

  long long misidentifications(std::size_t i) const;
  long long off_diagonal_total() const;
};

/// Each trial samples train/test utterances per speaker from (seed, trial),
/// standardises on the training part and trains a probe on it. Trials run
/// in parallel.
ConfusionMatrix bootstrap_confusion(const PooledSet& pooled, const Manifest& manifest, const BootstrapConfig& config);

struct CorrelationRow {
  std::string level;  // "speaker" or "pair"
  std::string x, y;
  behavior::Correlation result;
};

/// Speaker level: misidentification total, mean duration and, per metric,
/// the mean distance to every other speaker, correlated pairwise. Pair level:
/// symmetric confusion count of each speaker pair against its distance.
std::vector<CorrelationRow> confusion_vs_distance(const ConfusionMatrix& confusion,
                                                  const std::vector<distances::DistanceMatrix>& speaker_distances,
                                                  const std::map<std::string, double>& mean_durations);

}  // namespace voiceprobe::discrim
