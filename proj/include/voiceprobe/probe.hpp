// include/voiceprobe/probe.hpp

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
#include <string>
#include <vector>

#include "voiceprobe/common.hpp"
#include "voiceprobe/corpus.hpp"
#include "voiceprobe/nn.hpp"

namespace voiceprobe::probe {

/// Unweighted average recall: mean over the classes present in `truth` of
/// the fraction of that class predicted correctly.
double uar(const std::vector<int>& predictions, const std::vector<int>& truth);
double uar(const std::vector<std::string>& predictions, const std::vector<std::string>& truth);

struct ProbeConfig {
  std::vector<int> hidden_layer_sizes{100};
  nn::Activation activation = nn::Activation::Relu;
  std::vector<double> learning_rate_grid{1e-4, 1e-3, 1e-2};
  int max_epochs = 200;
  int patience = 20;
  std::size_t batch_size = 256;
  int repeats = 3;
  double l2 = 1e-4;
  std::uint64_t seed = 0;

  /// Throws Error when a grid is empty, a size is non-positive, or
  /// patience >= max_epochs.
  void validate() const;
};

/// Feature rows with string class labels.
struct LabeledSet {
  Matrix x;
  std::vector<std::string> labels;
};

struct TrainedProbe {
  nn::Mlp net;
  std::vector<std::string> classes;  // sorted; index = network output
  double learning_rate = 0.0;
  double val_uar = 0.0;
  nn::TrainTrace trace;

  std::vector<std::string> predict(const Matrix& x) const;
};

/// Trains one network per learning rate of the grid (concurrently) and keeps
/// the one with the best validation UAR; ties go to the lower rate. Throws
/// when validation has a class unseen in training or training has < 2 classes.
TrainedProbe train_probe(const LabeledSet& train, const LabeledSet& val, const ProbeConfig& config,
                         std::uint64_t seed);

struct ProbeResult {
  std::vector<double> uar_per_run;
  std::vector<double> lr_per_run;
  double mean_uar = 0.0;
  double std_uar = 0.0;  // population std over runs
  double best_learning_rate = 0.0;
  std::vector<std::string> classes;
  std::vector<std::vector<long long>> confusion;  // truth x predicted, best run
  std::vector<double> per_class_recall;           // NaN for classes absent from test
};

/// Single-run evaluation. Unseen test labels raise Error.
ProbeResult evaluate_probe(const TrainedProbe& probe, const LabeledSet& test);

/// Train/val/test sets from pooled vectors and a split, labelled by speaker
/// and standardised with statistics of the training partition.
struct PreparedSets {
  LabeledSet train, val, test;
  Standardizer standardizer;
};
PreparedSets prepare_sets(const PooledSet& pooled, const Manifest& manifest, const SplitSpec& split);

/// `config.repeats` independent runs (seeds derived from config.seed); the
/// result aggregates UAR as mean and std; confusion comes from the best run.
ProbeResult run_probe(const LabeledSet& train, const LabeledSet& val, const LabeledSet& test,
                      const ProbeConfig& config);

struct LayerEmbeddings {
  std::string layer_tag;
  PooledSet pooled;
};

struct LayerwiseResult {
  std::vector<std::string> layers;
  std::vector<ProbeResult> results;
  std::string best_layer;  // argmax mean UAR; first listed wins ties
};

/// Runs the probe on every layer with the same split. All layers must cover
/// the same utterances.
LayerwiseResult layerwise(const std::vector<LayerEmbeddings>& layers, const Manifest& manifest,
                          const SplitSpec& split, const ProbeConfig& config);

/// One point of the cross-condition hyper-parameter grid.
struct GridPoint {
  int nodes = 100;
  nn::Activation activation = nn::Activation::Relu;
  double learning_rate = 1e-3;
};

struct CrossConditionConfig {
  ProbeConfig base;
  std::vector<int> nodes_grid{50, 100, 200};
  std::vector<nn::Activation> activation_grid{nn::Activation::Relu, nn::Activation::Tanh,
                                              nn::Activation::Identity};
  /// Empty: use base.learning_rate_grid.
  std::vector<double> learning_rate_grid;
  double train_ratio = 0.7;
  double val_ratio = 0.1;
  std::uint64_t split_seed = 0;

  std::vector<GridPoint> grid() const;
};

struct ConditionResult {
  std::string condition;
  ProbeResult result;  // runs = grid points x repeats; std across them
  GridPoint best_point;  // selected on validation UAR of the training condition
  double best_point_uar = 0.0;
};

/// Trains on the utterances matching `train_filter` and evaluates on the
/// held-out part of every test condition. Each subset is split per speaker
/// with the same ratio and seed; the standardiser is fitted on the training
/// condition. Test conditions introducing speakers unseen in training raise Error.
std::vector<ConditionResult> cross_condition(const PooledSet& pooled, const Manifest& manifest,
                                             const std::vector<Criterion>& train_filter,
                                             const std::vector<std::vector<Criterion>>& test_filters,
                                             const CrossConditionConfig& config);

std::string condition_label(const std::vector<Criterion>& filter);

}  // namespace voiceprobe::probe
