// include/voiceprobe/nn.hpp

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

// Small fully-connected networks trained with Adam and early stopping. Used by
// the speaker-identification probes (softmax head) and the pair
// discrimination decoder (sigmoid head).

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "voiceprobe/common.hpp"

namespace voiceprobe::nn {

enum class Activation { Relu, Tanh, Identity };
enum class Head { Softmax, Sigmoid };

Activation parse_activation(const std::string& name);
const char* to_string(Activation a);

struct Dense {
  Matrix weights;  // inputs x outputs
  Vector bias;
};

class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform initialisation of weights and biases. For a sigmoid head
  /// `outputs` must be 1.
  Mlp(Eigen::Index inputs, const std::vector<int>& hidden, Eigen::Index outputs, Activation activation,
      Head head, std::mt19937_64& rng);

  Eigen::Index inputs() const { return layers_.empty() ? 0 : layers_.front().weights.rows(); }
  Eigen::Index outputs() const { return layers_.empty() ? 0 : layers_.back().weights.cols(); }
  Head head() const noexcept { return head_; }
  Activation activation() const noexcept { return activation_; }
  std::vector<int> hidden_sizes() const;

  /// Class probabilities (n x C) for softmax; P(label = 1) (n x 1) for sigmoid.
  Matrix predict_proba(const Matrix& x) const;
  /// Argmax class, or probability >= 0.5 for the sigmoid head.
  std::vector<int> predict(const Matrix& x) const;

  /// Mean cross-entropy (softmax) or binary cross-entropy (sigmoid).
  double loss(const Matrix& x, const std::vector<int>& labels) const;

  /// Gradient of mean loss + 0.5 * l2 * ||W||^2 / n over the batch. Rows are
  /// processed in fixed chunks combined in chunk order, so the result does not
  /// depend on the OpenMP thread count.
  std::vector<Dense> gradient(const Matrix& x, const std::vector<int>& labels, double l2,
                              double* batch_loss = nullptr) const;

  std::vector<Dense>& layers() noexcept { return layers_; }
  const std::vector<Dense>& layers() const noexcept { return layers_; }

  std::string to_json() const;
  static Mlp from_json(const std::string& text, const std::string& source);

 private:
  // Forward pass keeping activations (pre-head logits last).
  std::vector<Matrix> forward(const Matrix& x) const;
  double chunk_gradient(const Matrix& x, const std::vector<int>& labels, Eigen::Index row0, Eigen::Index rows,
                        std::vector<Dense>& grad) const;

  std::vector<Dense> layers_;
  Activation activation_ = Activation::Relu;
  Head head_ = Head::Softmax;
};

/// Supplies training minibatches. `begin_epoch` is called before each pass.
class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual std::size_t size() const = 0;
  virtual void begin_epoch(int epoch) = 0;
  virtual void fill(std::size_t start, std::size_t count, Matrix& x, std::vector<int>& labels) = 0;
};

/// Materialised dataset, reshuffled every epoch from (seed, epoch).
class InMemorySource : public BatchSource {
 public:
  InMemorySource(const Matrix& x, const std::vector<int>& labels, std::uint64_t seed);
  std::size_t size() const override { return labels_.size(); }
  void begin_epoch(int epoch) override;
  void fill(std::size_t start, std::size_t count, Matrix& x, std::vector<int>& labels) override;

 private:
  const Matrix& x_;
  const std::vector<int>& labels_;
  std::uint64_t seed_;
  std::vector<std::size_t> order_;
};

struct TrainOptions {
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int patience = 20;
  std::size_t batch_size = 256;
  double l2 = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainTrace {
  double initial_val_loss = 0.0;
  std::vector<double> val_loss;  // after each epoch
  int best_epoch = -1;           // -1: initial weights were never beaten
  int epochs_run = 0;
  bool stopped_early = false;
};

/// Adam on minibatches; tracks validation loss every epoch, stops after
/// `patience` epochs without improvement and restores the best weights.
TrainTrace train(Mlp& net, BatchSource& data, const Matrix& val_x, const std::vector<int>& val_labels,
                 const TrainOptions& options);

}  // namespace voiceprobe::nn
