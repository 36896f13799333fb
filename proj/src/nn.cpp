// src/nn.cpp

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

#include "voiceprobe/nn.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <json.hpp>

namespace voiceprobe::nn {

namespace {

constexpr Eigen::Index kChunkRows = 64;

void activate(Matrix& z, Activation a) {
  switch (a) {
    case Activation::Relu: z = z.cwiseMax(0.0); break;
    case Activation::Tanh: z = z.array().tanh().matrix(); break;
    case Activation::Identity: break;
  }
}

// Multiplies `delta` in place by the activation derivative, given the
// activation output `h`.
void backprop_activation(Matrix& delta, const Matrix& h, Activation a) {
  switch (a) {
    case Activation::Relu: delta = (h.array() > 0.0).select(delta, 0.0); break;
    case Activation::Tanh: delta = (delta.array() * (1.0 - h.array().square())).matrix(); break;
    case Activation::Identity: break;
  }
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<Dense> zeros_like(const std::vector<Dense>& layers) {
  std::vector<Dense> g;
  g.reserve(layers.size());
  for (const auto& l : layers) g.push_back({Matrix::Zero(l.weights.rows(), l.weights.cols()), Vector::Zero(l.bias.size())});
  return g;
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity" || name == "linear") return Activation::Identity;
  throw Error("unknown activation '" + name + "'");
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Mlp::Mlp(Eigen::Index inputs, const std::vector<int>& hidden, Eigen::Index outputs, Activation activation,
         Head head, std::mt19937_64& rng)
    : activation_(activation), head_(head) {
  if (inputs < 1 || outputs < 1) throw Error("Mlp: inputs and outputs must be positive");
  if (head == Head::Sigmoid && outputs != 1) throw Error("Mlp: sigmoid head has exactly one output");
  Eigen::Index fan_in = inputs;
  auto add_layer = [&](Eigen::Index fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Dense d{Matrix(fan_in, fan_out), Vector(fan_out)};
    for (Eigen::Index c = 0; c < fan_out; ++c)
      for (Eigen::Index r = 0; r < fan_in; ++r) d.weights(r, c) = u(rng);
    for (Eigen::Index c = 0; c < fan_out; ++c) d.bias(c) = u(rng);
    layers_.push_back(std::move(d));
    fan_in = fan_out;
  };
  for (int h : hidden) {
    if (h < 1) throw Error("Mlp: hidden layer sizes must be positive");
    add_layer(h);
  }
  add_layer(outputs);
}

std::vector<int> Mlp::hidden_sizes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) out.push_back(static_cast<int>(layers_[i].weights.cols()));
  return out;
}

std::vector<Matrix> Mlp::forward(const Matrix& x) const {
  std::vector<Matrix> acts;
  acts.reserve(layers_.size());
  const Matrix* in = &x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = (*in) * layers_[i].weights;
    z.rowwise() += layers_[i].bias.transpose();
    if (i + 1 < layers_.size()) activate(z, activation_);
    acts.push_back(std::move(z));
    in = &acts.back();
  }
  return acts;
}

Matrix Mlp::predict_proba(const Matrix& x) const {
  if (x.cols() != inputs()) throw Error("Mlp: input dimension mismatch");
  Matrix logits = forward(x).back();
  if (head_ == Head::Sigmoid) return logits.unaryExpr([](double z) { return sigmoid(z); });
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double m = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - m).exp().matrix();
    logits.row(r) /= logits.row(r).sum();
  }
  return logits;
}

std::vector<int> Mlp::predict(const Matrix& x) const {
  Matrix p = predict_proba(x);
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    if (head_ == Head::Sigmoid) {
      out[static_cast<std::size_t>(r)] = p(r, 0) >= 0.5 ? 1 : 0;
    } else {
      Eigen::Index best;
      p.row(r).maxCoeff(&best);
      out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
  }
  return out;
}

double Mlp::loss(const Matrix& x, const std::vector<int>& labels) const {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error("Mlp::loss: label count mismatch");
  if (labels.empty()) throw Error("Mlp::loss: empty batch");
  Matrix logits = forward(x).back();
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int y = labels[static_cast<std::size_t>(r)];
    if (head_ == Head::Sigmoid) {
      double z = logits(r, 0);
      total += softplus(z) - (y == 1 ? z : 0.0);
    } else {
      double m = logits.row(r).maxCoeff();
      double lse = m + std::log((logits.row(r).array() - m).exp().sum());
      total += lse - logits(r, y);
    }
  }
  return total / static_cast<double>(logits.rows());
}

double Mlp::chunk_gradient(const Matrix& x, const std::vector<int>& labels, Eigen::Index row0, Eigen::Index rows,
                           std::vector<Dense>& grad) const {
  Matrix xb = x.middleRows(row0, rows);
  auto acts = forward(xb);
  Matrix delta = acts.back();
  double loss_sum = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    int y = labels[static_cast<std::size_t>(row0 + r)];
    if (head_ == Head::Sigmoid) {
      double z = delta(r, 0);
      loss_sum += softplus(z) - (y == 1 ? z : 0.0);
      delta(r, 0) = sigmoid(z) - (y == 1 ? 1.0 : 0.0);
    } else {
      double m = delta.row(r).maxCoeff();
      Eigen::RowVectorXd e = (delta.row(r).array() - m).exp().matrix();
      double s = e.sum();
      loss_sum += m + std::log(s) - delta(r, y);
      delta.row(r) = e / s;
      delta(r, y) -= 1.0;
    }
  }
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Matrix& input = li == 0 ? xb : acts[li - 1];
    grad[li].weights.noalias() += input.transpose() * delta;
    grad[li].bias += delta.colwise().sum().transpose();
    if (li > 0) {
      Matrix next = delta * layers_[li].weights.transpose();
      backprop_activation(next, acts[li - 1], activation_);
      delta = std::move(next);
    }
  }
  return loss_sum;
}

std::vector<Dense> Mlp::gradient(const Matrix& x, const std::vector<int>& labels, double l2,
                                 double* batch_loss) const {
  const Eigen::Index n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) throw Error("Mlp::gradient: bad batch");
  if (x.cols() != inputs()) throw Error("Mlp: input dimension mismatch");
  const Eigen::Index chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<std::vector<Dense>> partial(static_cast<std::size_t>(chunks));
  std::vector<double> losses(static_cast<std::size_t>(chunks), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    try {
      auto& g = partial[static_cast<std::size_t>(c)];
      g = zeros_like(layers_);
      Eigen::Index row0 = c * kChunkRows;
      losses[static_cast<std::size_t>(c)] = chunk_gradient(x, labels, row0, std::min(kChunkRows, n - row0), g);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<Dense> grad = std::move(partial[0]);
  double loss_sum = losses[0];
  for (std::size_t c = 1; c < partial.size(); ++c) {
    for (std::size_t li = 0; li < grad.size(); ++li) {
      grad[li].weights += partial[c][li].weights;
      grad[li].bias += partial[c][li].bias;
    }
    loss_sum += losses[c];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double penalty = 0.0;
  for (std::size_t li = 0; li < grad.size(); ++li) {
    grad[li].weights *= inv_n;
    grad[li].bias *= inv_n;
    if (l2 > 0.0) {
      grad[li].weights += (l2 * inv_n) * layers_[li].weights;
      penalty += layers_[li].weights.squaredNorm();
    }
  }
  if (batch_loss) *batch_loss = loss_sum * inv_n + 0.5 * l2 * penalty * inv_n;
  return grad;
}

std::string Mlp::to_json() const {
  nlohmann::json j;
  j["activation"] = nn::to_string(activation_);
  j["head"] = head_ == Head::Sigmoid ? "sigmoid" : "softmax";
  j["layers"] = nlohmann::json::array();
  for (const auto& l : layers_) {
    nlohmann::json lj;
    lj["rows"] = l.weights.rows();
    lj["cols"] = l.weights.cols();
    std::vector<double> w(l.weights.data(), l.weights.data() + l.weights.size());
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    lj["weights_colmajor"] = w;
    lj["bias"] = b;
    j["layers"].push_back(lj);
  }
  return j.dump();
}

Mlp Mlp::from_json(const std::string& text, const std::string& source) {
  Mlp net;
  try {
    auto j = nlohmann::json::parse(text);
    net.activation_ = parse_activation(j.at("activation").get<std::string>());
    net.head_ = j.at("head").get<std::string>() == "sigmoid" ? Head::Sigmoid : Head::Softmax;
    for (const auto& lj : j.at("layers")) {
      auto rows = lj.at("rows").get<Eigen::Index>();
      auto cols = lj.at("cols").get<Eigen::Index>();
      auto w = lj.at("weights_colmajor").get<std::vector<double>>();
      auto b = lj.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != cols)
        throw DataError(source, "layer shape mismatch");
      net.layers_.push_back({Eigen::Map<Matrix>(w.data(), rows, cols), Eigen::Map<Vector>(b.data(), cols)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source, std::string("invalid model file: ") + e.what());
  }
  if (net.layers_.empty()) throw DataError(source, "model has no layers");
  return net;
}

InMemorySource::InMemorySource(const Matrix& x, const std::vector<int>& labels, std::uint64_t seed)
    : x_(x), labels_(labels), seed_(seed), order_(labels.size()) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error("InMemorySource: label count mismatch");
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

void InMemorySource::begin_epoch(int epoch) {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  auto rng = make_rng(seed_, {static_cast<std::uint64_t>(epoch), 0x5bu});
  shuffle_in_place(order_, rng);
}

void InMemorySource::fill(std::size_t start, std::size_t count, Matrix& x, std::vector<int>& labels) {
  x.resize(static_cast<Eigen::Index>(count), x_.cols());
  labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t src = order_[start + i];
    x.row(static_cast<Eigen::Index>(i)) = x_.row(static_cast<Eigen::Index>(src));
    labels[i] = labels_[src];
  }
}

TrainTrace train(Mlp& net, BatchSource& data, const Matrix& val_x, const std::vector<int>& val_labels,
                 const TrainOptions& options) {
  if (data.size() == 0) throw Error("train: empty training set");
  if (val_labels.empty()) throw Error("train: empty validation set");
  if (options.batch_size == 0) throw Error("train: batch size must be positive");
  if (!(options.learning_rate > 0.0)) throw Error("train: learning rate must be positive");

  auto& layers = net.layers();
  std::vector<Dense> m = zeros_like(layers), v = zeros_like(layers);
  std::vector<Dense> best = layers;
  TrainTrace trace;
  trace.initial_val_loss = net.loss(val_x, val_labels);
  double best_loss = trace.initial_val_loss;
  int since_best = 0;
  long long step = 0;
  Matrix xb;
  std::vector<int> yb;

  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    data.begin_epoch(epoch);
    for (std::size_t start = 0; start < data.size(); start += options.batch_size) {
      std::size_t count = std::min(options.batch_size, data.size() - start);
      data.fill(start, count, xb, yb);
      auto g = net.gradient(xb, yb, options.l2);
      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      const double lr = options.learning_rate * std::sqrt(c2) / c1;
      for (std::size_t li = 0; li < layers.size(); ++li) {
        m[li].weights = options.beta1 * m[li].weights + (1.0 - options.beta1) * g[li].weights;
        v[li].weights = options.beta2 * v[li].weights + (1.0 - options.beta2) * g[li].weights.cwiseAbs2();
        layers[li].weights.array() -= lr * m[li].weights.array() / (v[li].weights.array().sqrt() + options.epsilon);
        m[li].bias = options.beta1 * m[li].bias + (1.0 - options.beta1) * g[li].bias;
        v[li].bias = options.beta2 * v[li].bias + (1.0 - options.beta2) * g[li].bias.cwiseAbs2();
        layers[li].bias.array() -= lr * m[li].bias.array() / (v[li].bias.array().sqrt() + options.epsilon);
      }
    }
    double vl = net.loss(val_x, val_labels);
    if (!std::isfinite(vl)) throw Error("train: validation loss is not finite");
    trace.val_loss.push_back(vl);
    trace.epochs_run = epoch + 1;
    if (vl < best_loss) {
      best_loss = vl;
      best = layers;
      trace.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= options.patience) {
      trace.stopped_early = true;
      break;
    }
  }
  layers = std::move(best);
  return trace;
}

}  // namespace voiceprobe::nn
