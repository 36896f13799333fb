// src/probe.cpp

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

#include "voiceprobe/probe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <map>
#include <set>

namespace voiceprobe::probe {

double uar(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (truth.empty()) throw Error("uar: empty input");
  if (predictions.size() != truth.size()) throw Error("uar: prediction/truth length mismatch");
  std::map<int, std::pair<long long, long long>> per_class;  // class -> (correct, count)
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& c = per_class[truth[i]];
    ++c.second;
    if (predictions[i] == truth[i]) ++c.first;
  }
  double sum = 0.0;
  for (const auto& [cls, c] : per_class) sum += static_cast<double>(c.first) / static_cast<double>(c.second);
  return sum / static_cast<double>(per_class.size());
}

double uar(const std::vector<std::string>& predictions, const std::vector<std::string>& truth) {
  if (predictions.size() != truth.size()) throw Error("uar: prediction/truth length mismatch");
  std::map<std::string, int> code;
  for (const auto& t : truth) code.emplace(t, 0);
  for (const auto& p : predictions) code.emplace(p, 0);
  int next = 0;
  for (auto& [k, v] : code) v = next++;
  std::vector<int> p(predictions.size()), t(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    p[i] = code[predictions[i]];
    t[i] = code[truth[i]];
  }
  return uar(p, t);
}

void ProbeConfig::validate() const {
  if (hidden_layer_sizes.empty()) throw Error("probe config: hidden_layer_sizes must not be empty");
  for (int h : hidden_layer_sizes)
    if (h < 1) throw Error("probe config: hidden layer sizes must be positive");
  if (learning_rate_grid.empty()) throw Error("probe config: learning-rate grid must not be empty");
  for (double lr : learning_rate_grid)
    if (!(lr > 0.0)) throw Error("probe config: learning rates must be positive");
  if (max_epochs < 1) throw Error("probe config: max_epochs must be >= 1");
  if (patience < 1 || patience >= max_epochs) throw Error("probe config: need 1 <= patience < max_epochs");
  if (batch_size < 1) throw Error("probe config: batch_size must be >= 1");
  if (repeats < 1) throw Error("probe config: repeats must be >= 1");
}

namespace {

std::vector<int> encode(const std::vector<std::string>& labels, const std::vector<std::string>& classes,
                        const char* what) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = std::lower_bound(classes.begin(), classes.end(), labels[i]);
    if (it == classes.end() || *it != labels[i])
      throw Error(std::string(what) + ": label '" + labels[i] + "' was not seen in training");
    out[i] = static_cast<int>(it - classes.begin());
  }
  return out;
}

std::uint64_t run_seed(std::uint64_t seed, int repeat) {
  auto rng = make_rng(seed, {0x9e0bu, static_cast<std::uint64_t>(repeat)});
  return rng();
}

struct Candidate {
  nn::Mlp net;
  nn::TrainTrace trace;
  double val_uar = 0.0;
};

double population_std(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

std::vector<std::string> TrainedProbe::predict(const Matrix& x) const {
  auto idx = net.predict(x);
  std::vector<std::string> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = classes[static_cast<std::size_t>(idx[i])];
  return out;
}

TrainedProbe train_probe(const LabeledSet& train, const LabeledSet& val, const ProbeConfig& config,
                         std::uint64_t seed) {
  config.validate();
  if (static_cast<std::size_t>(train.x.rows()) != train.labels.size() ||
      static_cast<std::size_t>(val.x.rows()) != val.labels.size())
    throw Error("train_probe: label count mismatch");
  if (val.labels.empty()) throw Error("train_probe: empty validation set");
  if (train.x.cols() != val.x.cols()) throw Error("train_probe: train/val dimension mismatch");
  std::set<std::string> class_set(train.labels.begin(), train.labels.end());
  if (class_set.size() < 2) throw Error("train_probe: need at least two classes in training");
  std::vector<std::string> classes(class_set.begin(), class_set.end());
  auto y_train = encode(train.labels, classes, "train_probe");
  auto y_val = encode(val.labels, classes, "train_probe (validation)");

  const auto& grid = config.learning_rate_grid;
  std::vector<Candidate> candidates(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  const auto n_grid = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t g = 0; g < n_grid; ++g) {
    try {
      const double lr = grid[static_cast<std::size_t>(g)];
      auto rng = make_rng(seed, {std::bit_cast<std::uint64_t>(lr), 0x1au});
      nn::Mlp net(train.x.cols(), config.hidden_layer_sizes, static_cast<Eigen::Index>(classes.size()),
                  config.activation, nn::Head::Softmax, rng);
      nn::InMemorySource source(train.x, y_train, rng());
      nn::TrainOptions opts;
      opts.learning_rate = lr;
      opts.max_epochs = config.max_epochs;
      opts.patience = config.patience;
      opts.batch_size = config.batch_size;
      opts.l2 = config.l2;
      auto& c = candidates[static_cast<std::size_t>(g)];
      c.trace = nn::train(net, source, val.x, y_val, opts);
      c.val_uar = uar(net.predict(val.x), y_val);
      c.net = std::move(net);
    } catch (...) {
      errors[static_cast<std::size_t>(g)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const auto& a = candidates[g];
    const auto& b = candidates[best];
    if (a.val_uar > b.val_uar || (a.val_uar == b.val_uar && grid[g] < grid[best])) best = g;
  }
  TrainedProbe out;
  out.net = std::move(candidates[best].net);
  out.trace = std::move(candidates[best].trace);
  out.classes = std::move(classes);
  out.learning_rate = grid[best];
  out.val_uar = candidates[best].val_uar;
  return out;
}

ProbeResult evaluate_probe(const TrainedProbe& probe, const LabeledSet& test) {
  if (test.labels.empty()) throw Error("evaluate_probe: empty test set");
  auto truth = encode(test.labels, probe.classes, "evaluate_probe");
  auto pred = probe.net.predict(test.x);
  const std::size_t c = probe.classes.size();
  ProbeResult r;
  r.classes = probe.classes;
  r.confusion.assign(c, std::vector<long long>(c, 0));
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  r.per_class_recall.assign(c, std::nan(""));
  for (std::size_t k = 0; k < c; ++k) {
    long long total = 0;
    for (auto v : r.confusion[k]) total += v;
    if (total > 0) r.per_class_recall[k] = static_cast<double>(r.confusion[k][k]) / static_cast<double>(total);
  }
  double u = uar(pred, truth);
  r.uar_per_run = {u};
  r.lr_per_run = {probe.learning_rate};
  r.mean_uar = u;
  r.std_uar = 0.0;
  r.best_learning_rate = probe.learning_rate;
  return r;
}

namespace {

LabeledSet gather(const PooledSet& pooled, const Manifest& manifest, const std::vector<std::string>& ids) {
  LabeledSet s;
  s.x = pooled.select(ids);
  s.labels.reserve(ids.size());
  for (const auto& id : ids) s.labels.push_back(manifest.at(id).speaker_id);
  return s;
}

// Aggregates single-run results; the confusion of the best run (first on ties) is kept.
ProbeResult aggregate(std::vector<ProbeResult> runs) {
  ProbeResult out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.uar_per_run.push_back(runs[i].mean_uar);
    out.lr_per_run.push_back(runs[i].best_learning_rate);
    if (runs[i].mean_uar > runs[best].mean_uar) best = i;
  }
  double sum = 0.0;
  for (double u : out.uar_per_run) sum += u;
  out.mean_uar = sum / static_cast<double>(out.uar_per_run.size());
  out.std_uar = population_std(out.uar_per_run, out.mean_uar);
  out.best_learning_rate = runs[best].best_learning_rate;
  out.classes = std::move(runs[best].classes);
  out.confusion = std::move(runs[best].confusion);
  out.per_class_recall = std::move(runs[best].per_class_recall);
  return out;
}

// Runs the repeats of one configuration; `tests` are evaluated with the
// same trained probes. Returns one aggregated result per test set.
std::vector<ProbeResult> run_repeats(const LabeledSet& train, const LabeledSet& val,
                                     const std::vector<const LabeledSet*>& tests, const ProbeConfig& config,
                                     std::vector<double>* val_uars = nullptr) {
  config.validate();
  const int repeats = config.repeats;
  std::vector<std::vector<ProbeResult>> per_test(tests.size(), std::vector<ProbeResult>(static_cast<std::size_t>(repeats)));
  std::vector<double> vals(static_cast<std::size_t>(repeats));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(repeats));
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < repeats; ++r) {
    try {
      auto probe = train_probe(train, val, config, run_seed(config.seed, r));
      vals[static_cast<std::size_t>(r)] = probe.val_uar;
      for (std::size_t t = 0; t < tests.size(); ++t)
        per_test[t][static_cast<std::size_t>(r)] = evaluate_probe(probe, *tests[t]);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (val_uars) *val_uars = vals;
  std::vector<ProbeResult> out;
  for (auto& runs : per_test) out.push_back(aggregate(std::move(runs)));
  return out;
}

}  // namespace

PreparedSets prepare_sets(const PooledSet& pooled, const Manifest& manifest, const SplitSpec& split) {
  PreparedSets p{gather(pooled, manifest, split.ids(manifest, Partition::Train)),
                 gather(pooled, manifest, split.ids(manifest, Partition::Val)),
                 gather(pooled, manifest, split.ids(manifest, Partition::Test)), Standardizer{}};
  if (p.train.labels.size() < 2) throw Error("probe: training partition needs at least two utterances");
  p.standardizer = Standardizer::fit(p.train.x);
  p.train.x = p.standardizer.apply_rows(p.train.x);
  if (!p.val.labels.empty()) p.val.x = p.standardizer.apply_rows(p.val.x);
  if (!p.test.labels.empty()) p.test.x = p.standardizer.apply_rows(p.test.x);
  return p;
}

ProbeResult run_probe(const LabeledSet& train, const LabeledSet& val, const LabeledSet& test,
                      const ProbeConfig& config) {
  return run_repeats(train, val, {&test}, config).front();
}

LayerwiseResult layerwise(const std::vector<LayerEmbeddings>& layers, const Manifest& manifest,
                          const SplitSpec& split, const ProbeConfig& config) {
  if (layers.empty()) throw Error("layerwise: no layers given");
  std::set<std::string> reference(layers.front().pooled.ids.begin(), layers.front().pooled.ids.end());
  for (const auto& l : layers) {
    std::set<std::string> ids(l.pooled.ids.begin(), l.pooled.ids.end());
    if (ids != reference)
      throw Error("layerwise: layer '" + l.layer_tag + "' covers a different utterance set than '" +
                  layers.front().layer_tag + "'");
  }
  LayerwiseResult out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto sets = prepare_sets(layers[i].pooled, manifest, split);
    out.layers.push_back(layers[i].layer_tag);
    out.results.push_back(run_probe(sets.train, sets.val, sets.test, config));
    if (out.results[i].mean_uar > out.results[best].mean_uar) best = i;
  }
  out.best_layer = out.layers[best];
  return out;
}

std::vector<GridPoint> CrossConditionConfig::grid() const {
  const auto& lrs = learning_rate_grid.empty() ? base.learning_rate_grid : learning_rate_grid;
  std::vector<GridPoint> out;
  for (int n : nodes_grid)
    for (auto a : activation_grid)
      for (double lr : lrs) out.push_back({n, a, lr});
  if (out.empty()) throw Error("cross_condition: empty hyper-parameter grid");
  return out;
}

std::string condition_label(const std::vector<Criterion>& filter) {
  if (filter.empty()) return "all";
  std::string s;
  for (const auto& c : filter) s += (s.empty() ? "" : "&") + c.to_string();
  return s;
}

std::vector<ConditionResult> cross_condition(const PooledSet& pooled, const Manifest& manifest,
                                             const std::vector<Criterion>& train_filter,
                                             const std::vector<std::vector<Criterion>>& test_filters,
                                             const CrossConditionConfig& config) {
  Manifest train_subset = filter(manifest, train_filter);
  if (train_subset.empty()) throw Error("cross_condition: training condition selects no utterances");
  auto train_split = split_by_ratio(train_subset, config.train_ratio, config.split_seed, config.val_ratio);
  auto sets = prepare_sets(pooled, train_subset, train_split);
  if (sets.val.labels.empty()) throw Error("cross_condition: validation partition is empty");
  std::set<std::string> train_speakers(sets.train.labels.begin(), sets.train.labels.end());

  std::vector<LabeledSet> tests;
  for (const auto& tf : test_filters) {
    Manifest subset = filter(manifest, tf);
    if (subset.empty()) throw Error("cross_condition: test condition '" + condition_label(tf) + "' is empty");
    for (const auto& u : subset)
      if (!train_speakers.count(u.speaker_id))
        throw Error("cross_condition: test condition '" + condition_label(tf) + "' introduces unseen speaker '" +
                    u.speaker_id + "'");
    auto split = split_by_ratio(subset, config.train_ratio, config.split_seed, config.val_ratio);
    LabeledSet t = gather(pooled, subset, split.ids(subset, Partition::Test));
    t.x = sets.standardizer.apply_rows(t.x);
    tests.push_back(std::move(t));
  }
  std::vector<const LabeledSet*> test_ptrs;
  for (const auto& t : tests) test_ptrs.push_back(&t);

  auto grid = config.grid();
  std::vector<std::vector<ProbeResult>> by_point;  // grid point -> per test condition
  std::vector<double> point_val;
  for (const auto& gp : grid) {
    ProbeConfig cfg = config.base;
    cfg.hidden_layer_sizes = {gp.nodes};
    cfg.activation = gp.activation;
    cfg.learning_rate_grid = {gp.learning_rate};
    std::vector<double> vals;
    by_point.push_back(run_repeats(sets.train, sets.val, test_ptrs, cfg, &vals));
    double m = 0.0;
    for (double v : vals) m += v;
    point_val.push_back(m / static_cast<double>(vals.size()));
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (point_val[g] > point_val[best]) best = g;

  std::vector<ConditionResult> out;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    ConditionResult cr;
    cr.condition = condition_label(test_filters[t]);
    cr.best_point = grid[best];
    cr.best_point_uar = by_point[best][t].mean_uar;
    ProbeResult& r = cr.result;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto& pr = by_point[g][t];
      r.uar_per_run.insert(r.uar_per_run.end(), pr.uar_per_run.begin(), pr.uar_per_run.end());
      r.lr_per_run.insert(r.lr_per_run.end(), pr.lr_per_run.begin(), pr.lr_per_run.end());
    }
    double sum = 0.0;
    for (double u : r.uar_per_run) sum += u;
    r.mean_uar = sum / static_cast<double>(r.uar_per_run.size());
    r.std_uar = population_std(r.uar_per_run, r.mean_uar);
    const auto& bp = by_point[best][t];
    r.best_learning_rate = bp.best_learning_rate;
    r.classes = bp.classes;
    r.confusion = bp.confusion;
    r.per_class_recall = bp.per_class_recall;
    out.push_back(std::move(cr));
  }
  return out;
}

}  // namespace voiceprobe::probe
