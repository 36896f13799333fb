// src/cli_commands.cpp

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

#include "cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "voiceprobe/behavior.hpp"
#include "voiceprobe/corpus.hpp"
#include "voiceprobe/csv.hpp"
#include "voiceprobe/discrim.hpp"
#include "voiceprobe/distances.hpp"
#include "voiceprobe/encoding.hpp"
#include "voiceprobe/log.hpp"
#include "voiceprobe/probe.hpp"
#include "voiceprobe/similarity.hpp"
#include "voiceprobe/stats.hpp"
#include "voiceprobe/stimsel.hpp"

namespace voiceprobe::cli {

namespace {

using distances::Metric;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<Criterion> parse_criteria(const std::vector<std::string>& terms) {
  std::vector<Criterion> out;
  for (const auto& t : terms) out.push_back(Criterion::parse(t));
  return out;
}

// "k=v&k=v"
std::vector<Criterion> parse_condition(const std::string& text) {
  if (text == "all") return {};
  return parse_criteria(split(text, '&'));
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (const auto& t : split(text, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw UsageError(what + ": expected comma-separated integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

// "4096-256-128"
std::vector<int> parse_layers(const std::string& text) {
  std::vector<int> out;
  for (const auto& t : split(text, '-')) {
    auto v = parse_int_list(t, "--layers");
    out.insert(out.end(), v.begin(), v.end());
  }
  for (int n : out)
    if (n <= 0) throw UsageError("--layers: sizes must be positive");
  return out;
}

std::string join(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct OutputArgs {
  std::string out;
  bool json = false;
};

void add_output(CLI::App* c, OutputArgs& a) {
  c->add_option("--out", a.out, "Output CSV")->required();
  c->add_flag("--json", a.json, "Also write a JSON mirror next to the CSV");
}

struct CorpusArgs {
  std::string manifest;
  std::string embeddings_dir;
  std::string layer;
  std::vector<std::string> filters;

  Manifest load_manifest() const {
    auto m = read_manifest(manifest);
    if (!filters.empty()) m = filter(m, parse_criteria(filters));
    if (m.empty()) throw Error("no utterances left after filtering " + manifest);
    return m;
  }
};

void add_corpus(CLI::App* c, CorpusArgs& a, bool with_layer = true) {
  c->add_option("--manifest", a.manifest, "Utterance manifest (CSV or JSON)")->required();
  c->add_option("--embeddings-dir", a.embeddings_dir, "Root of the embedding files (<dir>/<layer>/<path>)")->required();
  if (with_layer) c->add_option("--layer", a.layer, "Layer tag (subdirectory of the embeddings root)");
  c->add_option("--filter", a.filters, "Keep utterances matching key=value (repeatable)");
}

struct ProbeArgs {
  std::vector<int> hidden{100};
  std::string activation = "relu";
  std::vector<double> lr_grid{1e-4, 1e-3, 1e-2};
  int repeats = 3;
  int max_epochs = 200;
  int patience = 20;
  std::size_t batch_size = 256;
  double l2 = 1e-4;
  std::uint64_t seed = 0;

  probe::ProbeConfig config() const {
    probe::ProbeConfig c;
    c.hidden_layer_sizes = hidden;
    c.activation = nn::parse_activation(activation);
    c.learning_rate_grid = lr_grid;
    c.repeats = repeats;
    c.max_epochs = max_epochs;
    c.patience = patience;
    c.batch_size = batch_size;
    c.l2 = l2;
    c.seed = seed;
    c.validate();
    return c;
  }
};

void add_probe(CLI::App* c, ProbeArgs& a, bool with_repeats = true) {
  c->add_option("--hidden", a.hidden, "Hidden layer sizes")->delimiter(',');
  c->add_option("--activation", a.activation, "relu, tanh or identity");
  c->add_option("--lr-grid", a.lr_grid, "Learning rates tried per run")->delimiter(',');
  if (with_repeats) c->add_option("--repeats", a.repeats, "Independent runs");
  c->add_option("--max-epochs", a.max_epochs, "Epoch limit");
  c->add_option("--patience", a.patience, "Early-stopping patience (epochs)");
  c->add_option("--batch-size", a.batch_size, "Minibatch size");
  c->add_option("--l2", a.l2, "L2 penalty");
  c->add_option("--seed", a.seed, "Random seed");
}

struct SplitArgs {
  std::string split;
  double train_ratio = 0.7;
  double val_ratio = 0.1;

  SplitSpec make(const Manifest& m, std::uint64_t seed) const {
    if (!split.empty()) return read_split(split, m);
    return split_by_ratio(m, train_ratio, seed, val_ratio);
  }
};

void add_split(CLI::App* c, SplitArgs& a, bool with_file = true) {
  if (with_file) c->add_option("--split", a.split, "Benchmark list CSV utterance_id,partition (overrides ratios)");
  c->add_option("--train-ratio", a.train_ratio, "Per-speaker training fraction");
  c->add_option("--val-ratio", a.val_ratio, "Per-speaker validation fraction (taken from training)");
}

const std::vector<std::string> kProbeColumns{"layer", "condition", "run", "lr", "uar", "std_uar"};

void add_probe_rows(Table& t, const std::string& layer, const std::string& condition, const probe::ProbeResult& r) {
  for (std::size_t i = 0; i < r.uar_per_run.size(); ++i)
    t.rows.push_back({layer, condition, static_cast<long long>(i + 1), r.lr_per_run[i], r.uar_per_run[i], r.std_uar});
  t.rows.push_back({layer, condition, std::string("mean"), r.best_learning_rate, r.mean_uar, r.std_uar});
}

// ---------------------------------------------------------------- probe

Command make_probe(CLI::App& root) {
  struct P {
    CorpusArgs corpus;
    ProbeArgs probe;
    SplitArgs split;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("probe", "Speaker-identification probe on pooled embeddings of one layer");
  add_corpus(c, p->corpus);
  add_split(c, p->split);
  add_probe(c, p->probe);
  add_output(c, p->out);
  return {c, &p->probe.seed, [p](const Provenance&) {
            auto cfg = p->probe.config();
            auto m = p->corpus.load_manifest();
            auto pooled = load_pooled(m, p->corpus.embeddings_dir, p->corpus.layer);
            auto sets = probe::prepare_sets(pooled, m, p->split.make(m, p->probe.seed));
            auto r = probe::run_probe(sets.train, sets.val, sets.test, cfg);
            Table t;
            t.columns = kProbeColumns;
            add_probe_rows(t, p->corpus.layer, probe::condition_label(parse_criteria(p->corpus.filters)), r);
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- layerwise

Command make_layerwise(CLI::App& root) {
  struct P {
    CorpusArgs corpus;
    std::vector<std::string> layers;
    ProbeArgs probe;
    SplitArgs split;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("layerwise", "Probe every layer with one split and report the best layer");
  add_corpus(c, p->corpus, false);
  c->add_option("--layers", p->layers, "Layer tags, in model order")->required()->delimiter(',');
  add_split(c, p->split);
  add_probe(c, p->probe);
  add_output(c, p->out);
  return {c, &p->probe.seed, [p](const Provenance&) {
            auto cfg = p->probe.config();
            auto m = p->corpus.load_manifest();
            std::vector<probe::LayerEmbeddings> layers;
            for (const auto& l : p->layers) layers.push_back({l, load_pooled(m, p->corpus.embeddings_dir, l)});
            auto r = probe::layerwise(layers, m, p->split.make(m, p->probe.seed), cfg);
            Table t;
            t.columns = kProbeColumns;
            const auto cond = probe::condition_label(parse_criteria(p->corpus.filters));
            for (std::size_t i = 0; i < r.layers.size(); ++i) add_probe_rows(t, r.layers[i], cond, r.results[i]);
            t.meta.emplace_back("best_layer", r.best_layer);
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- crosscond

Command make_crosscond(CLI::App& root) {
  struct P {
    CorpusArgs corpus;
    std::vector<std::string> train_cond;
    std::vector<std::string> test_cond;
    std::vector<int> nodes{50, 100, 200};
    std::vector<std::string> activations{"relu", "tanh", "identity"};
    ProbeArgs probe;
    SplitArgs split;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("crosscond", "Train a probe on one condition and test it on others");
  add_corpus(c, p->corpus);
  c->add_option("--train-cond", p->train_cond, "Training condition key=value (repeatable; all must hold)")->required();
  c->add_option("--test-cond", p->test_cond, "Test condition k=v[&k=v] or 'all' (repeatable)")->required();
  c->add_option("--nodes-grid", p->nodes, "Hidden sizes searched")->delimiter(',');
  c->add_option("--activations", p->activations, "Activations searched")->delimiter(',');
  add_split(c, p->split, false);
  add_probe(c, p->probe);
  add_output(c, p->out);
  return {c, &p->probe.seed, [p](const Provenance&) {
            probe::CrossConditionConfig cfg;
            cfg.base = p->probe.config();
            cfg.nodes_grid = p->nodes;
            cfg.activation_grid.clear();
            for (const auto& a : p->activations) cfg.activation_grid.push_back(nn::parse_activation(a));
            cfg.train_ratio = p->split.train_ratio;
            cfg.val_ratio = p->split.val_ratio;
            cfg.split_seed = p->probe.seed;
            auto m = p->corpus.load_manifest();
            auto pooled = load_pooled(m, p->corpus.embeddings_dir, p->corpus.layer);
            std::vector<std::vector<Criterion>> tests;
            for (const auto& t : p->test_cond) tests.push_back(parse_condition(t));
            auto results = probe::cross_condition(pooled, m, parse_criteria(p->train_cond), tests, cfg);
            Table t;
            t.columns = kProbeColumns;
            t.meta.emplace_back("train_condition", probe::condition_label(parse_criteria(p->train_cond)));
            for (const auto& r : results) {
              add_probe_rows(t, p->corpus.layer, r.condition, r.result);
              t.meta.emplace_back("best_point " + r.condition,
                                  "nodes=" + std::to_string(r.best_point.nodes) + " activation=" +
                                      nn::to_string(r.best_point.activation) + " lr=" + format_double(r.best_point.learning_rate));
            }
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- cka

Command make_cka(CLI::App& root) {
  struct P {
    std::string manifest;
    std::vector<std::string> models;
    std::string layer;
    std::vector<std::string> filters;
    long tile_threshold = 4096;
    long tile = 512;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("cka", "Linear CKA between the representations of several models");
  c->add_option("--manifest", p->manifest, "Utterance manifest")->required();
  c->add_option("--models", p->models, "tag=embeddings_dir entries")->required()->delimiter(',');
  c->add_option("--layer", p->layer, "Layer tag inside every model directory");
  c->add_option("--filter", p->filters, "Keep utterances matching key=value (repeatable)");
  c->add_option("--tile-threshold", p->tile_threshold, "Sample count above which the tiled kernel is used");
  c->add_option("--tile", p->tile, "Tile size of the tiled kernel");
  add_output(c, p->out);
  return {c, nullptr, [p](const Provenance&) {
            CorpusArgs ca{p->manifest, "", p->layer, p->filters};
            auto m = ca.load_manifest();
            std::vector<similarity::ModelFeatures> models;
            std::set<std::string> tags;
            for (const auto& spec : p->models) {
              const auto eq = spec.find('=');
              if (eq == std::string::npos || eq == 0) throw UsageError("--models: expected tag=dir, got '" + spec + "'");
              const auto tag = spec.substr(0, eq);
              if (!tags.insert(tag).second) throw UsageError("--models: duplicate tag '" + tag + "'");
              models.push_back({tag, load_pooled(m, spec.substr(eq + 1), p->layer)});
            }
            similarity::CkaOptions opts;
            opts.tile_threshold = p->tile_threshold;
            opts.tile = p->tile;
            auto table = similarity::cka_table(models, opts);
            Table t;
            t.columns.push_back("model");
            for (const auto& tag : table.tags) t.columns.push_back(tag);
            for (std::size_t i = 0; i < table.tags.size(); ++i) {
              std::vector<Value> row{table.tags[i]};
              for (std::size_t j = 0; j < table.tags.size(); ++j)
                row.emplace_back(table.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
              t.rows.push_back(std::move(row));
            }
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- distmat

std::vector<Metric> parse_metrics(const std::string& text) {
  if (text == "all") return {std::begin(distances::kAllMetrics), std::end(distances::kAllMetrics)};
  std::vector<Metric> out;
  for (const auto& t : split(text, ',')) {
    try {
      out.push_back(distances::parse_metric(t));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

std::vector<distances::DistanceMatrix> utterance_matrices(const Manifest& m, const CorpusArgs& corpus,
                                                          const std::vector<Metric>& metrics, bool frames,
                                                          bool standardize) {
  auto pooled = load_pooled(m, corpus.embeddings_dir, corpus.layer);
  if (standardize) pooled.rows = Standardizer::fit(pooled.rows).apply_rows(pooled.rows);
  std::vector<Matrix> frame_sets;
  const bool need_frames = frames && std::count(metrics.begin(), metrics.end(), Metric::Hausdorff) > 0;
  if (need_frames) frame_sets = load_frames(m, corpus.embeddings_dir, corpus.layer);
  std::vector<distances::DistanceMatrix> out;
  for (auto metric : metrics)
    out.push_back(distances::pairwise_matrix(pooled.ids, pooled.rows, need_frames ? &frame_sets : nullptr, metric,
                                             frames ? distances::Representation::Frames
                                                    : distances::Representation::Pooled));
  return out;
}

Command make_distmat(CLI::App& root) {
  struct P {
    CorpusArgs corpus;
    std::string metric = "all";
    std::string level = "utterance";
    std::string representation = "frames";
    std::string speaker_mode = "mean";
    bool standardize = false;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("distmat", "Pairwise distances between utterances or speakers");
  add_corpus(c, p->corpus);
  c->add_option("--metric", p->metric, "euclidean, cosine, hausdorff, spearman, a comma list, or all");
  c->add_option("--level", p->level, "utterance or speaker")->check(CLI::IsMember({"utterance", "speaker"}));
  c->add_option("--representation", p->representation, "Hausdorff input: frames or pooled")
      ->check(CLI::IsMember({"frames", "pooled"}));
  c->add_option("--speaker-mode", p->speaker_mode, "Speaker level: mean of utterance pairs, or set (hausdorff between utterance sets)")
      ->check(CLI::IsMember({"mean", "set"}));
  c->add_flag("--standardize", p->standardize, "z-score pooled vectors before computing distances");
  add_output(c, p->out);
  return {c, nullptr, [p](const Provenance&) {
            const auto metrics = parse_metrics(p->metric);
            auto m = p->corpus.load_manifest();
            Table t;
            t.columns = {"id_a", "id_b", "metric", "value"};
            auto emit = [&t](const distances::DistanceMatrix& d, bool diagonal) {
              for (std::size_t i = 0; i < d.ids.size(); ++i)
                for (std::size_t j = diagonal ? i : i + 1; j < d.ids.size(); ++j)
                  t.rows.push_back({d.ids[i], d.ids[j], std::string(distances::to_string(d.metric)),
                                    d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
            };
            if (p->level == "speaker" && p->speaker_mode == "set") {
              if (metrics.size() != 1 || metrics[0] != Metric::Hausdorff)
                throw UsageError("--speaker-mode set applies to --metric hausdorff only");
              auto pooled = load_pooled(m, p->corpus.embeddings_dir, p->corpus.layer);
              if (p->standardize) pooled.rows = Standardizer::fit(pooled.rows).apply_rows(pooled.rows);
              emit(distances::speaker_set_hausdorff(m, pooled), false);
            } else {
              auto mats = utterance_matrices(m, p->corpus, metrics, p->representation == "frames", p->standardize);
              if (p->level == "utterance") {
                for (const auto& d : mats) emit(d, false);
              } else {
                auto records = distances::pair_records(mats, m);
                for (auto metric : metrics) emit(distances::speaker_aggregate(records, m, metric), true);
              }
            }
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- stimsel

// Long-form distance CSV (id_a,id_b,metric,value) keyed by unordered pair.
std::map<std::string, distances::PairRecord> read_pair_table(const std::string& path) {
  auto table = read_csv(path);
  const auto ca = table.require("id_a"), cb = table.require("id_b"), cm = table.require("metric"),
             cv = table.require("value");
  std::map<std::string, distances::PairRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = path + ": row " + std::to_string(i + 1);
    Metric metric;
    try {
      metric = distances::parse_metric(row[cm]);
    } catch (const Error& e) {
      throw DataError(path, "row " + std::to_string(i + 1) + ": " + e.what());
    }
    const auto key = stimsel::pair_key(row[ca], row[cb]);
    auto& r = out[key];
    if (r.utt_a.empty()) {
      r.utt_a = std::min(row[ca], row[cb]);
      r.utt_b = std::max(row[ca], row[cb]);
    }
    if (!r.metrics.emplace(metric, parse_double(row[cv], ctx + " value")).second)
      throw DataError(path, "duplicate " + row[cm] + " value for pair " + key);
  }
  return out;
}

std::set<std::string> read_exclusions(const std::string& path) {
  std::set<std::string> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto sep = line.find_first_of(",|");
    if (sep == std::string::npos) throw DataError(path, "line " + std::to_string(n) + ": expected 'a,b'");
    out.insert(stimsel::pair_key(line.substr(0, sep), line.substr(sep + 1)));
  }
  return out;
}

Command make_stimsel(CLI::App& root) {
  struct P {
    std::string pairs;
    std::string manifest;
    std::size_t k = 50;
    std::uint64_t seed = 0;
    std::string exclude;
    double quantile_trim = 0.0;
    bool raw_scores = false;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("stimsel", "Select same/different trial pairs from overlapping distance populations");
  c->add_option("--pairs", p->pairs, "Long-form distance CSV with all four metrics (distmat --metric all)")->required();
  c->add_option("--manifest", p->manifest, "Utterance manifest")->required();
  c->add_option("--k", p->k, "Pairs per truth condition");
  c->add_option("--seed", p->seed, "Random seed");
  c->add_option("--exclude", p->exclude, "Pairs to skip, one 'a,b' per line");
  c->add_option("--quantile-trim", p->quantile_trim, "Trim the overlap envelope to these quantiles");
  c->add_flag("--raw-scores", p->raw_scores, "Score raw instead of standardised values");
  add_output(c, p->out);
  return {c, &p->seed, [p](const Provenance&) {
            auto m = read_manifest(p->manifest);
            auto table = read_pair_table(p->pairs);
            std::vector<distances::PairRecord> records;
            for (auto& [key, r] : table) {
              for (auto metric : distances::kAllMetrics)
                if (!r.metrics.count(metric))
                  throw DataError(p->pairs, "pair " + key + " lacks " + distances::to_string(metric));
              records.push_back(r);
            }
            stimsel::PipelineConfig cfg;
            cfg.k = p->k;
            cfg.seed = p->seed;
            cfg.overlap.quantile_trim = p->quantile_trim;
            cfg.raw_scores = p->raw_scores;
            if (!p->exclude.empty()) cfg.excluded = read_exclusions(p->exclude);
            auto report = stimsel::select_stimuli(records, m, cfg);
            Table t;
            t.columns = {"trial_id", "stim_1", "stim_2", "truth", "noise_order", "score"};
            for (const auto& tr : report.trials)
              t.rows.push_back({static_cast<long long>(tr.trial_id), tr.stim_1, tr.stim_2,
                                std::string(stimsel::to_string(tr.truth)), std::string(stimsel::to_string(tr.noise_order)),
                                tr.score});
            t.meta.emplace_back("retained_pairs", std::to_string(report.retained));
            for (const auto& [metric, n] : report.overlap_counts)
              t.meta.emplace_back(std::string("overlap ") + distances::to_string(metric), std::to_string(n));
            t.meta.emplace_back("common_same", std::to_string(report.common_same));
            t.meta.emplace_back("common_different", std::to_string(report.common_different));
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- behave

Command make_behave(CLI::App& root) {
  struct P {
    std::string responses;
    std::string trials;
    std::vector<std::string> group_by;
    std::string correlate_with;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("behave", "Accuracy, d' and correlations of discrimination responses");
  c->add_option("--responses", p->responses, "Response CSV")->required();
  c->add_option("--trials", p->trials, "Trial list; responses are checked against it");
  c->add_option("--group-by", p->group_by, "Breakdown keys: truth, noise_order, confidence")->delimiter(',');
  c->add_option("--correlate-with", p->correlate_with,
                "Long-form distance CSV (needs --trials) or decoder decisions CSV (trial_id,p_same)");
  add_output(c, p->out);
  return {c, nullptr, [p](const Provenance&) {
            auto responses = behavior::read_responses(p->responses);
            if (responses.empty()) throw DataError(p->responses, "no responses");
            std::map<int, stimsel::TrialSpec> trials;
            if (!p->trials.empty()) {
              for (auto& t : stimsel::read_trials(p->trials)) trials[t.trial_id] = t;
              for (const auto& r : responses) {
                auto it = trials.find(r.trial_id);
                if (it == trials.end())
                  throw DataError(p->responses, "trial " + std::to_string(r.trial_id) + " is not in " + p->trials);
                if (it->second.truth != r.truth || it->second.noise_order != r.noise_order)
                  throw DataError(p->responses, "trial " + std::to_string(r.trial_id) + " disagrees with " + p->trials);
              }
            }
            Table t;
            t.columns = {"table", "group", "metric", "value"};
            t.meta.emplace_back("dprime_correction", "log-linear (+0.5 per cell, +1 per denominator)");
            auto add = [&t](const std::string& table, const std::string& group, const std::string& metric, double v) {
              t.rows.push_back({table, group, metric, v});
            };
            auto subjects = behavior::summarize_subjects(responses);
            std::vector<double> acc, dp;
            for (const auto& s : subjects) {
              add("subject", s.subject_id, "accuracy", s.accuracy);
              add("subject", s.subject_id, "hit_rate", s.hit_rate);
              add("subject", s.subject_id, "fa_rate", s.fa_rate);
              add("subject", s.subject_id, "d_prime", s.d_prime);
              add("subject", s.subject_id, "mean_rt", s.mean_rt);
              add("subject", s.subject_id, "n", static_cast<double>(s.n));
              acc.push_back(s.accuracy);
              dp.push_back(s.d_prime);
            }
            const double nan = std::nan("");
            add("overall", "all", "accuracy_mean", stats::mean(acc));
            add("overall", "all", "accuracy_std", acc.size() > 1 ? std::sqrt(stats::sample_variance(acc)) : nan);
            add("overall", "all", "d_prime_mean", stats::mean(dp));
            add("overall", "all", "d_prime_std", dp.size() > 1 ? std::sqrt(stats::sample_variance(dp)) : nan);
            add("overall", "all", "n_subjects", static_cast<double>(subjects.size()));

            for (const auto& cell : behavior::breakdown(responses, p->group_by)) {
              std::string g;
              for (const auto& [k, v] : cell.key) g += (g.empty() ? "" : "&") + k + "=" + v;
              if (g.empty()) g = "all";
              add("breakdown", g, "accuracy", cell.accuracy.value_or(nan));
              add("breakdown", g, "count", static_cast<double>(cell.count));
            }

            // Effect sizes between per-subject accuracies of two conditions.
            auto effect = [&](const std::string& name, auto in_a) {
              std::map<std::string, std::pair<std::size_t, std::size_t>> a, b;
              for (const auto& r : responses) {
                auto& cnt = in_a(r) ? a[r.subject_id] : b[r.subject_id];
                ++cnt.first;
                cnt.second += r.correct();
              }
              std::vector<double> va, vb;
              for (const auto& [s, c] : a) va.push_back(static_cast<double>(c.second) / static_cast<double>(c.first));
              for (const auto& [s, c] : b) vb.push_back(static_cast<double>(c.second) / static_cast<double>(c.first));
              double d = nan;
              try {
                d = behavior::cohens_d(va, vb);
              } catch (const Error& e) {
                warn(std::string("cohens_d ") + name + ": " + e.what());
              }
              add("effect", name, "cohens_d", d);
            };
            effect("truth:Different-Same", [](const behavior::TrialResponse& r) { return r.truth == stimsel::Truth::Different; });
            effect("noise_order:C-N-N-C",
                   [](const behavior::TrialResponse& r) { return r.noise_order == stimsel::NoiseOrder::CleanNoisy; });

            const auto per_trial = behavior::per_trial_accuracy(responses);
            for (const auto& [id, a] : per_trial) add("trial", std::to_string(id), "accuracy", a);

            if (!p->correlate_with.empty()) {
              auto table = read_csv(p->correlate_with);
              std::map<std::string, std::vector<double>> series;
              std::vector<double> human;
              for (const auto& [id, a] : per_trial) human.push_back(a);
              if (table.find("p_same")) {
                const auto ci = table.require("trial_id"), cp = table.require("p_same");
                std::map<int, double> p_same;
                for (const auto& row : table.rows)
                  p_same[static_cast<int>(parse_int(row[ci], p->correlate_with))] = parse_double(row[cp], p->correlate_with);
                std::map<int, stimsel::Truth> truth;
                for (const auto& r : responses) truth[r.trial_id] = r.truth;
                auto& v = series["model_p_correct"];
                for (const auto& [id, a] : per_trial) {
                  auto it = p_same.find(id);
                  if (it == p_same.end())
                    throw DataError(p->correlate_with, "no decision for trial " + std::to_string(id));
                  v.push_back(truth.at(id) == stimsel::Truth::Same ? it->second : 1.0 - it->second);
                }
              } else {
                if (trials.empty()) throw UsageError("--correlate-with a distance table needs --trials");
                auto pairs = read_pair_table(p->correlate_with);
                std::set<Metric> metrics;
                for (const auto& [k, r] : pairs)
                  for (const auto& [metric, v] : r.metrics) metrics.insert(metric);
                for (auto metric : metrics) {
                  auto& v = series[distances::to_string(metric)];
                  for (const auto& [id, a] : per_trial) {
                    const auto& tr = trials.at(id);
                    auto it = pairs.find(stimsel::pair_key(tr.stim_1, tr.stim_2));
                    if (it == pairs.end() || !it->second.metrics.count(metric))
                      throw DataError(p->correlate_with, std::string("no ") + distances::to_string(metric) +
                                                             " value for trial pair " + tr.stim_1 + "," + tr.stim_2);
                    v.push_back(it->second.metrics.at(metric));
                  }
                }
              }
              for (const auto& [name, v] : series) {
                auto pr = behavior::pearson(human, v);
                auto sp = behavior::spearman(human, v);
                add("correlation", name, "pearson_r", pr.r);
                add("correlation", name, "pearson_p", pr.p);
                add("correlation", name, "spearman_rho", sp.r);
                add("correlation", name, "spearman_p", sp.p);
                add("correlation", name, "n", static_cast<double>(pr.n));
              }
            }
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- aspd

struct LoadedPooled {
  Manifest manifest;
  PooledSet pooled;  // standardised
  Standardizer standardizer;
};

Command make_aspd_train(CLI::App* aspd) {
  struct P {
    CorpusArgs corpus;
    std::uint64_t seed = 0;
    std::size_t pairs_per_epoch = 1000000;
    std::size_t val_pairs = 100000;
    std::string grid = "table";
    std::vector<std::string> layers;
    std::vector<double> lr_grid{1e-4, 1e-3};
    std::vector<std::size_t> batch_grid{64, 128, 256};
    double node_lr = 1e-4;
    std::size_t node_batch = 64;
    int max_epochs = 100;
    int patience = 10;
    std::string model_out;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = aspd->add_subcommand("train", "Grid-search same/different pair decoders");
  add_corpus(c, p->corpus);
  c->add_option("--seed", p->seed, "Random seed");
  c->add_option("--pairs-per-epoch", p->pairs_per_epoch, "Training pairs generated per epoch (even)");
  c->add_option("--val-pairs", p->val_pairs, "Fixed validation pairs (even)");
  c->add_option("--grid", p->grid, "table (depth x lr x batch), nodes (single-layer widths) or custom")
      ->check(CLI::IsMember({"table", "nodes", "custom"}));
  c->add_option("--layers", p->layers, "Custom grid layer stacks such as 512-64")->delimiter(',');
  c->add_option("--lr-grid", p->lr_grid, "Custom grid learning rates")->delimiter(',');
  c->add_option("--batch-grid", p->batch_grid, "Custom grid batch sizes")->delimiter(',');
  c->add_option("--node-lr", p->node_lr, "Learning rate of the node round");
  c->add_option("--node-batch", p->node_batch, "Batch size of the node round");
  c->add_option("--max-epochs", p->max_epochs, "Epoch limit");
  c->add_option("--patience", p->patience, "Early-stopping patience (epochs)");
  c->add_option("--model-out", p->model_out, "Write the best decoder (JSON)");
  add_output(c, p->out);
  return {c, &p->seed, [p](const Provenance& prov) {
            auto m = p->corpus.load_manifest();
            auto pooled = load_pooled(m, p->corpus.embeddings_dir, p->corpus.layer);
            auto st = Standardizer::fit(pooled.rows);
            pooled.rows = st.apply_rows(pooled.rows);
            std::vector<discrim::DecoderConfig> grid;
            if (p->grid == "table") {
              grid = discrim::decoder_grid(p->seed);
            } else if (p->grid == "nodes") {
              grid = discrim::node_grid(p->node_lr, p->node_batch, p->seed);
            } else {
              if (p->layers.empty()) throw UsageError("--grid custom needs --layers");
              for (const auto& l : p->layers)
                for (double lr : p->lr_grid)
                  for (auto b : p->batch_grid) {
                    discrim::DecoderConfig d;
                    d.layer_sizes = parse_layers(l);
                    d.learning_rate = lr;
                    d.batch_size = b;
                    d.seed = p->seed;
                    grid.push_back(d);
                  }
            }
            for (auto& g : grid) {
              g.max_epochs = p->max_epochs;
              g.patience = p->patience;
            }
            discrim::PairGenerator gen(m, pooled, p->seed);
            discrim::TrainedDecoder best;
            auto rows = discrim::grid_search(gen, pooled.rows, p->pairs_per_epoch, p->val_pairs, grid, &best);
            Table t;
            t.columns = {"lr", "batch", "layers", "val_acc"};
            for (const auto& r : rows)
              t.rows.push_back({r.config.learning_rate, static_cast<long long>(r.config.batch_size),
                                r.config.layers_label(), r.val_accuracy});
            t.meta.emplace_back("best", "layers=" + best.config.layers_label() + " lr=" +
                                            format_double(best.config.learning_rate) +
                                            " batch=" + std::to_string(best.config.batch_size));
            Result res{{{p->out.out, t, p->out.json}}, {}};
            if (!p->model_out.empty()) {
              nlohmann::ordered_json j;
              j["tool_version"] = VOICEPROBE_VERSION;
              j["seed"] = p->seed;
              j["config_hash"] = prov.config_hash;
              j["layer"] = p->corpus.layer;
              j["layers"] = best.config.layer_sizes;
              j["learning_rate"] = best.config.learning_rate;
              j["batch_size"] = best.config.batch_size;
              j["val_accuracy"] = best.val_accuracy;
              j["standardizer"] = {{"mean", to_std(st.mean())}, {"std", to_std(st.stddev())}};
              j["decoder"] = nlohmann::ordered_json::parse(best.net.to_json());
              res.extras.push_back({p->model_out, j.dump() + "\n"});
            }
            return res;
          }};
}

Command make_aspd_eval(CLI::App* aspd) {
  struct P {
    std::string model;
    CorpusArgs corpus;
    std::string trials;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = aspd->add_subcommand("eval", "Run a trained decoder on a trial list");
  c->add_option("--model", p->model, "Decoder JSON from 'aspd train --model-out'")->required();
  add_corpus(c, p->corpus);
  c->add_option("--trials", p->trials, "Trial list CSV")->required();
  add_output(c, p->out);
  return {c, nullptr, [p](const Provenance&) {
            const auto text = read_text_file(p->model);
            nlohmann::json j;
            Standardizer st;
            nn::Mlp net;
            try {
              j = nlohmann::json::parse(text);
              st = Standardizer::from_stats(to_vector(j.at("standardizer").at("mean").get<std::vector<double>>()),
                                            to_vector(j.at("standardizer").at("std").get<std::vector<double>>()));
              net = nn::Mlp::from_json(j.at("decoder").dump(), p->model);
            } catch (const nlohmann::json::exception& e) {
              throw DataError(p->model, std::string("invalid model file: ") + e.what());
            } catch (const DataError&) {
              throw;
            } catch (const Error& e) {
              throw DataError(p->model, e.what());
            }
            const std::string layer = p->corpus.layer.empty() ? j.value("layer", std::string()) : p->corpus.layer;
            auto trials = stimsel::read_trials(p->trials);
            std::set<std::string> wanted;
            for (const auto& t : trials) {
              wanted.insert(t.stim_1);
              wanted.insert(t.stim_2);
            }
            auto full = read_manifest(p->corpus.manifest);
            for (const auto& id : wanted)
              if (!full.find(id)) throw DataError(p->trials, "stimulus '" + id + "' is not in the manifest");
            auto m = filter(full, [&wanted](const UtteranceMeta& u) { return wanted.count(u.utterance_id) > 0; });
            auto pooled = load_pooled(m, p->corpus.embeddings_dir, layer);
            pooled.rows = st.apply_rows(pooled.rows);
            auto decisions = discrim::evaluate_on_trials(net, trials, pooled);
            Table t;
            t.columns = {"trial_id", "stim_1", "stim_2", "p_same", "decision"};
            for (const auto& d : decisions)
              t.rows.push_back({static_cast<long long>(d.trial_id), d.stim_1, d.stim_2, d.p_same,
                                std::string(d.same ? "same" : "different")});
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

// ---------------------------------------------------------------- confusion

Command make_confusion(CLI::App& root) {
  struct P {
    CorpusArgs corpus;
    std::size_t n_trials = 10000;
    std::size_t train_per_speaker = 7;
    std::size_t test_per_speaker = 3;
    ProbeArgs probe;
    std::string correlations_out;
    std::string representation = "frames";
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  p->probe.lr_grid = {1e-3};
  auto* c = root.add_subcommand("confusion", "Bootstrapped speaker-identification confusion matrix");
  add_corpus(c, p->corpus);
  c->add_option("--n-trials", p->n_trials, "Bootstrap trials");
  c->add_option("--train-per-speaker", p->train_per_speaker, "Training utterances sampled per speaker and trial");
  c->add_option("--test-per-speaker", p->test_per_speaker, "Test utterances sampled per speaker and trial");
  add_probe(c, p->probe, false);
  c->add_option("--correlations-out", p->correlations_out,
                "Also correlate misidentifications with durations and speaker distances");
  c->add_option("--representation", p->representation, "Hausdorff input for the correlations: frames or pooled")
      ->check(CLI::IsMember({"frames", "pooled"}));
  add_output(c, p->out);
  return {c, &p->probe.seed, [p](const Provenance&) {
            auto m = p->corpus.load_manifest();
            auto pooled = load_pooled(m, p->corpus.embeddings_dir, p->corpus.layer);
            discrim::BootstrapConfig cfg;
            cfg.n_trials = p->n_trials;
            cfg.train_per_speaker = p->train_per_speaker;
            cfg.test_per_speaker = p->test_per_speaker;
            cfg.seed = p->probe.seed;
            cfg.probe = p->probe.config();
            auto conf = discrim::bootstrap_confusion(pooled, m, cfg);
            Table t;
            t.columns.push_back("speaker");
            for (const auto& s : conf.speakers) t.columns.push_back(s);
            t.columns.push_back("misidentifications");
            for (std::size_t i = 0; i < conf.speakers.size(); ++i) {
              std::vector<Value> row{conf.speakers[i]};
              for (auto v : conf.counts[i]) row.emplace_back(static_cast<long long>(v));
              row.emplace_back(static_cast<long long>(conf.misidentifications(i)));
              t.rows.push_back(std::move(row));
            }
            Result res{{{p->out.out, t, p->out.json}}, {}};
            if (!p->correlations_out.empty()) {
              std::vector<Metric> metrics(std::begin(distances::kAllMetrics), std::end(distances::kAllMetrics));
              auto mats = utterance_matrices(m, p->corpus, metrics, p->representation == "frames", false);
              auto records = distances::pair_records(mats, m);
              std::vector<distances::DistanceMatrix> speaker;
              for (auto metric : metrics) speaker.push_back(distances::speaker_aggregate(records, m, metric));
              std::map<std::string, std::pair<double, std::size_t>> dur;
              for (const auto& u : m) {
                dur[u.speaker_id].first += u.duration_s;
                ++dur[u.speaker_id].second;
              }
              std::map<std::string, double> mean_dur;
              for (const auto& [s, d] : dur) mean_dur[s] = d.first / static_cast<double>(d.second);
              Table ct;
              ct.columns = {"level", "x", "y", "r", "p", "n"};
              for (const auto& row : discrim::confusion_vs_distance(conf, speaker, mean_dur))
                ct.rows.push_back({row.level, row.x, row.y, row.result.r, row.result.p, static_cast<long long>(row.result.n)});
              res.outputs.push_back({p->correlations_out, ct, p->out.json});
            }
            return res;
          }};
}

// ---------------------------------------------------------------- encode / decode-labels

std::size_t resolve_holdout(const std::vector<std::string>& ids, const std::string& wanted, const std::string& source) {
  if (wanted.empty()) return ids.size() - 1;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == wanted) return i;
  throw DataError(source, "no run '" + wanted + "'");
}

Command make_encode(CLI::App& root) {
  struct P {
    std::string runs;
    std::string holdout;
    std::vector<double> alpha_grid{1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
    std::vector<std::string> lags{"1,2,3,4"};
    bool global_alpha = false;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("encode", "Delayed-feature ridge encoding with leave-one-run-out selection");
  c->add_option("--runs", p->runs, "Runs CSV run_id,features_path,targets_path,tr_s")->required();
  c->add_option("--holdout-run", p->holdout, "Held-out run id (default: the last run)");
  c->add_option("--alpha-grid", p->alpha_grid, "Ridge penalties")->delimiter(',');
  c->add_option("--lags", p->lags, "Lag set in TRs such as 1,2,3,4 (repeat to search several)");
  c->add_flag("--global-alpha", p->global_alpha, "One alpha for all targets instead of one per target");
  add_output(c, p->out);
  return {c, nullptr, [p](const Provenance&) {
            auto runs = encoding::read_runs(p->runs);
            std::vector<std::string> ids;
            for (const auto& r : runs) ids.push_back(r.run_id);
            encoding::LoroOptions opts;
            opts.alpha_grid = p->alpha_grid;
            opts.lags_grid.clear();
            for (const auto& l : p->lags) opts.lags_grid.push_back(parse_int_list(l, "--lags"));
            opts.per_target_alpha = !p->global_alpha;
            auto r = encoding::loro_cv(runs, resolve_holdout(ids, p->holdout, p->runs), opts);
            Table t;
            t.columns = {"target_index", "r", "r2", "alpha"};
            for (std::size_t g = 0; g < r.r.size(); ++g)
              t.rows.push_back({static_cast<long long>(g), r.r[g], r.r2[g], r.alpha[g]});
            t.meta.emplace_back("holdout_run", r.holdout_run);
            t.meta.emplace_back("lags", join(r.lags, ','));
            t.meta.emplace_back("inner_mean_r", format_double(r.inner_score));
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

Command make_decode(CLI::App& root) {
  struct P {
    std::string runs;
    std::string segments;
    std::string mode = "shift";
    int shift = 1;
    std::string lags = "0";
    std::vector<double> c_grid{1e-3, 1e-2, 1e-1, 1.0, 1e1};
    std::string holdout;
    std::uint64_t seed = 0;
    OutputArgs out;
  };
  auto p = std::make_shared<P>();
  auto* c = root.add_subcommand("decode-labels", "Decode voice-activity labels from target time series with a linear SVM");
  c->add_option("--runs", p->runs, "Runs CSV; the target matrices are the decoder inputs")->required();
  c->add_option("--segments", p->segments, "Segments CSV start_s,end_s[,run_id]")->required();
  c->add_option("--mode", p->mode, "Label alignment: shift or hrf")->check(CLI::IsMember({"shift", "hrf"}));
  c->add_option("--shift", p->shift, "Shift in TRs for --mode shift");
  c->add_option("--lags", p->lags, "Delays applied to the inputs, in TRs");
  c->add_option("--c-grid", p->c_grid, "SVM penalties")->delimiter(',');
  c->add_option("--holdout-run", p->holdout, "Held-out run id (default: the last run)");
  c->add_option("--seed", p->seed, "Random seed");
  add_output(c, p->out);
  return {c, &p->seed, [p](const Provenance&) {
            auto runs = encoding::read_runs(p->runs);
            auto segments = encoding::read_segments(p->segments);
            encoding::AlignMode mode;
            mode.kind = p->mode == "hrf" ? encoding::AlignMode::Kind::Hrf : encoding::AlignMode::Kind::Shift;
            mode.shift = p->shift;
            const auto lags = parse_int_list(p->lags, "--lags");
            std::vector<encoding::LabeledRun> labeled;
            std::vector<std::string> ids;
            for (const auto& r : runs) {
              std::vector<std::pair<double, double>> segs;
              for (const auto& s : segments)
                if (s.run_id.empty() || s.run_id == r.run_id) segs.emplace_back(s.start_s, s.end_s);
              encoding::LabeledRun lr;
              lr.run_id = r.run_id;
              lr.features = encoding::delay_features(r.targets, lags);
              try {
                lr.labels = encoding::align_labels(segs, static_cast<std::size_t>(r.targets.rows()), r.tr_s, mode);
              } catch (const Error& e) {
                throw DataError(p->segments, "run '" + r.run_id + "': " + e.what());
              }
              ids.push_back(r.run_id);
              labeled.push_back(std::move(lr));
            }
            auto res = encoding::svc_decode(labeled, resolve_holdout(ids, p->holdout, p->runs), p->c_grid, p->seed);
            Table t;
            t.columns = {"c", "inner_balanced_accuracy", "selected", "holdout_balanced_accuracy"};
            for (std::size_t i = 0; i < p->c_grid.size(); ++i) {
              const bool sel = p->c_grid[i] == res.c;
              t.rows.push_back({p->c_grid[i], res.inner_scores[i], static_cast<long long>(sel),
                                sel ? res.balanced_accuracy : std::nan("")});
            }
            t.meta.emplace_back("holdout_run", res.holdout_run);
            return Result{{{p->out.out, t, p->out.json}}, {}};
          }};
}

}  // namespace

std::vector<Command> register_commands(CLI::App& root) {
  std::vector<Command> out;
  out.push_back(make_probe(root));
  out.push_back(make_layerwise(root));
  out.push_back(make_crosscond(root));
  out.push_back(make_cka(root));
  out.push_back(make_distmat(root));
  out.push_back(make_stimsel(root));
  out.push_back(make_behave(root));
  auto* aspd = root.add_subcommand("aspd", "Same/different speaker pair decoders");
  aspd->require_subcommand(1);
  out.push_back(make_aspd_train(aspd));
  out.push_back(make_aspd_eval(aspd));
  out.push_back(make_confusion(root));
  out.push_back(make_encode(root));
  out.push_back(make_decode(root));
  return out;
}

}  // namespace voiceprobe::cli
