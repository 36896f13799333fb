// src/discrim.cpp

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

#include "voiceprobe/discrim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>

#include "voiceprobe/log.hpp"

namespace voiceprobe::discrim {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  return d(rng);
}

}  // namespace

PairGenerator::PairGenerator(const Manifest& manifest, const PooledSet& pooled, std::uint64_t seed) : seed_(seed) {
  const auto ids = manifest.speakers();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  speakers_.resize(ids.size());
  std::vector<Sex> sex(ids.size());
  for (const auto& u : manifest) {
    auto row = pooled.row_of(u.utterance_id);
    if (!row) throw Error("pair generation: no pooled vector for utterance '" + u.utterance_id + "'");
    auto& s = speakers_[index.at(u.speaker_id)];
    s.rows.push_back(*row);
    s.sentences.push_back(u.sentence_id);
    sex[index.at(u.speaker_id)] = u.sex;
  }
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (i != j && sex[i] == sex[j]) speakers_[i].same_sex_others.push_back(j);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& s = speakers_[i];
    std::set<std::string> distinct(s.sentences.begin(), s.sentences.end());
    if (distinct.size() < 2) {
      warn("pair generation: speaker '" + ids[i] + "' has fewer than two distinct sentences; skipped as anchor");
      continue;
    }
    if (s.same_sex_others.empty()) {
      warn("pair generation: speaker '" + ids[i] + "' has no same-sex alternative; skipped as anchor");
      continue;
    }
    anchors_.push_back(i);
    anchor_speakers_.push_back(ids[i]);
  }
  if (anchors_.empty()) throw Error("pair generation: no speaker can anchor a triplet");
}

PairDraw PairGenerator::draw(std::uint64_t epoch, std::uint64_t index) const {
  auto rng = make_rng(seed_, {epoch, index / 2, 0x3bu});
  const auto& s = speakers_[anchors_[pick(rng, anchors_.size())]];
  const std::size_t anchor = pick(rng, s.rows.size());
  std::vector<std::size_t> positives;
  for (std::size_t k = 0; k < s.rows.size(); ++k)
    if (s.sentences[k] != s.sentences[anchor]) positives.push_back(k);
  const std::size_t positive = positives[pick(rng, positives.size())];
  const auto& other = speakers_[s.same_sex_others[pick(rng, s.same_sex_others.size())]];
  const std::size_t negative = other.rows[pick(rng, other.rows.size())];
  std::bernoulli_distribution coin(0.5);
  const bool swap_same = coin(rng);
  const bool swap_diff = coin(rng);

  PairDraw d;
  if (index % 2 == 0) {
    d = {s.rows[anchor], s.rows[positive], 1};
    if (swap_same) std::swap(d.a, d.b);
  } else {
    d = {s.rows[anchor], negative, 0};
    if (swap_diff) std::swap(d.a, d.b);
  }
  return d;
}

PairSource::PairSource(const PairGenerator& gen, const Matrix& rows, std::size_t n_pairs)
    : gen_(gen), rows_(rows), n_pairs_(n_pairs) {
  if (n_pairs == 0 || n_pairs % 2 != 0) throw Error("pair stream: n_pairs must be a positive even number");
}

void PairSource::fill(std::size_t start, std::size_t count, Matrix& x, std::vector<int>& labels) {
  const auto d = rows_.cols();
  x.resize(static_cast<Eigen::Index>(count), 2 * d);
  labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = gen_.draw(epoch_, start + i);
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r).head(d) = rows_.row(static_cast<Eigen::Index>(p.a));
    x.row(r).tail(d) = rows_.row(static_cast<Eigen::Index>(p.b));
    labels[i] = p.label;
  }
}

void materialize(const PairGenerator& gen, const Matrix& rows, std::uint64_t epoch, std::size_t n_pairs, Matrix& x,
                 std::vector<int>& labels) {
  if (n_pairs == 0 || n_pairs % 2 != 0) throw Error("pair stream: n_pairs must be a positive even number");
  const auto d = rows.cols();
  x.resize(static_cast<Eigen::Index>(n_pairs), 2 * d);
  labels.resize(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto p = gen.draw(epoch, i);
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r).head(d) = rows.row(static_cast<Eigen::Index>(p.a));
    x.row(r).tail(d) = rows.row(static_cast<Eigen::Index>(p.b));
    labels[i] = p.label;
  }
}

std::vector<PairSample> generate_pairs(const Manifest& manifest, const PooledSet& pooled, std::size_t n_pairs,
                                       std::uint64_t seed, std::uint64_t epoch) {
  if (n_pairs % 2 != 0) throw Error("generate_pairs: n_pairs must be even");
  PairGenerator gen(manifest, pooled, seed);
  std::vector<PairSample> out;
  out.reserve(n_pairs);
  const auto d = pooled.rows.cols();
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto p = gen.draw(epoch, i);
    PairSample s;
    s.input.resize(2 * d);
    s.input.head(d) = pooled.rows.row(static_cast<Eigen::Index>(p.a)).transpose();
    s.input.tail(d) = pooled.rows.row(static_cast<Eigen::Index>(p.b)).transpose();
    s.label = p.label;
    s.utt_a = pooled.ids[p.a];
    s.utt_b = pooled.ids[p.b];
    out.push_back(std::move(s));
  }
  return out;
}

std::string DecoderConfig::layers_label() const {
  std::string s;
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) s += (i ? "-" : "") + std::to_string(layer_sizes[i]);
  return s;
}

std::vector<DecoderConfig> decoder_grid(std::uint64_t seed) {
  const std::vector<std::vector<int>> depths{{4096}, {4096, 256}, {4096, 256, 128}, {4096, 256, 128, 64}};
  std::vector<DecoderConfig> out;
  for (const auto& layers : depths)
    for (double lr : {1e-4, 1e-3})
      for (std::size_t batch : {64u, 128u, 256u}) {
        DecoderConfig c;
        c.layer_sizes = layers;
        c.learning_rate = lr;
        c.batch_size = batch;
        c.seed = seed;
        out.push_back(c);
      }
  return out;
}

std::vector<DecoderConfig> node_grid(double learning_rate, std::size_t batch_size, std::uint64_t seed) {
  std::vector<DecoderConfig> out;
  for (int nodes : {512, 1024, 2048, 4096}) {
    DecoderConfig c;
    c.layer_sizes = {nodes};
    c.learning_rate = learning_rate;
    c.batch_size = batch_size;
    c.seed = seed;
    out.push_back(c);
  }
  return out;
}

namespace {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += pred[i] == truth[i];
  return static_cast<double>(ok) / static_cast<double>(truth.size());
}

bool both_labels(const std::vector<int>& labels) {
  bool zero = false, one = false;
  for (int l : labels) {
    zero |= l == 0;
    one |= l == 1;
  }
  return zero && one;
}

}  // namespace

TrainedDecoder train_decoder(nn::BatchSource& train, const Matrix& val_x, const std::vector<int>& val_labels,
                             const DecoderConfig& config) {
  if (static_cast<std::size_t>(val_x.rows()) != val_labels.size() || val_labels.empty())
    throw Error("train_decoder: empty or inconsistent validation set");
  if (!both_labels(val_labels)) throw Error("train_decoder: degenerate validation stream (one label only)");
  {
    Matrix probe_x;
    std::vector<int> probe_y;
    train.begin_epoch(0);
    train.fill(0, std::min<std::size_t>(train.size(), 4096), probe_x, probe_y);
    if (!both_labels(probe_y)) throw Error("train_decoder: degenerate training stream (one label only)");
    if (probe_x.cols() != val_x.cols()) throw Error("train_decoder: train/validation width mismatch");
  }
  auto rng = make_rng(config.seed, {0xdecu});
  TrainedDecoder out;
  out.config = config;
  out.net = nn::Mlp(val_x.cols(), config.layer_sizes, 1, config.activation, nn::Head::Sigmoid, rng);
  nn::TrainOptions opts;
  opts.learning_rate = config.learning_rate;
  opts.batch_size = config.batch_size;
  opts.max_epochs = config.max_epochs;
  opts.patience = config.patience;
  out.trace = nn::train(out.net, train, val_x, val_labels, opts);
  out.val_accuracy = accuracy(out.net.predict(val_x), val_labels);
  return out;
}

std::vector<GridRow> grid_search(const PairGenerator& gen, const Matrix& rows, std::size_t pairs_per_epoch,
                                 std::size_t val_pairs, const std::vector<DecoderConfig>& grid, TrainedDecoder* best) {
  if (grid.empty()) throw Error("grid_search: empty grid");
  Matrix vx;
  std::vector<int> vy;
  materialize(gen, rows, kValidationEpoch, val_pairs, vx, vy);
  std::vector<GridRow> out;
  for (const auto& cfg : grid) {
    PairSource src(gen, rows, pairs_per_epoch);
    auto dec = train_decoder(src, vx, vy, cfg);
    out.push_back({cfg, dec.val_accuracy, dec.trace.epochs_run});
    if (best && (out.size() == 1 || dec.val_accuracy > best->val_accuracy)) *best = std::move(dec);
  }
  return out;
}

std::vector<TrialDecision> evaluate_on_trials(const nn::Mlp& net, const std::vector<stimsel::TrialSpec>& trials,
                                              const PooledSet& pooled) {
  std::vector<TrialDecision> out;
  if (trials.empty()) return out;
  if (net.head() != nn::Head::Sigmoid) throw Error("evaluate_on_trials: decoder must have a sigmoid head");
  const auto d = pooled.rows.cols();
  if (net.inputs() != 2 * d) throw Error("evaluate_on_trials: decoder input width does not match the embeddings");
  Matrix x(static_cast<Eigen::Index>(trials.size()), 2 * d);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    auto a = pooled.row_of(trials[i].stim_1);
    auto b = pooled.row_of(trials[i].stim_2);
    if (!a) throw Error("evaluate_on_trials: trial " + std::to_string(trials[i].trial_id) + ": no embedding for '" + trials[i].stim_1 + "'");
    if (!b) throw Error("evaluate_on_trials: trial " + std::to_string(trials[i].trial_id) + ": no embedding for '" + trials[i].stim_2 + "'");
    x.row(static_cast<Eigen::Index>(i)).head(d) = pooled.rows.row(static_cast<Eigen::Index>(*a));
    x.row(static_cast<Eigen::Index>(i)).tail(d) = pooled.rows.row(static_cast<Eigen::Index>(*b));
  }
  Matrix p = net.predict_proba(x);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    TrialDecision t;
    t.trial_id = trials[i].trial_id;
    t.stim_1 = trials[i].stim_1;
    t.stim_2 = trials[i].stim_2;
    t.p_same = p(static_cast<Eigen::Index>(i), 0);
    t.same = t.p_same >= 0.5;
    out.push_back(std::move(t));
  }
  return out;
}

long long ConfusionMatrix::misidentifications(std::size_t i) const {
  long long s = 0;
  for (std::size_t j = 0; j < counts[i].size(); ++j)
    if (j != i) s += counts[i][j];
  return s;
}

long long ConfusionMatrix::off_diagonal_total() const {
  long long s = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) s += misidentifications(i);
  return s;
}

ConfusionMatrix bootstrap_confusion(const PooledSet& pooled, const Manifest& manifest, const BootstrapConfig& config) {
  if (config.n_trials == 0) throw Error("bootstrap_confusion: n_trials must be positive");
  if (config.train_per_speaker < 2 || config.test_per_speaker < 1)
    throw Error("bootstrap_confusion: need at least two training and one test utterance per speaker");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (const auto& u : manifest) {
    auto row = pooled.row_of(u.utterance_id);
    if (!row) throw Error("bootstrap_confusion: no pooled vector for utterance '" + u.utterance_id + "'");
    by_speaker[u.speaker_id].push_back(*row);
  }
  if (by_speaker.size() < 2) throw Error("bootstrap_confusion: need at least two speakers");
  const std::size_t need = config.train_per_speaker + config.test_per_speaker;
  for (const auto& [spk, rows] : by_speaker)
    if (rows.size() < need)
      throw Error("bootstrap_confusion: speaker '" + spk + "' has " + std::to_string(rows.size()) +
                  " utterances, needs " + std::to_string(need));
  std::vector<std::string> speakers;
  for (const auto& kv : by_speaker) speakers.push_back(kv.first);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < speakers.size(); ++i) index[speakers[i]] = i;
  const std::size_t c = speakers.size();

  probe::ProbeConfig pcfg = config.probe;
  if (pcfg.learning_rate_grid.size() > 1) pcfg.learning_rate_grid.resize(1);

  std::vector<std::vector<long long>> total(c, std::vector<long long>(c, 0));
  std::exception_ptr error;
  const auto n_trials = static_cast<std::ptrdiff_t>(config.n_trials);
#pragma omp parallel
  {
    std::vector<std::vector<long long>> local(c, std::vector<long long>(c, 0));
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n_trials; ++t) {
      try {
        auto rng = make_rng(config.seed, {static_cast<std::uint64_t>(t), 0xb0u});
        std::vector<std::size_t> train_rows, test_rows;
        probe::LabeledSet train, test;
        for (const auto& spk : speakers) {
          auto rows = by_speaker.at(spk);
          shuffle_in_place(rows, rng);
          for (std::size_t k = 0; k < need; ++k) {
            (k < config.train_per_speaker ? train_rows : test_rows).push_back(rows[k]);
            (k < config.train_per_speaker ? train.labels : test.labels).push_back(spk);
          }
        }
        auto gather = [&](const std::vector<std::size_t>& rows) {
          Matrix m(static_cast<Eigen::Index>(rows.size()), pooled.rows.cols());
          for (std::size_t i = 0; i < rows.size(); ++i)
            m.row(static_cast<Eigen::Index>(i)) = pooled.rows.row(static_cast<Eigen::Index>(rows[i]));
          return m;
        };
        Matrix xtr = gather(train_rows);
        auto st = Standardizer::fit(xtr);
        train.x = st.apply_rows(xtr);
        test.x = st.apply_rows(gather(test_rows));
        auto trained = probe::train_probe(train, train, pcfg, rng());
        auto pred = trained.predict(test.x);
        for (std::size_t i = 0; i < pred.size(); ++i) ++local[index.at(test.labels[i])][index.at(pred[i])];
      } catch (...) {
#pragma omp critical(bootstrap_error)
        if (!error) error = std::current_exception();
      }
    }
#pragma omp critical(bootstrap_merge)
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) total[i][j] += local[i][j];
  }
  if (error) std::rethrow_exception(error);

  ConfusionMatrix raw{speakers, total};
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ma = raw.misidentifications(a), mb = raw.misidentifications(b);
    if (ma != mb) return ma < mb;
    return speakers[a] < speakers[b];
  });
  ConfusionMatrix out;
  out.counts.assign(c, std::vector<long long>(c, 0));
  for (std::size_t i = 0; i < c; ++i) {
    out.speakers.push_back(speakers[order[i]]);
    for (std::size_t j = 0; j < c; ++j) out.counts[i][j] = total[order[i]][order[j]];
  }
  return out;
}

namespace {

// A constant variable (e.g. no misidentifications at all) gives an undefined
// correlation; report NaN rather than failing the whole analysis.
behavior::Correlation guarded_pearson(const std::vector<double>& x, const std::vector<double>& y,
                                      const std::string& what) {
  auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (x.size() >= 3 && (constant(x) || constant(y))) {
    warn("confusion_vs_distance: " + what + " is undefined (constant input)");
    return {std::nan(""), std::nan(""), x.size()};
  }
  return behavior::pearson(x, y);
}

}  // namespace

std::vector<CorrelationRow> confusion_vs_distance(const ConfusionMatrix& confusion,
                                                  const std::vector<distances::DistanceMatrix>& speaker_distances,
                                                  const std::map<std::string, double>& mean_durations) {
  const auto& spk = confusion.speakers;
  const std::set<std::string> ids(spk.begin(), spk.end());
  for (const auto& d : speaker_distances)
    if (std::set<std::string>(d.ids.begin(), d.ids.end()) != ids)
      throw Error(std::string("confusion_vs_distance: speaker ids of the ") + distances::to_string(d.metric) +
                  " matrix differ from the confusion matrix");
  for (const auto& s : spk)
    if (!mean_durations.count(s)) throw Error("confusion_vs_distance: no duration for speaker '" + s + "'");

  std::vector<std::string> names{"misidentifications", "mean_duration"};
  std::vector<std::vector<double>> vars(2);
  for (std::size_t i = 0; i < spk.size(); ++i) {
    vars[0].push_back(static_cast<double>(confusion.misidentifications(i)));
    vars[1].push_back(mean_durations.at(spk[i]));
  }
  std::vector<CorrelationRow> rows;
  for (const auto& d : speaker_distances) {
    std::map<std::string, Eigen::Index> pos;
    for (std::size_t k = 0; k < d.ids.size(); ++k) pos[d.ids[k]] = static_cast<Eigen::Index>(k);
    std::vector<double> v;
    for (const auto& s : spk) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& o : spk) {
        if (o == s) continue;
        const double x = d.values(pos[s], pos[o]);
        if (std::isnan(x)) continue;
        sum += x;
        ++n;
      }
      v.push_back(n ? sum / static_cast<double>(n) : std::nan(""));
    }
    names.push_back(distances::to_string(d.metric));
    vars.push_back(std::move(v));
    std::vector<double> conf, dist;
    for (std::size_t i = 0; i < spk.size(); ++i)
      for (std::size_t j = i + 1; j < spk.size(); ++j) {
        const double x = d.values(pos[spk[i]], pos[spk[j]]);
        if (std::isnan(x)) continue;
        conf.push_back(static_cast<double>(confusion.counts[i][j] + confusion.counts[j][i]));
        dist.push_back(x);
      }
    CorrelationRow r{"pair", "confusions", distances::to_string(d.metric),
                    guarded_pearson(conf, dist, std::string("confusions vs ") + distances::to_string(d.metric))};
    rows.push_back(r);
  }
  std::vector<CorrelationRow> out;
  for (std::size_t a = 0; a < vars.size(); ++a)
    for (std::size_t b = a + 1; b < vars.size(); ++b)
      out.push_back({"speaker", names[a], names[b], guarded_pearson(vars[a], vars[b], names[a] + " vs " + names[b])});
  out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

}  // namespace voiceprobe::discrim
