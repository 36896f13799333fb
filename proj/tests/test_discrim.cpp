// tests/test_discrim.cpp

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

#include <doctest.h>

#include <cmath>
#include <map>

#include "support.hpp"
#include "voiceprobe/discrim.hpp"
#include "voiceprobe/log.hpp"

using namespace voiceprobe;
using namespace voiceprobe::discrim;

namespace {

std::map<std::string, const UtteranceMeta*> by_id(const Manifest& m) {
  std::map<std::string, const UtteranceMeta*> out;
  for (const auto& u : m) out[u.utterance_id] = &u;
  return out;
}

}  // namespace

TEST_CASE("pair generator constraints") {
  auto f = vptest::cluster_fixture(8, 4, 6, 3.0, 0.5, 11);
  auto meta = by_id(f.manifest);
  auto pairs = generate_pairs(f.manifest, f.pooled, 2000, 5);
  REQUIRE(pairs.size() == 2000);
  std::size_t same = 0, swapped = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const auto* a = meta.at(p.utt_a);
    const auto* b = meta.at(p.utt_b);
    CHECK(p.input.size() == 12);
    CHECK(p.label == (i % 2 == 0 ? 1 : 0));
    CHECK(a->sex == b->sex);
    if (p.label == 1) {
      ++same;
      CHECK(a->speaker_id == b->speaker_id);
      CHECK(a->sentence_id != b->sentence_id);
    } else {
      CHECK(a->speaker_id != b->speaker_id);
    }
    const auto ra = *f.pooled.row_of(p.utt_a);
    CHECK(p.input.head(6) == f.pooled.rows.row(static_cast<Eigen::Index>(ra)).transpose());
    if (p.utt_a > p.utt_b) ++swapped;
  }
  CHECK(same == 1000);
  CHECK(swapped > 800);
  CHECK(swapped < 1200);

  auto again = generate_pairs(f.manifest, f.pooled, 2000, 5);
  auto other_epoch = generate_pairs(f.manifest, f.pooled, 2000, 5, 1);
  std::size_t differs = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(again[i].utt_a == pairs[i].utt_a);
    CHECK(again[i].utt_b == pairs[i].utt_b);
    differs += other_epoch[i].utt_a != pairs[i].utt_a || other_epoch[i].utt_b != pairs[i].utt_b;
  }
  CHECK(differs > 1000);
  CHECK_THROWS(generate_pairs(f.manifest, f.pooled, 7, 5));
}

TEST_CASE("pair generator skips unusable speakers") {
  // One speaker of each sex only: no same-sex alternative for anybody.
  auto f = vptest::cluster_fixture(2, 3, 4, 1.0, 0.1, 3);
  CHECK_THROWS(PairGenerator(f.manifest, f.pooled, 1));
  auto g = vptest::cluster_fixture(5, 3, 4, 1.0, 0.1, 3);
  PairGenerator gen(g.manifest, g.pooled, 1);
  // Speakers 0,2,4 are M; 1,3 are F: all usable.
  CHECK(gen.anchor_speakers().size() == 5);
}

TEST_CASE("pair source matches materialised epoch") {
  auto f = vptest::cluster_fixture(6, 4, 5, 2.0, 0.3, 21);
  PairGenerator gen(f.manifest, f.pooled, 9);
  PairSource src(gen, f.pooled.rows, 64);
  src.begin_epoch(3);
  Matrix x;
  std::vector<int> labels;
  src.fill(10, 20, x, labels);
  Matrix ref;
  std::vector<int> ref_labels;
  materialize(gen, f.pooled.rows, 3, 64, ref, ref_labels);
  CHECK(x == ref.middleRows(10, 20));
  CHECK(labels == std::vector<int>(ref_labels.begin() + 10, ref_labels.begin() + 30));
}

TEST_CASE("decoder grid shape") {
  auto grid = decoder_grid(4);
  CHECK(grid.size() == 24);
  std::set<std::string> layers;
  std::set<double> lrs;
  std::set<std::size_t> batches;
  for (const auto& c : grid) {
    layers.insert(c.layers_label());
    lrs.insert(c.learning_rate);
    batches.insert(c.batch_size);
  }
  CHECK(layers.size() == 4);
  CHECK(lrs.size() == 2);
  CHECK(batches.size() == 3);
  CHECK(DecoderConfig{{4096, 256}}.layers_label() == "4096-256");
}

TEST_CASE("decoder learns separable speakers and evaluates trials") {
  auto f = vptest::cluster_fixture(8, 6, 6, 4.0, 0.3, 31);
  auto st = Standardizer::fit(f.pooled.rows);
  PooledSet pooled{f.pooled.ids, st.apply_rows(f.pooled.rows)};
  PairGenerator gen(f.manifest, pooled, 2);
  PairSource train(gen, pooled.rows, 2000);
  Matrix vx;
  std::vector<int> vy;
  materialize(gen, pooled.rows, kValidationEpoch, 400, vx, vy);
  DecoderConfig cfg;
  cfg.layer_sizes = {32};
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 64;
  cfg.seed = 1;
  auto dec = train_decoder(train, vx, vy, cfg);
  CHECK(dec.val_accuracy > 0.9);

  std::vector<stimsel::TrialSpec> trials;
  CHECK(evaluate_on_trials(dec.net, trials, pooled).empty());
  trials.push_back({1, "spk00_u00", "spk00_u01", stimsel::Truth::Same});
  trials.push_back({2, "spk00_u00", "spk02_u01", stimsel::Truth::Different});
  auto out = evaluate_on_trials(dec.net, trials, pooled);
  REQUIRE(out.size() == 2);
  for (const auto& d : out) {
    CHECK(d.p_same >= 0.0);
    CHECK(d.p_same <= 1.0);
    CHECK(d.same == (d.p_same >= 0.5));
  }
  CHECK(out[0].same);
  CHECK(!out[1].same);

  std::vector<stimsel::TrialSpec> twins, swapped;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& a = pooled.ids[i];
    const auto& b = pooled.ids[(i * 7 + 3) % pooled.ids.size()];
    twins.push_back({static_cast<int>(i), a, a, stimsel::Truth::Same});
    swapped.push_back({static_cast<int>(i), a, b, stimsel::Truth::Same});
    swapped.push_back({static_cast<int>(i), b, a, stimsel::Truth::Same});
  }
  for (const auto& d : evaluate_on_trials(dec.net, twins, pooled)) CHECK(d.p_same > 0.5);
  auto sw = evaluate_on_trials(dec.net, swapped, pooled);
  for (std::size_t i = 0; i < sw.size(); i += 2) CHECK(std::abs(sw[i].p_same - sw[i + 1].p_same) <= 0.1);
  trials.push_back({3, "spk00_u00", "nobody", stimsel::Truth::Same});
  CHECK_THROWS(evaluate_on_trials(dec.net, trials, pooled));

  std::vector<int> one_class(vy.size(), 1);
  CHECK_THROWS(train_decoder(train, vx, one_class, cfg));
}

TEST_CASE("bootstrap confusion") {
  auto f = vptest::cluster_fixture(4, 10, 5, 5.0, 0.2, 41);
  BootstrapConfig cfg;
  cfg.n_trials = 1;
  cfg.seed = 3;
  cfg.probe.hidden_layer_sizes = {16};
  cfg.probe.max_epochs = 40;
  cfg.probe.patience = 5;
  auto cm = bootstrap_confusion(f.pooled, f.manifest, cfg);
  long long total = 0;
  for (const auto& row : cm.counts)
    for (long long c : row) total += c;
  CHECK(total == 4 * 3);
  for (std::size_t i = 1; i < cm.speakers.size(); ++i)
    CHECK(cm.misidentifications(i - 1) <= cm.misidentifications(i));
  cfg.train_per_speaker = 9;
  CHECK_THROWS(bootstrap_confusion(f.pooled, f.manifest, cfg));
}

TEST_CASE("confusion against distance") {
  ConfusionMatrix cm;
  cm.speakers = {"a", "b", "c", "d"};
  cm.counts = {{9, 0, 1, 0}, {1, 8, 1, 0}, {1, 2, 6, 1}, {2, 2, 2, 4}};
  CHECK(cm.misidentifications(0) == 1);
  CHECK(cm.misidentifications(3) == 6);
  CHECK(cm.off_diagonal_total() == 13);

  distances::DistanceMatrix d;
  d.ids = {"d", "c", "b", "a"};
  d.metric = distances::Metric::Euclidean;
  d.values.setZero(4, 4);
  // Distance decreasing linearly in the symmetric confusion count.
  auto put = [&](int i, int j, double v) {
    auto pi = 3 - i, pj = 3 - j;
    d.values(pi, pj) = d.values(pj, pi) = v;
  };
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      put(i, j, 10.0 - 2.0 * static_cast<double>(cm.counts[i][j] + cm.counts[j][i]));
  std::map<std::string, double> dur{{"a", 1.0}, {"b", 2.0}, {"c", 3.0}, {"d", 4.5}};
  auto rows = confusion_vs_distance(cm, {d}, dur);
  bool saw_pair = false;
  for (const auto& r : rows)
    if (r.level == "pair") {
      saw_pair = true;
      CHECK(r.result.r == doctest::Approx(-1.0));
      CHECK(r.result.n == 6);
    }
  CHECK(saw_pair);
  CHECK(rows.size() == 3 + 1);
  dur.erase("d");
  CHECK_THROWS(confusion_vs_distance(cm, {d}, dur));
}

TEST_CASE("confusion correlations with no errors") {
  ConfusionMatrix cm;
  cm.speakers = {"a", "b", "c"};
  cm.counts = {{5, 0, 0}, {0, 5, 0}, {0, 0, 5}};
  distances::DistanceMatrix d;
  d.ids = {"a", "b", "c"};
  d.values = (Matrix(3, 3) << 0, 1, 2, 1, 0, 4, 2, 4, 0).finished();
  std::vector<std::string> warnings;
  auto prev = set_warning_sink([&](const std::string& w) { warnings.push_back(w); });
  auto rows = confusion_vs_distance(cm, {d}, {{"a", 1.0}, {"b", 2.0}, {"c", 4.0}});
  set_warning_sink(prev);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    const bool involves_confusion = r.x == "misidentifications" || r.x == "confusions";
    CHECK(std::isnan(r.result.r) == involves_confusion);
  }
  CHECK(warnings.size() == 3);
}
