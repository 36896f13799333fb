// tests/test_stimsel.cpp

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

#include <algorithm>
#include <map>

#include "support.hpp"
#include "voiceprobe/log.hpp"
#include "voiceprobe/stimsel.hpp"

using namespace voiceprobe;
using namespace voiceprobe::stimsel;
using distances::Metric;

namespace {

UtteranceMeta utt(const std::string& id, const std::string& spk, Sex sex, const std::string& sentence,
                  const std::string& background = "") {
  UtteranceMeta m;
  m.utterance_id = id;
  m.speaker_id = spk;
  m.sex = sex;
  m.dataset = "d";
  m.sentence_id = sentence;
  m.duration_s = 3.0;
  m.path = id + ".npy";
  if (!background.empty()) m.conditions["background"] = background;
  return m;
}

PairRecord rec(const std::string& a, const std::string& b, bool same, double v) {
  PairRecord r;
  r.utt_a = a;
  r.utt_b = b;
  r.same_speaker = same;
  r.metrics[Metric::Euclidean] = v;
  r.z[Metric::Euclidean] = v;
  return r;
}

std::set<std::string> keys(const std::vector<PairRecord>& rs) {
  std::set<std::string> out;
  for (const auto& r : rs) out.insert(r.key());
  return out;
}

}  // namespace

TEST_CASE("filter pairs") {
  Manifest m({utt("a1", "A", Sex::M, "s1"), utt("a2", "A", Sex::M, "s2"), utt("a3", "A", Sex::M, "s1"),
              utt("b1", "B", Sex::M, "s1"), utt("b2", "B", Sex::M, "s3"), utt("f1", "F", Sex::F, "s4"),
              utt("an", "A", Sex::M, "s2", "noisy")},
             "m");
  std::vector<PairRecord> in{rec("a1", "a1", true, 0), rec("a1", "a2", true, 1), rec("a1", "a3", true, 1),
                             rec("a1", "b1", false, 1), rec("a1", "b2", false, 1), rec("a1", "f1", false, 1),
                             rec("a1", "an", true, 1)};
  auto out = filter_pairs(in, m);
  CHECK(keys(out) == std::set<std::string>{"a1|a2", "a1|b2"});
  for (const auto& r : out) CHECK(r.same_speaker == (r.key() == "a1|a2"));

  std::vector<PairRecord> missing{rec("a1", "zz", false, 1)};
  CHECK_THROWS(filter_pairs(missing, m));
  Manifest nosent({utt("x", "X", Sex::M, ""), utt("y", "Y", Sex::M, "s")}, "n");
  std::vector<PairRecord> xy{rec("x", "y", false, 1)};
  CHECK_THROWS(filter_pairs(xy, nosent));
}

TEST_CASE("overlap filter") {
  OverlapOptions raw;
  raw.standardized = false;
  // Disjoint: same {1,2}, different {3,4}.
  std::vector<PairRecord> disjoint{rec("a", "b", true, 1), rec("a", "c", true, 2), rec("a", "d", false, 3),
                                   rec("a", "e", false, 4)};
  std::vector<std::string> warnings;
  auto prev = set_warning_sink([&](const std::string& w) { warnings.push_back(w); });
  CHECK(overlap_filter(disjoint, Metric::Euclidean, raw).empty());
  set_warning_sink(prev);
  CHECK(warnings.size() == 1);

  std::vector<PairRecord> identical{rec("a", "b", true, 1), rec("a", "c", true, 2), rec("a", "d", false, 1),
                                    rec("a", "e", false, 2)};
  CHECK(overlap_filter(identical, Metric::Euclidean, raw).size() == 4);

  // same {1,3,5,7}, different {4,6,8,10} -> interval [4,7].
  std::vector<PairRecord> mixed;
  const double sv[] = {1, 3, 5, 7}, dv[] = {4, 6, 8, 10};
  for (int i = 0; i < 4; ++i) {
    mixed.push_back(rec("s", "x" + std::to_string(i), true, sv[i]));
    mixed.push_back(rec("d", "y" + std::to_string(i), false, dv[i]));
  }
  std::set<std::string> expect;
  for (const auto& r : mixed)
    if (r.metrics.at(Metric::Euclidean) >= 4 && r.metrics.at(Metric::Euclidean) <= 7) expect.insert(r.key());
  CHECK(keys(overlap_filter(mixed, Metric::Euclidean, raw)) == expect);

  // Spearman is a similarity: interval [min same, max different].
  std::vector<PairRecord> sp;
  for (int i = 0; i < 4; ++i) {
    auto a = rec("s", "x" + std::to_string(i), true, 0);
    a.metrics = {{Metric::Spearman, 0.5 + 0.1 * i}};
    auto b = rec("d", "y" + std::to_string(i), false, 0);
    b.metrics = {{Metric::Spearman, 0.2 + 0.1 * i}};
    sp.push_back(a);
    sp.push_back(b);
  }
  auto sp_in = overlap_filter(sp, Metric::Spearman, raw);
  CHECK(keys(sp_in) == std::set<std::string>{"s|x0", "d|y3"});
}

TEST_CASE("intersection") {
  std::vector<PairRecord> a{rec("a", "b", true, 1), rec("a", "c", false, 1)};
  std::vector<PairRecord> b{rec("c", "a", false, 1)};
  CHECK(intersect_common({a}).records.size() == 2);
  auto both = intersect_common({a, b});
  REQUIRE(both.records.size() == 1);
  CHECK(both.different == 1);
  std::vector<PairRecord> none{rec("x", "y", true, 1)};
  CHECK(intersect_common({a, none}).records.empty());
}

TEST_CASE("score") {
  PairRecord r;
  r.z = {{Metric::Euclidean, 0}, {Metric::Cosine, 0}, {Metric::Hausdorff, 0}, {Metric::Spearman, 1}};
  CHECK(score(r) == 0.0);
  r.z = {{Metric::Euclidean, 1}, {Metric::Cosine, 1}, {Metric::Hausdorff, 1}, {Metric::Spearman, -1}};
  CHECK(score(r) == 1.25);
  r.z = {{Metric::Euclidean, 0.3}, {Metric::Cosine, -1.1}, {Metric::Hausdorff, 2.0}, {Metric::Spearman, 0.4}};
  CHECK(std::abs(score(r) - (0.3 - 1.1 + 2.0 + 0.6) / 4.0) < 1e-12);
  r.metrics = {{Metric::Euclidean, 2}, {Metric::Cosine, 0.5}, {Metric::Hausdorff, 3}, {Metric::Spearman, 0.5}};
  CHECK(score(r, false) == doctest::Approx(6.0 / 4.0));
  r.z.erase(Metric::Cosine);
  CHECK_THROWS(score(r));
}

TEST_CASE("select extremes") {
  auto scored = [](const std::string& a, const std::string& b, bool same, double s) {
    PairRecord r;
    r.utt_a = a;
    r.utt_b = b;
    r.same_speaker = same;
    r.score = s;
    return r;
  };
  std::vector<PairRecord> v{scored("a", "b", true, 0.9), scored("a", "c", true, 0.7), scored("d", "e", false, 0.1),
                            scored("d", "f", false, 0.3)};
  auto p = select_extremes(v, 1);
  CHECK(p.same[0].key() == "a|b");
  CHECK(p.different[0].key() == "d|e");
  auto ex = select_extremes(v, 1, {"a|b"});
  CHECK(ex.same[0].key() == "a|c");
  std::vector<PairRecord> ties{scored("m", "n", true, 0.5), scored("b", "c", true, 0.5), scored("x", "y", false, 0.1)};
  CHECK(select_extremes(ties, 1).same[0].key() == "b|c");
  CHECK_THROWS(select_extremes(v, 3));
}

TEST_CASE("noise order assignment") {
  Picks picks;
  for (int i = 0; i < 4; ++i) {
    PairRecord s;
    s.utt_a = "s" + std::to_string(i);
    s.utt_b = "t" + std::to_string(i);
    s.same_speaker = true;
    s.score = i;
    picks.same.push_back(s);
    auto d = s;
    d.utt_a = "d" + std::to_string(i);
    d.same_speaker = false;
    picks.different.push_back(d);
  }
  auto trials = assign_noise_order(picks, 3);
  CHECK(trials.size() == 8);
  std::map<std::pair<Truth, NoiseOrder>, int> cells;
  for (const auto& t : trials) cells[{t.truth, t.noise_order}]++;
  for (const auto& [k, n] : cells) CHECK(n == 2);
  CHECK(cells.size() == 4);
  auto again = assign_noise_order(picks, 3);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    CHECK(again[i].stim_1 == trials[i].stim_1);
    CHECK(again[i].noise_order == trials[i].noise_order);
  }
  auto other = assign_noise_order(picks, 4);
  std::map<std::pair<Truth, NoiseOrder>, int> cells2;
  for (const auto& t : other) cells2[{t.truth, t.noise_order}]++;
  CHECK(cells2 == cells);
  for (std::size_t i = 0; i < trials.size(); ++i) CHECK(trials[i].trial_id == static_cast<int>(i) + 1);
  picks.same.pop_back();
  CHECK_THROWS(assign_noise_order(picks, 3));
}

TEST_CASE("trial list parsing") {
  auto t = parse_csv("trial_id,stim_1,stim_2,truth,noise_order\n1,a,b,Same,C-N\n2,c,d,different,N-C\n", "t");
  auto trials = parse_trials(t);
  REQUIRE(trials.size() == 2);
  CHECK(trials[1].truth == Truth::Different);
  auto dup = parse_csv("trial_id,stim_1,stim_2,truth,noise_order\n1,a,b,Same,C-N\n1,c,d,Same,N-C\n", "t");
  CHECK_THROWS_AS(parse_trials(dup), DataError);
  auto bad = parse_csv("trial_id,stim_1,stim_2,truth,noise_order\n1,a,b,Maybe,C-N\n", "t");
  CHECK_THROWS_AS(parse_trials(bad), DataError);
  CHECK(pair_key("b", "a") == "a|b");
}
