// src/stimsel.cpp

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

#include "voiceprobe/stimsel.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_set>

#include "voiceprobe/log.hpp"

namespace voiceprobe::stimsel {

const char* to_string(Truth t) { return t == Truth::Same ? "Same" : "Different"; }
const char* to_string(NoiseOrder o) { return o == NoiseOrder::CleanNoisy ? "C-N" : "N-C"; }

Truth parse_truth(const std::string& s, const std::string& context) {
  if (s == "Same" || s == "same") return Truth::Same;
  if (s == "Different" || s == "different") return Truth::Different;
  throw DataError(context, "truth must be Same or Different, got '" + s + "'");
}

NoiseOrder parse_noise_order(const std::string& s, const std::string& context) {
  if (s == "C-N") return NoiseOrder::CleanNoisy;
  if (s == "N-C") return NoiseOrder::NoisyClean;
  throw DataError(context, "noise_order must be C-N or N-C, got '" + s + "'");
}

std::vector<TrialSpec> parse_trials(const CsvTable& table) {
  const auto c_id = table.require("trial_id");
  const auto c_1 = table.require("stim_1");
  const auto c_2 = table.require("stim_2");
  const auto c_truth = table.require("truth");
  const auto c_order = table.require("noise_order");
  const auto c_score = table.find("score");
  std::vector<TrialSpec> out;
  std::set<int> seen;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = table.source + ": row " + std::to_string(i + 1);
    TrialSpec t;
    t.trial_id = static_cast<int>(parse_int(row[c_id], ctx + " trial_id"));
    if (!seen.insert(t.trial_id).second) throw DataError(table.source, "duplicate trial_id " + row[c_id]);
    t.stim_1 = row[c_1];
    t.stim_2 = row[c_2];
    if (t.stim_1.empty() || t.stim_2.empty()) throw DataError(table.source, "row " + std::to_string(i + 1) + ": empty stimulus id");
    t.truth = parse_truth(row[c_truth], ctx);
    t.noise_order = parse_noise_order(row[c_order], ctx);
    t.score = c_score ? parse_double(row[*c_score], ctx + " score") : std::nan("");
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TrialSpec> read_trials(const std::string& path) { return parse_trials(read_csv(path)); }

std::string pair_key(const std::string& a, const std::string& b) { return a < b ? a + "|" + b : b + "|" + a; }

namespace {

bool is_noisy(const UtteranceMeta& u) {
  auto bg = u.condition("background");
  return bg && *bg == "noisy";
}

const UtteranceMeta& meta_of(const Manifest& manifest, const std::string& id) {
  const auto* u = manifest.find(id);
  if (!u) throw Error("filter_pairs: utterance '" + id + "' is not in the manifest");
  if (u->sentence_id.empty()) throw Error("filter_pairs: utterance '" + id + "' has no sentence_id");
  return *u;
}

double value_of(const PairRecord& r, Metric m, bool standardized) {
  const auto& table = standardized ? r.z : r.metrics;
  auto it = table.find(m);
  if (it == table.end())
    throw Error(std::string("pair ") + r.key() + " lacks " + (standardized ? "standardised " : "") +
                distances::to_string(m));
  return it->second;
}

// Linear-interpolation quantile of a sorted sample.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Lexicographic tie-break key: the pair's ids in sorted order.
std::pair<std::string, std::string> sorted_ids(const PairRecord& r) {
  return r.utt_a < r.utt_b ? std::make_pair(r.utt_a, r.utt_b) : std::make_pair(r.utt_b, r.utt_a);
}

}  // namespace

std::vector<PairRecord> filter_pairs(const std::vector<PairRecord>& records, const Manifest& manifest) {
  std::vector<PairRecord> out;
  for (const auto& r : records) {
    if (r.utt_a == r.utt_b) continue;
    const auto& a = meta_of(manifest, r.utt_a);
    const auto& b = meta_of(manifest, r.utt_b);
    if (a.path == b.path) continue;
    if (is_noisy(a) || is_noisy(b)) continue;
    if (a.sentence_id == b.sentence_id) continue;
    const bool same = a.speaker_id == b.speaker_id;
    if (!same && a.sex != b.sex) continue;
    PairRecord kept = r;
    kept.same_speaker = same;
    out.push_back(std::move(kept));
  }
  return out;
}

std::vector<PairRecord> overlap_filter(const std::vector<PairRecord>& records, Metric metric,
                                       const OverlapOptions& options) {
  std::vector<double> same, diff;
  for (const auto& r : records) (r.same_speaker ? same : diff).push_back(value_of(r, metric, options.standardized));
  if (same.empty() || diff.empty()) throw Error("overlap_filter: both same and different populations must be nonempty");
  if (!(options.quantile_trim >= 0.0 && options.quantile_trim < 0.5)) throw Error("overlap_filter: quantile trim must be in [0, 0.5)");
  std::sort(same.begin(), same.end());
  std::sort(diff.begin(), diff.end());
  const double q = options.quantile_trim;
  double lo, hi;
  if (distances::is_similarity(metric)) {
    lo = quantile(same, q);
    hi = quantile(diff, 1.0 - q);
  } else {
    lo = quantile(diff, q);
    hi = quantile(same, 1.0 - q);
  }
  std::vector<PairRecord> out;
  if (lo <= hi)
    for (const auto& r : records) {
      const double v = value_of(r, metric, options.standardized);
      if (v >= lo && v <= hi) out.push_back(r);
    }
  if (out.empty()) warn(std::string("overlap_filter: no overlap between same and different pairs for ") + distances::to_string(metric));
  return out;
}

CommonPairs intersect_common(const std::vector<std::vector<PairRecord>>& sets) {
  if (sets.empty()) throw Error("intersect_common: need at least one set");
  std::vector<std::unordered_set<std::string>> keys;
  for (std::size_t s = 1; s < sets.size(); ++s) {
    std::unordered_set<std::string> k;
    for (const auto& r : sets[s]) k.insert(r.key());
    keys.push_back(std::move(k));
  }
  CommonPairs out;
  std::unordered_set<std::string> seen;
  for (const auto& r : sets.front()) {
    const auto key = r.key();
    if (!seen.insert(key).second) continue;
    if (std::all_of(keys.begin(), keys.end(), [&](const auto& k) { return k.count(key) > 0; })) {
      out.records.push_back(r);
      ++(r.same_speaker ? out.same : out.different);
    }
  }
  return out;
}

double score(const PairRecord& record, bool standardized) {
  const double e = value_of(record, Metric::Euclidean, standardized);
  const double c = value_of(record, Metric::Cosine, standardized);
  const double h = value_of(record, Metric::Hausdorff, standardized);
  const double s = value_of(record, Metric::Spearman, standardized);
  return (e + c + h + (1.0 - s)) / 4.0;
}

Picks select_extremes(const std::vector<PairRecord>& scored, std::size_t k, const std::set<std::string>& excluded) {
  std::vector<const PairRecord*> same, diff;
  for (const auto& r : scored) {
    if (!r.score) throw Error("select_extremes: pair " + r.key() + " has no score");
    if (excluded.count(r.key())) continue;
    (r.same_speaker ? same : diff).push_back(&r);
  }
  if (same.size() < k || diff.size() < k)
    throw Error("select_extremes: need " + std::to_string(k) + " pairs per condition, have " +
                std::to_string(same.size()) + " same and " + std::to_string(diff.size()) + " different");
  auto tie_less = [](const PairRecord* a, const PairRecord* b) { return sorted_ids(*a) < sorted_ids(*b); };
  std::sort(same.begin(), same.end(), [&](const PairRecord* a, const PairRecord* b) {
    if (*a->score != *b->score) return *a->score > *b->score;
    return tie_less(a, b);
  });
  std::sort(diff.begin(), diff.end(), [&](const PairRecord* a, const PairRecord* b) {
    if (*a->score != *b->score) return *a->score < *b->score;
    return tie_less(a, b);
  });
  Picks p;
  for (std::size_t i = 0; i < k; ++i) {
    p.same.push_back(*same[i]);
    p.different.push_back(*diff[i]);
  }
  return p;
}

namespace {

std::string noisy_variant(const Manifest& manifest, const std::string& clean_id) {
  const auto& c = manifest.at(clean_id);
  for (const auto& u : manifest)
    if (is_noisy(u) && u.speaker_id == c.speaker_id && u.sentence_id == c.sentence_id && u.dataset == c.dataset)
      return u.utterance_id;
  throw Error("no background=noisy variant for utterance '" + clean_id + "'");
}

}  // namespace

std::vector<TrialSpec> assign_noise_order(const Picks& picks, std::uint64_t seed, const Manifest* manifest) {
  if (picks.same.size() % 2 != 0 || picks.different.size() % 2 != 0)
    throw Error("assign_noise_order: each truth condition needs an even number of pairs");
  bool resolve = false;
  if (manifest) {
    auto keys = manifest->condition_keys();
    resolve = std::find(keys.begin(), keys.end(), "background") != keys.end();
  }
  auto rng = make_rng(seed, {0x7a1u});
  std::vector<TrialSpec> trials;
  auto add_condition = [&](const std::vector<PairRecord>& pairs, Truth truth) {
    std::vector<NoiseOrder> orders(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
      orders[i] = i < pairs.size() / 2 ? NoiseOrder::CleanNoisy : NoiseOrder::NoisyClean;
    shuffle_in_place(orders, rng);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      TrialSpec t;
      auto [a, b] = sorted_ids(pairs[i]);
      t.truth = truth;
      t.noise_order = orders[i];
      t.score = pairs[i].score.value_or(std::nan(""));
      t.stim_1 = a;
      t.stim_2 = b;
      if (resolve) {
        if (t.noise_order == NoiseOrder::NoisyClean)
          t.stim_1 = noisy_variant(*manifest, a);
        else
          t.stim_2 = noisy_variant(*manifest, b);
      }
      trials.push_back(std::move(t));
    }
  };
  add_condition(picks.same, Truth::Same);
  add_condition(picks.different, Truth::Different);
  shuffle_in_place(trials, rng);
  for (std::size_t i = 0; i < trials.size(); ++i) trials[i].trial_id = static_cast<int>(i + 1);
  return trials;
}

PipelineReport select_stimuli(const std::vector<PairRecord>& records, const Manifest& manifest,
                              const PipelineConfig& config) {
  PipelineReport report;
  auto retained = filter_pairs(records, manifest);
  report.retained = retained.size();
  for (auto m : distances::kAllMetrics) distances::standardize_pairs(retained, m);
  OverlapOptions overlap = config.overlap;
  overlap.standardized = !config.raw_scores;
  std::vector<std::vector<PairRecord>> per_metric;
  for (auto m : distances::kAllMetrics) {
    per_metric.push_back(overlap_filter(retained, m, overlap));
    report.overlap_counts[m] = per_metric.back().size();
  }
  auto common = intersect_common(per_metric);
  report.common_same = common.same;
  report.common_different = common.different;
  for (auto& r : common.records) r.score = score(r, !config.raw_scores);
  auto picks = select_extremes(common.records, config.k, config.excluded);
  report.trials = assign_noise_order(picks, config.seed, &manifest);
  return report;
}

}  // namespace voiceprobe::stimsel
