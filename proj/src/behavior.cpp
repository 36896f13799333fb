// src/behavior.cpp

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

#include "voiceprobe/behavior.hpp"

#include <algorithm>
#include <cmath>

#include "voiceprobe/stats.hpp"

namespace voiceprobe::behavior {

std::vector<TrialResponse> parse_responses(const CsvTable& table) {
  const auto c_subject = table.require("subject_id");
  const auto c_trial = table.require("trial_id");
  const auto c_truth = table.require("truth");
  const auto c_resp = table.require("response");
  const auto c_conf = table.require("confidence");
  const auto c_rt = table.require("rt_s");
  const auto c_order = table.require("noise_order");
  std::vector<TrialResponse> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = table.source + ": row " + std::to_string(i + 1);
    TrialResponse r;
    r.subject_id = row[c_subject];
    if (r.subject_id.empty()) throw DataError(table.source, "row " + std::to_string(i + 1) + ": empty subject_id");
    r.trial_id = static_cast<int>(parse_int(row[c_trial], ctx + " trial_id"));
    r.truth = stimsel::parse_truth(row[c_truth], ctx);
    const auto& resp = row[c_resp];
    if (resp == "same" || resp == "Same") r.response = Response::Same;
    else if (resp == "different" || resp == "Different") r.response = Response::Different;
    else throw DataError(table.source, "row " + std::to_string(i + 1) + ": response must be same or different, got '" + resp + "'");
    const auto conf = parse_int(row[c_conf], ctx + " confidence");
    if (conf < 1 || conf > 7) throw DataError(table.source, "row " + std::to_string(i + 1) + ": confidence must be in 1..7");
    r.confidence = static_cast<int>(conf);
    r.rt_s = parse_double(row[c_rt], ctx + " rt_s");
    if (!(r.rt_s > 0.0) || !std::isfinite(r.rt_s))
      throw DataError(table.source, "row " + std::to_string(i + 1) + ": rt_s must be positive");
    r.noise_order = stimsel::parse_noise_order(row[c_order], ctx);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrialResponse> read_responses(const std::string& path) { return parse_responses(read_csv(path)); }

Rates rates(const std::vector<TrialResponse>& responses) {
  Rates r;
  for (const auto& t : responses) {
    const bool said_diff = t.response == Response::Different;
    if (t.truth == Truth::Different) {
      ++r.n_signal;
      r.hits += said_diff;
    } else {
      ++r.n_noise;
      r.false_alarms += said_diff;
    }
  }
  if (r.n_signal == 0) throw Error("rates: no Different trials");
  if (r.n_noise == 0) throw Error("rates: no Same trials");
  r.hit_rate = static_cast<double>(r.hits) / static_cast<double>(r.n_signal);
  r.fa_rate = static_cast<double>(r.false_alarms) / static_cast<double>(r.n_noise);
  return r;
}

double d_prime(double hit_rate, double fa_rate, std::size_t n_signal, std::size_t n_noise) {
  if (n_signal < 1 || n_noise < 1) throw Error("d_prime: trial counts must be positive");
  if (!(hit_rate >= 0.0 && hit_rate <= 1.0 && fa_rate >= 0.0 && fa_rate <= 1.0))
    throw Error("d_prime: rates must lie in [0, 1]");
  const double ns = static_cast<double>(n_signal), nn = static_cast<double>(n_noise);
  const double h = (hit_rate * ns + 0.5) / (ns + 1.0);
  const double f = (fa_rate * nn + 0.5) / (nn + 1.0);
  return stats::normal_quantile(h) - stats::normal_quantile(f);
}

SubjectSummary summarize(const std::vector<TrialResponse>& one_subject) {
  if (one_subject.empty()) throw Error("summarize: no responses");
  SubjectSummary s;
  s.subject_id = one_subject.front().subject_id;
  s.n = one_subject.size();
  std::size_t correct = 0;
  double rt = 0.0;
  for (const auto& t : one_subject) {
    correct += t.correct();
    rt += t.rt_s;
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(s.n);
  s.mean_rt = rt / static_cast<double>(s.n);
  auto r = rates(one_subject);
  s.hit_rate = r.hit_rate;
  s.fa_rate = r.fa_rate;
  s.d_prime = d_prime(r.hit_rate, r.fa_rate, r.n_signal, r.n_noise);
  return s;
}

std::vector<SubjectSummary> summarize_subjects(const std::vector<TrialResponse>& responses) {
  std::map<std::string, std::vector<TrialResponse>> by_subject;
  for (const auto& t : responses) by_subject[t.subject_id].push_back(t);
  std::vector<SubjectSummary> out(by_subject.size());
  std::vector<const std::vector<TrialResponse>*> groups;
  for (const auto& [id, v] : by_subject) groups.push_back(&v);
  std::vector<std::string> errors(groups.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < groups.size(); ++i) {
    try {
      out[i] = summarize(*groups[i]);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (!errors[i].empty()) throw Error("subject '" + groups[i]->front().subject_id + "': " + errors[i]);
  return out;
}

namespace {

std::vector<std::string> levels_of(const std::string& key) {
  if (key == "truth") return {"Same", "Different"};
  if (key == "noise_order") return {"C-N", "N-C"};
  if (key == "confidence") return {"1", "2", "3", "4", "5", "6", "7"};
  throw Error("breakdown: unknown grouping key '" + key + "' (expected truth, noise_order or confidence)");
}

std::string level_of(const TrialResponse& t, const std::string& key) {
  if (key == "truth") return stimsel::to_string(t.truth);
  if (key == "noise_order") return stimsel::to_string(t.noise_order);
  return std::to_string(t.confidence);
}

}  // namespace

std::vector<Cell> breakdown(const std::vector<TrialResponse>& responses, const std::vector<std::string>& group_by) {
  if (responses.empty()) throw Error("breakdown: no responses");
  std::vector<std::vector<std::string>> levels;
  for (const auto& k : group_by) {
    if (std::count(group_by.begin(), group_by.end(), k) > 1) throw Error("breakdown: duplicate grouping key '" + k + "'");
    levels.push_back(levels_of(k));
  }
  // Enumerate the cartesian product in row-major order.
  std::vector<Cell> cells(1);
  for (std::size_t g = 0; g < group_by.size(); ++g) {
    std::vector<Cell> next;
    for (const auto& c : cells)
      for (const auto& lv : levels[g]) {
        Cell n = c;
        n.key.emplace_back(group_by[g], lv);
        next.push_back(std::move(n));
      }
    cells = std::move(next);
  }
  std::map<std::vector<std::string>, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& t : responses) {
    std::vector<std::string> k;
    for (const auto& key : group_by) k.push_back(level_of(t, key));
    auto& [n, ok] = tally[k];
    ++n;
    ok += t.correct();
  }
  for (auto& c : cells) {
    std::vector<std::string> k;
    for (const auto& kv : c.key) k.push_back(kv.second);
    auto it = tally.find(k);
    if (it == tally.end()) continue;
    c.count = it->second.first;
    c.accuracy = static_cast<double>(it->second.second) / static_cast<double>(it->second.first);
  }
  return cells;
}

std::map<int, double> per_trial_accuracy(const std::vector<TrialResponse>& responses) {
  std::map<int, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& t : responses) {
    auto& [n, ok] = tally[t.trial_id];
    ++n;
    ok += t.correct();
  }
  std::map<int, double> out;
  for (const auto& [id, c] : tally) out[id] = static_cast<double>(c.second) / static_cast<double>(c.first);
  return out;
}

Correlation pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 3) throw Error("pearson: need at least three observations");
  Correlation c;
  c.n = x.size();
  c.r = stats::pearson_r(x, y);
  c.p = stats::correlation_p_value(c.r, c.n);
  return c;
}

Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("spearman: length mismatch");
  if (x.size() < 3) throw Error("spearman: need at least three observations");
  return pearson(stats::average_ranks(x), stats::average_ranks(y));
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error("cohens_d: each group needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = std::sqrt(((na - 1.0) * stats::sample_variance(a) + (nb - 1.0) * stats::sample_variance(b)) /
                                  (na + nb - 2.0));
  if (!(pooled > 0.0)) throw Error("cohens_d: zero pooled standard deviation");
  return (stats::mean(a) - stats::mean(b)) / pooled;
}

}  // namespace voiceprobe::behavior
