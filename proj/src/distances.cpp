// src/distances.cpp

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

#include "voiceprobe/distances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "voiceprobe/kernels.hpp"
#include "voiceprobe/stats.hpp"

namespace voiceprobe::distances {

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "cosine") return Metric::Cosine;
  if (name == "hausdorff") return Metric::Hausdorff;
  if (name == "spearman") return Metric::Spearman;
  throw Error("unknown metric '" + name + "'");
}

const char* to_string(Metric m) {
  switch (m) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Cosine: return "cosine";
    case Metric::Hausdorff: return "hausdorff";
    case Metric::Spearman: return "spearman";
  }
  return "?";
}

bool is_similarity(Metric m) { return m == Metric::Spearman; }

double euclidean(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw Error("euclidean: length mismatch");
  // Sequential accumulation, matching the Hausdorff kernel term by term.
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x(i) - y(i);
    s += d * d;
  }
  return std::sqrt(s);
}

double cosine_distance(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw Error("cosine_distance: length mismatch");
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw Error("cosine_distance: zero-norm input");
  return std::clamp(1.0 - x.dot(y) / (nx * ny), 0.0, 2.0);
}

double hausdorff(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw Error("hausdorff: empty set");
  if (a.cols() != b.cols()) throw Error("hausdorff: dimension mismatch");
  return std::max(kernels::omp::directed_hausdorff(a, b), kernels::omp::directed_hausdorff(b, a));
}

double spearman_corr(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw Error("spearman_corr: length mismatch");
  if (x.size() < 3) throw Error("spearman_corr: need at least three values");
  std::vector<double> xv(x.data(), x.data() + x.size()), yv(y.data(), y.data() + y.size());
  auto rx = stats::average_ranks(xv);
  auto ry = stats::average_ranks(yv);
  try {
    return stats::pearson_r(rx, ry);
  } catch (const Error&) {
    throw Error("spearman_corr: undefined rank correlation (constant input)");
  }
}

DistanceMatrix pairwise_matrix(const std::vector<std::string>& ids, const Matrix& pooled,
                               const std::vector<Matrix>* frames, Metric metric, Representation representation) {
  const std::size_t n = ids.size();
  if (n < 2) throw Error("pairwise_matrix: need at least two entities");
  if (static_cast<std::size_t>(pooled.rows()) != n) throw Error("pairwise_matrix: row count does not match ids");
  const bool use_frames = metric == Metric::Hausdorff && representation == Representation::Frames;
  if (use_frames && (!frames || frames->size() != n))
    throw Error("pairwise_matrix: hausdorff over frames needs one frame matrix per entity");

  auto value = [&](std::size_t i, std::size_t j) -> double {
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
    try {
      switch (metric) {
        case Metric::Euclidean: return euclidean(pooled.row(a).transpose(), pooled.row(b).transpose());
        case Metric::Cosine: return cosine_distance(pooled.row(a).transpose(), pooled.row(b).transpose());
        case Metric::Spearman: return spearman_corr(pooled.row(a).transpose(), pooled.row(b).transpose());
        case Metric::Hausdorff:
          if (use_frames) return hausdorff((*frames)[i], (*frames)[j]);
          return hausdorff(pooled.row(a), pooled.row(b));
      }
    } catch (const Error& e) {
      throw Error("pair (" + ids[i] + ", " + ids[j] + "): " + e.what());
    }
    return 0.0;
  };
  DistanceMatrix out;
  out.ids = ids;
  out.metric = metric;
  out.values = kernels::omp::pairwise(n, value, is_similarity(metric) ? 1.0 : 0.0);
  return out;
}

DistanceMatrix speaker_set_hausdorff(const Manifest& manifest, const PooledSet& pooled) {
  auto speakers = manifest.speakers();
  std::map<std::string, std::vector<std::string>> utts;
  for (const auto& u : manifest) utts[u.speaker_id].push_back(u.utterance_id);
  std::vector<Matrix> sets;
  for (const auto& s : speakers) sets.push_back(pooled.select(utts[s]));
  Matrix dummy(static_cast<Eigen::Index>(speakers.size()), 1);
  dummy.setZero();
  return pairwise_matrix(speakers, dummy, &sets, Metric::Hausdorff, Representation::Frames);
}

std::string PairRecord::key() const { return utt_a < utt_b ? utt_a + "|" + utt_b : utt_b + "|" + utt_a; }

std::vector<PairRecord> pair_records(const std::vector<DistanceMatrix>& matrices, const Manifest& manifest) {
  if (matrices.empty()) throw Error("pair_records: no matrices");
  const auto& ids = matrices.front().ids;
  for (const auto& m : matrices)
    if (m.ids != ids) throw Error("pair_records: matrices cover different id lists");
  std::vector<PairRecord> out;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      PairRecord r;
      r.utt_a = ids[i];
      r.utt_b = ids[j];
      r.same_speaker = manifest.at(ids[i]).speaker_id == manifest.at(ids[j]).speaker_id;
      for (const auto& m : matrices)
        r.metrics[m.metric] = m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out.push_back(std::move(r));
    }
  return out;
}

DistanceMatrix speaker_aggregate(const std::vector<PairRecord>& records, const Manifest& manifest, Metric metric) {
  auto speakers = manifest.speakers();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < speakers.size(); ++i) index[speakers[i]] = i;
  const auto n = static_cast<Eigen::Index>(speakers.size());
  Matrix sum = Matrix::Zero(n, n), count = Matrix::Zero(n, n);
  for (const auto& r : records) {
    if (r.utt_a == r.utt_b) continue;
    auto it = r.metrics.find(metric);
    if (it == r.metrics.end()) throw Error("speaker_aggregate: record " + r.key() + " lacks metric " + to_string(metric));
    const auto* a = manifest.find(r.utt_a);
    const auto* b = manifest.find(r.utt_b);
    if (!a || !b) throw Error("speaker_aggregate: record " + r.key() + " references an utterance missing from the manifest");
    auto s = static_cast<Eigen::Index>(index.at(a->speaker_id));
    auto t = static_cast<Eigen::Index>(index.at(b->speaker_id));
    sum(s, t) += it->second;
    count(s, t) += 1.0;
    if (s != t) {
      sum(t, s) += it->second;
      count(t, s) += 1.0;
    }
  }
  DistanceMatrix out;
  out.ids = speakers;
  out.metric = metric;
  out.values.resize(n, n);
  for (Eigen::Index s = 0; s < n; ++s)
    for (Eigen::Index t = 0; t < n; ++t)
      out.values(s, t) = count(s, t) > 0 ? sum(s, t) / count(s, t) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

void standardize_pairs(std::vector<PairRecord>& records, Metric metric) {
  if (records.size() < 2) throw Error("standardize_pairs: need at least two records");
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) {
    auto it = r.metrics.find(metric);
    if (it == r.metrics.end()) throw Error("standardize_pairs: record " + r.key() + " lacks metric " + to_string(metric));
    v.push_back(it->second);
  }
  const double m = stats::mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi || !(sd > 0.0)) throw Error(std::string("standardize_pairs: zero variance for metric ") + to_string(metric));
  for (std::size_t i = 0; i < records.size(); ++i) records[i].z[metric] = (v[i] - m) / sd;
}

}  // namespace voiceprobe::distances
