// tests/test_distances.cpp

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
#include <cmath>

#include "support.hpp"
#include "voiceprobe/distances.hpp"
#include "voiceprobe/stats.hpp"

using namespace voiceprobe;
namespace dist = voiceprobe::distances;
using dist::Metric;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Rank with ties by counting: rank = #less + (#equal + 1) / 2.
std::vector<double> count_ranks(const Vector& v) {
  std::vector<double> r(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      less += v(j) < v(i);
      equal += v(j) == v(i);
    }
    r[static_cast<std::size_t>(i)] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

}  // namespace

TEST_CASE("euclidean") {
  CHECK(dist::euclidean(vec({0, 0, 0}), vec({1, 2, 2})) == 3.0);
  std::mt19937_64 rng(1);
  Vector x = vptest::random_vector(10, rng), y = vptest::random_vector(10, rng);
  CHECK(dist::euclidean(x, x) == 0.0);
  double s = 0.0;
  for (int i = 0; i < 10; ++i) s += (x(i) - y(i)) * (x(i) - y(i));
  CHECK(std::abs(dist::euclidean(x, y) - std::sqrt(s)) < 1e-12);
  CHECK_THROWS(dist::euclidean(vec({1, 2}), vec({1, 2, 3})));
}

TEST_CASE("cosine distance") {
  CHECK(dist::cosine_distance(vec({1, 0}), vec({0, 1})) == doctest::Approx(1.0));
  CHECK(std::abs(dist::cosine_distance(vec({1, 2, 3}), vec({3, 6, 9}))) < 1e-15);
  CHECK(dist::cosine_distance(vec({1, 0}), vec({-1, 0})) == doctest::Approx(2.0));
  CHECK_THROWS(dist::cosine_distance(vec({0, 0}), vec({1, 0})));
  std::mt19937_64 rng(2);
  Vector x = vptest::random_vector(6, rng), y = vptest::random_vector(6, rng);
  CHECK(std::abs(dist::cosine_distance(x, y) - dist::cosine_distance(4.0 * x, 0.5 * y)) < 1e-12);
}

TEST_CASE("hausdorff") {
  Matrix a(1, 2), b(1, 2);
  a << 0, 0;
  b << 3, 4;
  CHECK(dist::hausdorff(a, b) == 5.0);
  CHECK(dist::hausdorff(a, a) == 0.0);
  Matrix two(2, 2);
  two << 0, 0, 10, 0;
  CHECK(dist::hausdorff(two, a) == 10.0);
  CHECK(dist::hausdorff(a, two) == 10.0);
  std::mt19937_64 rng(3);
  Vector x = vptest::random_vector(5, rng), y = vptest::random_vector(5, rng);
  CHECK(dist::hausdorff(x.transpose(), y.transpose()) == dist::euclidean(x, y));
  CHECK_THROWS(dist::hausdorff(Matrix(2, 3), Matrix(2, 2)));
}

TEST_CASE("spearman") {
  CHECK(dist::spearman_corr(vec({1, 2, 3}), vec({3, 2, 1})) == doctest::Approx(-1.0));
  CHECK(dist::spearman_corr(vec({1, 2, 3}), vec({1, 2, 3})) == doctest::Approx(1.0));
  Vector x = vec({1, 1, 2}), y = vec({1, 2, 3});
  auto rx = count_ranks(x), ry = count_ranks(y);
  const double r = stats::pearson_r(rx, ry);
  CHECK(std::abs(dist::spearman_corr(x, y) - r) < 1e-12);
  CHECK_THROWS(dist::spearman_corr(vec({2, 2, 2}), vec({1, 2, 3})));

  std::mt19937_64 rng(4);
  Vector a = vptest::random_vector(15, rng), b = vptest::random_vector(15, rng);
  Vector ta = a.array().exp();
  CHECK(std::abs(dist::spearman_corr(a, b) - dist::spearman_corr(ta, b)) < 1e-12);
}

TEST_CASE("metric axioms on random triples") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    Vector x = vptest::random_vector(4, rng), y = vptest::random_vector(4, rng), z = vptest::random_vector(4, rng);
    CHECK(dist::euclidean(x, y) == dist::euclidean(y, x));
    CHECK(dist::euclidean(x, z) <= dist::euclidean(x, y) + dist::euclidean(y, z) + 1e-12);
    Matrix a = vptest::random_matrix(3, 2, rng), b = vptest::random_matrix(4, 2, rng), c = vptest::random_matrix(2, 2, rng);
    CHECK(dist::hausdorff(a, b) == dist::hausdorff(b, a));
    CHECK(dist::hausdorff(a, c) <= dist::hausdorff(a, b) + dist::hausdorff(b, c) + 1e-12);
    CHECK(dist::cosine_distance(x, y) >= 0.0);
  }
}

TEST_CASE("pairwise matrix") {
  std::mt19937_64 rng(6);
  const std::vector<std::string> ids{"a", "b", "c"};
  Matrix pooled = vptest::random_matrix(3, 4, rng);
  std::vector<Matrix> frames{vptest::random_matrix(2, 2, rng), vptest::random_matrix(3, 2, rng),
                             vptest::random_matrix(1, 2, rng)};
  auto e = dist::pairwise_matrix(ids, pooled, &frames, Metric::Euclidean);
  CHECK(e.values.diagonal() == Vector::Zero(3));
  CHECK(e.values(0, 2) == e.values(2, 0));
  CHECK(std::abs(e.values(1, 2) - (pooled.row(1) - pooled.row(2)).norm()) < 1e-12);
  auto h = dist::pairwise_matrix(ids, pooled, &frames, Metric::Hausdorff);
  CHECK(h.values(0, 1) == dist::hausdorff(frames[0], frames[1]));
  auto hp = dist::pairwise_matrix(ids, pooled, nullptr, Metric::Hausdorff, dist::Representation::Pooled);
  CHECK(std::abs(hp.values(0, 1) - e.values(0, 1)) < 1e-12);
  auto s = dist::pairwise_matrix(ids, pooled, nullptr, Metric::Spearman);
  CHECK(s.values.diagonal() == Vector::Ones(3));
  CHECK_THROWS(dist::pairwise_matrix(ids, pooled, nullptr, Metric::Hausdorff));

  Matrix same(2, 3);
  same << 1, 2, 3, 1, 2, 3;
  auto z = dist::pairwise_matrix({"x", "y"}, same, nullptr, Metric::Euclidean);
  CHECK(z.values(0, 1) == 0.0);
}

TEST_CASE("pair records and speaker aggregation") {
  auto m = vptest::make_manifest(2, 2);  // spk00: u00,u01; spk01: u00,u01
  std::vector<std::string> ids;
  for (const auto& u : m) ids.push_back(u.utterance_id);
  dist::DistanceMatrix d;
  d.ids = ids;
  d.metric = Metric::Euclidean;
  d.values = Matrix::Constant(4, 4, 4.0);
  d.values.diagonal().setZero();
  d.values(0, 1) = d.values(1, 0) = 1.0;
  d.values(2, 3) = d.values(3, 2) = 3.0;
  auto recs = dist::pair_records({d}, m);
  CHECK(recs.size() == 6);
  std::size_t same = 0;
  for (const auto& r : recs) same += r.same_speaker;
  CHECK(same == 2);
  auto agg = dist::speaker_aggregate(recs, m, Metric::Euclidean);
  CHECK(agg.ids == std::vector<std::string>{"spk00", "spk01"});
  CHECK(agg.values(0, 1) == 4.0);
  CHECK(agg.values(0, 0) == 1.0);
  CHECK(agg.values(1, 1) == 3.0);

  // Random fixture against a group-by-mean oracle.
  auto m3 = vptest::make_manifest(3, 3);
  std::mt19937_64 rng(7);
  std::vector<std::string> ids3;
  for (const auto& u : m3) ids3.push_back(u.utterance_id);
  auto dm = dist::pairwise_matrix(ids3, vptest::random_matrix(9, 3, rng), nullptr, Metric::Cosine);
  auto recs3 = dist::pair_records({dm}, m3);
  auto agg3 = dist::speaker_aggregate(recs3, m3, Metric::Cosine);
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < 3; ++t) {
      double sum = 0.0;
      int n = 0;
      for (int i = 0; i < 9; ++i)
        for (int j = i + 1; j < 9; ++j) {
          const int si = i / 3, sj = j / 3;
          if ((si == s && sj == t) || (si == t && sj == s)) {
            sum += dm.values(i, j);
            ++n;
          }
        }
      CHECK(std::abs(agg3.values(s, t) - sum / n) < 1e-12);
    }

  auto single = vptest::make_manifest(2, 1);
  dist::DistanceMatrix d1;
  d1.ids = {"spk00_u00", "spk01_u00"};
  d1.values = Matrix::Zero(2, 2);
  d1.values(0, 1) = d1.values(1, 0) = 2.5;
  auto agg1 = dist::speaker_aggregate(dist::pair_records({d1}, single), single, Metric::Euclidean);
  CHECK(agg1.values(0, 1) == 2.5);
  CHECK(std::isnan(agg1.values(0, 0)));
}

TEST_CASE("speaker set hausdorff") {
  auto m = vptest::make_manifest(2, 2);
  PooledSet p;
  for (const auto& u : m) p.ids.push_back(u.utterance_id);
  p.rows.resize(4, 1);
  p.rows << 0, 1, 5, 9;
  auto d = dist::speaker_set_hausdorff(m, p);
  CHECK(d.values(0, 1) == 8.0);
  CHECK(d.values(0, 0) == 0.0);
}

TEST_CASE("standardize pairs") {
  std::vector<dist::PairRecord> r(2);
  r[0].metrics[Metric::Euclidean] = 2.0;
  r[1].metrics[Metric::Euclidean] = 4.0;
  dist::standardize_pairs(r, Metric::Euclidean);
  CHECK(r[0].z.at(Metric::Euclidean) == -1.0);
  CHECK(r[1].z.at(Metric::Euclidean) == 1.0);

  std::vector<dist::PairRecord> flat(3);
  for (auto& x : flat) x.metrics[Metric::Cosine] = 0.3;
  CHECK_THROWS(dist::standardize_pairs(flat, Metric::Cosine));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(5.0, 2.0);
  std::vector<dist::PairRecord> big(1000);
  for (auto& x : big) x.metrics[Metric::Spearman] = nd(rng);
  dist::standardize_pairs(big, Metric::Spearman);
  double s = 0.0, s2 = 0.0;
  for (const auto& x : big) s += x.z.at(Metric::Spearman);
  const double mean = s / 1000.0;
  for (const auto& x : big) s2 += (x.z.at(Metric::Spearman) - mean) * (x.z.at(Metric::Spearman) - mean);
  CHECK(std::abs(mean) < 1e-9);
  CHECK(std::abs(std::sqrt(s2 / 1000.0) - 1.0) < 1e-9);
}

TEST_CASE("metric names") {
  for (auto m : dist::kAllMetrics) CHECK(dist::parse_metric(dist::to_string(m)) == m);
  CHECK_THROWS(dist::parse_metric("manhattan"));
  CHECK(dist::is_similarity(Metric::Spearman));
  CHECK(!dist::is_similarity(Metric::Hausdorff));
}
