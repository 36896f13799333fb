// tests/test_similarity.cpp

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
#include <omp.h>

#include "support.hpp"
#include "voiceprobe/kernels.hpp"
#include "voiceprobe/similarity.hpp"

using namespace voiceprobe;
namespace sim = voiceprobe::similarity;

namespace {

// tr(K H L H) / (n-1)^2 with an explicit centering matrix.
double hsic_explicit(const Matrix& k, const Matrix& l) {
  const auto n = k.rows();
  Matrix h = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  return (k * h * l * h).trace() / static_cast<double>((n - 1) * (n - 1));
}

double cka_explicit(const Matrix& x, const Matrix& y) {
  Matrix k = x * x.transpose(), l = y * y.transpose();
  return hsic_explicit(k, l) / std::sqrt(hsic_explicit(k, k) * hsic_explicit(l, l));
}

Matrix random_orthogonal(Eigen::Index m, std::mt19937_64& rng) {
  Matrix g = vptest::random_matrix(m, m, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(m, m);
}

}  // namespace

TEST_CASE("linear kernel") {
  CHECK(sim::linear_kernel(Matrix::Identity(2, 2)) == Matrix::Identity(2, 2));
  Matrix rep(3, 2);
  rep << 1, 2, 1, 2, 1, 2;
  CHECK(sim::linear_kernel(rep) == Matrix::Constant(3, 3, 5.0));
  std::mt19937_64 rng(1);
  Matrix x = vptest::random_matrix(5, 3, rng);
  Matrix k = sim::linear_kernel(x);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int d = 0; d < 3; ++d) s += x(i, d) * x(j, d);
      CHECK(std::abs(k(i, j) - s) < 1e-10);
    }
  CHECK_THROWS(sim::linear_kernel(Matrix::Ones(1, 3)));
}

TEST_CASE("hsic0") {
  std::mt19937_64 rng(2);
  Matrix l = vptest::random_matrix(4, 4, rng);
  l = l * l.transpose();
  CHECK(std::abs(sim::hsic0(Matrix::Constant(4, 4, 3.0), l)) < 1e-12);

  Matrix k(2, 2);
  k << 1, -1, -1, 1;
  CHECK(sim::hsic0(k, k) == doctest::Approx(4.0).epsilon(1e-12));

  Matrix ga = vptest::random_matrix(6, 6, rng), gb = vptest::random_matrix(6, 6, rng);
  Matrix a = ga * ga.transpose(), b = gb * gb.transpose();
  CHECK(std::abs(sim::hsic0(a, b) - hsic_explicit(a, b)) < 1e-10);
  CHECK(sim::hsic0(a, a) >= -1e-10);
  CHECK_THROWS(sim::hsic0(Matrix::Ones(3, 3), Matrix::Ones(4, 4)));
}

TEST_CASE("cka properties") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix x = vptest::random_matrix(40, 7, rng), y = vptest::random_matrix(40, 5, rng);
    const double c = sim::cka(x, y);
    CHECK(std::abs(c - sim::cka(y, x)) < 1e-10);
    CHECK(std::abs(c - cka_explicit(x, y)) < 1e-9);
    CHECK(std::abs(sim::cka(x, x) - 1.0) < 1e-9);
    CHECK(std::abs(sim::cka(x, -2.5 * x) - 1.0) < 1e-9);
    Matrix q = random_orthogonal(7, rng);
    CHECK(std::abs(sim::cka(x, x * q) - 1.0) < 1e-9);
    CHECK(std::abs(sim::cka(x * 3.0, y) - c) < 1e-9);
  }
  CHECK_THROWS(sim::cka(Matrix::Ones(5, 2), vptest::random_matrix(5, 2, rng)));
}

TEST_CASE("independent features give low cka") {
  std::mt19937_64 rng(4);
  Matrix x = vptest::random_matrix(200, 10, rng), y = vptest::random_matrix(200, 10, rng);
  CHECK(sim::cka(x, y) < 0.2);
}

TEST_CASE("tiled and dense cka agree") {
  std::mt19937_64 rng(5);
  Matrix x = vptest::random_matrix(301, 9, rng), y = vptest::random_matrix(301, 4, rng);
  y.col(0) += x.col(0);
  const double dense = sim::cka_dense(x, y);
  for (Eigen::Index tile : {1, 7, 64, 301, 1000}) CHECK(std::abs(sim::cka_tiled(x, y, tile) - dense) < 1e-10);
  sim::CkaOptions small;
  small.tile_threshold = 100;
  small.tile = 50;
  CHECK(std::abs(sim::cka(x, y, small) - dense) < 1e-10);
}

TEST_CASE("cka table") {
  std::mt19937_64 rng(6);
  auto m = vptest::make_manifest(10, 3);
  PooledSet a, b, c;
  for (const auto& u : m) a.ids.push_back(u.utterance_id);
  b.ids = c.ids = a.ids;
  a.rows = vptest::random_matrix(30, 6, rng);
  b.rows = a.rows;
  c.rows = vptest::random_matrix(30, 4, rng);
  auto t = sim::cka_table({{"A", a}, {"B", b}, {"C", c}});
  REQUIRE(t.scores.rows() == 3);
  CHECK(std::abs(t.scores(0, 1) - 1.0) < 1e-9);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(t.scores(i, i) - 1.0) < 1e-9);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(t.scores(i, j) - t.scores(j, i)) < 1e-9);
  }
  auto perm = sim::cka_table({{"C", c}, {"A", a}, {"B", b}});
  CHECK(std::abs(perm.scores(0, 1) - t.scores(2, 0)) < 1e-12);

  PooledSet d = c;
  std::swap(d.ids[0], d.ids[1]);
  CHECK_THROWS(sim::cka_table({{"A", a}, {"D", d}}));
}

TEST_CASE("knn preservation") {
  std::mt19937_64 rng(7);
  Matrix x = vptest::random_matrix(30, 5, rng);
  CHECK(sim::knn_preservation(x, x, 3) == 1.0);
  CHECK(sim::knn_preservation(x, 2.0 * x, 3) == 1.0);

  // Points on a line at 0,1,3,7 (gaps grow); the low map reverses spacing.
  Matrix high(4, 1), low(4, 1);
  high << 0, 1, 3, 7;
  low << 0, 4, 6, 7;
  // k=1 neighbours: high {1,0,1,2}, low {1,2,3,2} -> matches at points 0 and 3.
  CHECK(sim::knn_preservation(high, low, 1) == doctest::Approx(0.5));
}

TEST_CASE("cpd") {
  std::mt19937_64 rng(8);
  Matrix x = vptest::random_matrix(20, 4, rng);
  CHECK(sim::cpd(x, x) == doctest::Approx(1.0));
  CHECK(sim::cpd(x, 0.3 * x) == doctest::Approx(1.0));

  Matrix h = vptest::random_matrix(5, 3, rng), l = vptest::random_matrix(5, 2, rng);
  std::vector<double> dh, dl;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) {
      dh.push_back((h.row(i) - h.row(j)).norm());
      dl.push_back((l.row(i) - l.row(j)).norm());
    }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      r[i] = 1.0 + static_cast<double>(std::count_if(v.begin(), v.end(), [&](double o) { return o < v[i]; }));
    return r;
  };
  auto rh = ranks(dh), rl = ranks(dl);
  double d2 = 0.0;
  for (std::size_t i = 0; i < rh.size(); ++i) d2 += (rh[i] - rl[i]) * (rh[i] - rl[i]);
  const double n = 10.0;
  CHECK(std::abs(sim::cpd(h, l) - (1.0 - 6.0 * d2 / (n * (n * n - 1.0)))) < 1e-10);
}

TEST_CASE("omp kernels match serial references") {
  std::mt19937_64 rng(9);
  Matrix x = vptest::random_matrix(130, 11, rng), y = vptest::random_matrix(130, 6, rng);
  CHECK((kernels::omp::gram(x, 32) - kernels::serial::gram(x)).cwiseAbs().maxCoeff() < 1e-10);
  Matrix xc = x.rowwise() - x.colwise().mean(), yc = y.rowwise() - y.colwise().mean();
  const double ref = kernels::serial::centered_kernel_inner(xc, yc);
  CHECK(std::abs(kernels::omp::centered_kernel_inner(xc, yc, 17) - ref) < 1e-9 * std::abs(ref));

  auto f = [&x](std::size_t i, std::size_t j) {
    return (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm();
  };
  CHECK(kernels::omp::pairwise(130, f, 0.0, 9) == kernels::serial::pairwise(130, f, 0.0));
  CHECK(kernels::omp::knn(x, 4) == kernels::serial::knn(x, 4));
  Matrix a = vptest::random_matrix(40, 3, rng), b = vptest::random_matrix(25, 3, rng);
  CHECK(kernels::omp::directed_hausdorff(a, b) == kernels::serial::directed_hausdorff(a, b));
}

TEST_CASE("omp kernels are independent of the thread count") {
  std::mt19937_64 rng(10);
  Matrix x = vptest::random_matrix(257, 5, rng), y = vptest::random_matrix(257, 8, rng);
  Matrix xc = x.rowwise() - x.colwise().mean(), yc = y.rowwise() - y.colwise().mean();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = kernels::omp::centered_kernel_inner(xc, yc, 32);
  const double c1 = similarity::cka(x, y, {100, 32});
  omp_set_num_threads(7);
  const double seven = kernels::omp::centered_kernel_inner(xc, yc, 32);
  const double c7 = similarity::cka(x, y, {100, 32});
  omp_set_num_threads(saved);
  CHECK(one == seven);
  CHECK(c1 == c7);
}
