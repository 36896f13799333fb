// src/similarity.cpp

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

#include "voiceprobe/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "voiceprobe/kernels.hpp"
#include "voiceprobe/stats.hpp"

namespace voiceprobe::similarity {

namespace {

// Relative floor under which a self-similarity counts as zero.
constexpr double kDegenerateRel = 1e-24;

Matrix center_kernel(const Matrix& k) {
  Vector row_mean = k.rowwise().mean();
  Vector col_mean = k.colwise().mean().transpose();
  const double grand = k.mean();
  Matrix c = k;
  c.colwise() -= row_mean;
  c.rowwise() -= col_mean.transpose();
  c.array() += grand;
  return c;
}

void check_pair(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw Error("cka: representations have different sample counts");
  if (x.rows() < 2) throw Error("cka: need at least two samples");
}

double finish(double xy, double xx, double yy) {
  return std::clamp(xy / std::sqrt(xx * yy), 0.0, 1.0);
}

}  // namespace

Matrix linear_kernel(const Matrix& x) {
  if (x.rows() < 2) throw Error("linear_kernel: need at least two samples");
  return kernels::omp::gram(x);
}

double hsic0(const Matrix& k, const Matrix& l) {
  const auto n = k.rows();
  if (k.cols() != n || l.rows() != n || l.cols() != n) throw Error("hsic0: kernel size mismatch");
  if (n < 2) throw Error("hsic0: need at least two samples");
  // tr(K H L H) = <H K H, L>_F for symmetric L.
  const double tr = center_kernel(k).cwiseProduct(l).sum();
  const double d = static_cast<double>(n - 1);
  return tr / (d * d);
}

double cka_dense(const Matrix& x, const Matrix& y) {
  check_pair(x, y);
  Matrix k = linear_kernel(x), l = linear_kernel(y);
  const double kk = hsic0(k, k), ll = hsic0(l, l);
  if (kk <= kDegenerateRel * k.squaredNorm() || ll <= kDegenerateRel * l.squaredNorm() || kk <= 0.0 || ll <= 0.0)
    throw Error("cka: degenerate representation");
  return finish(hsic0(k, l), kk, ll);
}

double cka_tiled(const Matrix& x, const Matrix& y, Eigen::Index tile) {
  check_pair(x, y);
  Matrix xc = x.rowwise() - x.colwise().mean();
  Matrix yc = y.rowwise() - y.colwise().mean();
  const double kk = kernels::omp::centered_kernel_inner(xc, xc, tile);
  const double ll = kernels::omp::centered_kernel_inner(yc, yc, tile);
  const double sx = x.squaredNorm(), sy = y.squaredNorm();
  if (kk <= kDegenerateRel * sx * sx || ll <= kDegenerateRel * sy * sy || kk <= 0.0 || ll <= 0.0)
    throw Error("cka: degenerate representation");
  return finish(kernels::omp::centered_kernel_inner(xc, yc, tile), kk, ll);
}

double cka(const Matrix& x, const Matrix& y, const CkaOptions& options) {
  if (x.rows() > options.tile_threshold) return cka_tiled(x, y, options.tile);
  return cka_dense(x, y);
}

CkaTable cka_table(const std::vector<ModelFeatures>& models, const CkaOptions& options) {
  if (models.empty()) throw Error("cka_table: no models");
  for (const auto& m : models)
    if (m.features.ids != models.front().features.ids)
      throw Error("cka_table: utterance order of model '" + m.tag + "' differs from '" + models.front().tag + "'");
  std::vector<Matrix> standardized;
  for (const auto& m : models)
    standardized.push_back(Standardizer::fit(m.features.rows).apply_rows(m.features.rows));
  const auto n = static_cast<Eigen::Index>(models.size());
  CkaTable t;
  for (const auto& m : models) t.tags.push_back(m.tag);
  t.scores = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = cka(standardized[static_cast<std::size_t>(i)], standardized[static_cast<std::size_t>(j)], options);
      t.scores(i, j) = v;
      t.scores(j, i) = v;
    }
  return t;
}

double knn_preservation(const Matrix& high, const Matrix& low, std::size_t k) {
  if (high.rows() != low.rows()) throw Error("knn_preservation: sample count mismatch");
  const auto n = static_cast<std::size_t>(high.rows());
  if (k < 1 || k >= n) throw Error("knn_preservation: need 1 <= k < n");
  auto a = kernels::omp::knn(high, k);
  auto b = kernels::omp::knn(low, k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> sa(a[i].begin(), a[i].end());
    std::size_t shared = 0;
    for (auto j : b[i]) shared += sa.count(j);
    total += static_cast<double>(shared) / static_cast<double>(k);
  }
  return total / static_cast<double>(n);
}

double cpd(const Matrix& high, const Matrix& low, std::size_t sample_size, std::uint64_t seed) {
  if (high.rows() != low.rows()) throw Error("cpd: sample count mismatch");
  const auto n = static_cast<std::size_t>(high.rows());
  if (n < 3) throw Error("cpd: need at least three points");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n > sample_size) {
    auto rng = make_rng(seed, {0xc9du});
    shuffle_in_place(idx, rng);
    idx.resize(sample_size);
    std::sort(idx.begin(), idx.end());
  }
  std::vector<double> dh, dl;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const auto i = static_cast<Eigen::Index>(idx[a]), j = static_cast<Eigen::Index>(idx[b]);
      dh.push_back((high.row(i) - high.row(j)).norm());
      dl.push_back((low.row(i) - low.row(j)).norm());
    }
  auto rh = stats::average_ranks(dh);
  auto rl = stats::average_ranks(dl);
  return stats::pearson_r(rh, rl);
}

}  // namespace voiceprobe::similarity
