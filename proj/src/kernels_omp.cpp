// src/kernels_omp.cpp

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

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "voiceprobe/kernels.hpp"

namespace voiceprobe::kernels::omp {

namespace {

struct TilePair {
  Eigen::Index row0, rows, col0, cols;
};

std::vector<TilePair> upper_tiles(Eigen::Index n, Eigen::Index tile) {
  std::vector<TilePair> out;
  for (Eigen::Index i = 0; i < n; i += tile)
    for (Eigen::Index j = i; j < n; j += tile)
      out.push_back({i, std::min(tile, n - i), j, std::min(tile, n - j)});
  return out;
}

}  // namespace

Matrix gram(const Matrix& x, Eigen::Index tile) {
  const auto n = x.rows();
  Matrix k(n, n);
  const auto tiles = upper_tiles(n, std::max<Eigen::Index>(tile, 1));
  const auto count = static_cast<std::ptrdiff_t>(tiles.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto& tp = tiles[static_cast<std::size_t>(t)];
    Matrix block = x.middleRows(tp.row0, tp.rows) * x.middleRows(tp.col0, tp.cols).transpose();
    k.block(tp.row0, tp.col0, tp.rows, tp.cols) = block;
    if (tp.row0 != tp.col0) k.block(tp.col0, tp.row0, tp.cols, tp.rows) = block.transpose();
  }
  return k;
}

double centered_kernel_inner(const Matrix& xc, const Matrix& yc, Eigen::Index tile) {
  const auto n = xc.rows();
  const auto tiles = upper_tiles(n, std::max<Eigen::Index>(tile, 1));
  const auto count = static_cast<std::ptrdiff_t>(tiles.size());
  std::vector<double> partial(tiles.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto& tp = tiles[static_cast<std::size_t>(t)];
    Matrix kb = xc.middleRows(tp.row0, tp.rows) * xc.middleRows(tp.col0, tp.cols).transpose();
    Matrix lb = yc.middleRows(tp.row0, tp.rows) * yc.middleRows(tp.col0, tp.cols).transpose();
    double s = kb.cwiseProduct(lb).sum();
    partial[static_cast<std::size_t>(t)] = tp.row0 == tp.col0 ? s : 2.0 * s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

Matrix pairwise(std::size_t n, const PairFunction& f, double diagonal, std::size_t block) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix out(m, m);
  const auto tiles = upper_tiles(m, static_cast<Eigen::Index>(std::max<std::size_t>(block, 1)));
  const auto count = static_cast<std::ptrdiff_t>(tiles.size());
  std::vector<std::exception_ptr> errors(tiles.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto& tp = tiles[static_cast<std::size_t>(t)];
    try {
      for (Eigen::Index i = tp.row0; i < tp.row0 + tp.rows; ++i)
        for (Eigen::Index j = std::max(tp.col0, i); j < tp.col0 + tp.cols; ++j) {
          if (i == j) {
            out(i, i) = diagonal;
            continue;
          }
          double v = f(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
          out(i, j) = v;
          out(j, i) = v;
        }
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k) {
  const auto n = x.rows();
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      d.emplace_back((x.row(i) - x.row(j)).squaredNorm(), static_cast<std::size_t>(j));
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    auto& row = out[static_cast<std::size_t>(i)];
    for (std::size_t r = 0; r < k; ++r) row.push_back(d[r].second);
  }
  return out;
}

double directed_hausdorff(const Matrix& a, const Matrix& b) {
  std::vector<double> best(static_cast<std::size_t>(a.rows()));
  const auto rows = a.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double diff = a(i, c) - b(j, c);
        s += diff * diff;
      }
      m = std::min(m, s);
    }
    best[static_cast<std::size_t>(i)] = m;
  }
  double worst = 0.0;
  for (double v : best) worst = std::max(worst, v);
  return std::sqrt(worst);
}

}  // namespace voiceprobe::kernels::omp
