// include/voiceprobe/similarity.hpp

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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voiceprobe/common.hpp"
#include "voiceprobe/corpus.hpp"

namespace voiceprobe::similarity {

/// K = X X^T over the rows of X (n >= 2).
Matrix linear_kernel(const Matrix& x);

/// tr(K H L H) / (n - 1)^2 with H = I - 11^T / n. K and L must be n x n.
double hsic0(const Matrix& k, const Matrix& l);

struct CkaOptions {
  /// Above this sample count the kernels are never materialised.
  Eigen::Index tile_threshold = 4096;
  Eigen::Index tile = 512;
};

/// Linear CKA between two representations of the same ordered samples.
/// Throws Error("degenerate representation") when either side has no
/// variance after centring. Result clamped to [0, 1].
double cka(const Matrix& x, const Matrix& y, const CkaOptions& options = {});

/// Materialises both n x n kernels and centres them.
double cka_dense(const Matrix& x, const Matrix& y);
/// Accumulates tr(K H L H) tile by tile from column-centred features.
double cka_tiled(const Matrix& x, const Matrix& y, Eigen::Index tile);

struct ModelFeatures {
  std::string tag;
  PooledSet features;
};

struct CkaTable {
  std::vector<std::string> tags;
  Matrix scores;  // symmetric, unit diagonal
};

/// Standardises each model's features, then fills the symmetric table. All
/// models must list the same utterances in the same order.
CkaTable cka_table(const std::vector<ModelFeatures>& models, const CkaOptions& options = {});

/// Mean fraction of each point's k nearest neighbours (euclidean, self
/// excluded) in `high` that are also among its k nearest in `low`.
double knn_preservation(const Matrix& high, const Matrix& low, std::size_t k);

/// Spearman correlation between pairwise euclidean distances in both spaces,
/// over a seeded sample of `sample_size` points without replacement (all
/// points when n <= sample_size).
double cpd(const Matrix& high, const Matrix& low, std::size_t sample_size = 1000, std::uint64_t seed = 0);

}  // namespace voiceprobe::similarity
