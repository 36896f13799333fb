// include/voiceprobe/kernels.hpp

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

// Hot loops shared by the analysis modules. Every kernel has a plain serial
// reference (namespace serial) kept for testing and benchmarking, and an
// OpenMP version (namespace omp) used by the library. The OpenMP versions
// partition work into fixed blocks whose results are combined in block order,
// so their output does not depend on the number of threads.

#include <cstddef>
#include <functional>
#include <vector>

#include "voiceprobe/common.hpp"

namespace voiceprobe::kernels {

using PairFunction = std::function<double(std::size_t, std::size_t)>;

/// Default tile edge for blocked kernels.
inline constexpr Eigen::Index kDefaultTile = 256;

namespace serial {

/// K = X X^T by explicit dot products.
Matrix gram(const Matrix& x);

/// <Xc Xc^T, Yc Yc^T>_F by a double loop over sample pairs.
double centered_kernel_inner(const Matrix& xc, const Matrix& yc);

/// Fills the symmetric n x n matrix with f(i, j) for i < j; diagonal = `diagonal`.
Matrix pairwise(std::size_t n, const PairFunction& f, double diagonal);

/// Indices of the k nearest rows (euclidean, self excluded, ties by index).
std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k);

/// max over rows a of min over rows b of ||a - b||.
double directed_hausdorff(const Matrix& a, const Matrix& b);

}  // namespace serial

namespace omp {

Matrix gram(const Matrix& x, Eigen::Index tile = kDefaultTile);

/// Tiled version: only two tile x tile blocks per worker are live at a time.
/// Per-tile partial sums are reduced in fixed tile order.
double centered_kernel_inner(const Matrix& xc, const Matrix& yc, Eigen::Index tile = kDefaultTile);

Matrix pairwise(std::size_t n, const PairFunction& f, double diagonal, std::size_t block = 32);

std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k);

double directed_hausdorff(const Matrix& a, const Matrix& b);

}  // namespace omp

}  // namespace voiceprobe::kernels
