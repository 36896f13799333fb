// src/kernels_serial.cpp

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
#include <limits>
#include <numeric>

#include "voiceprobe/kernels.hpp"

namespace voiceprobe::kernels::serial {

Matrix gram(const Matrix& x) {
  const auto n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) s += x(i, c) * x(j, c);
      k(i, j) = s;
    }
  return k;
}

double centered_kernel_inner(const Matrix& xc, const Matrix& yc) {
  const auto n = xc.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double kx = 0.0, ky = 0.0;
      for (Eigen::Index c = 0; c < xc.cols(); ++c) kx += xc(i, c) * xc(j, c);
      for (Eigen::Index c = 0; c < yc.cols(); ++c) ky += yc(i, c) * yc(j, c);
      total += kx * ky;
    }
  return total;
}

Matrix pairwise(std::size_t n, const PairFunction& f, double diagonal) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix out(m, m);
  for (std::size_t i = 0; i < n; ++i) {
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diagonal;
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = f(i, j);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        double diff = x(static_cast<Eigen::Index>(i), c) - x(static_cast<Eigen::Index>(j), c);
        s += diff * diff;
      }
      d.emplace_back(s, j);
    }
    std::sort(d.begin(), d.end());
    for (std::size_t r = 0; r < k; ++r) out[i].push_back(d[r].second);
  }
  return out;
}

double directed_hausdorff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        double diff = a(i, c) - b(j, c);
        s += diff * diff;
      }
      best = std::min(best, s);
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace voiceprobe::kernels::serial
