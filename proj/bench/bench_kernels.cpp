// bench/bench_kernels.cpp

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

// Times the serial reference kernels against the OpenMP ones.
//   bench_kernels [n] [dim] [reps]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include <omp.h>

#include "voiceprobe/kernels.hpp"

using voiceprobe::Matrix;
namespace k = voiceprobe::kernels;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

double best_of(int reps, const std::function<double()>& f, double& sink) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    sink += f();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-24s serial %9.4f s   omp %9.4f s   speedup %5.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const Eigen::Index n = argc > 1 ? std::atol(argv[1]) : 1500;
  const Eigen::Index dim = argc > 2 ? std::atol(argv[2]) : 256;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 3;
  std::printf("n=%ld dim=%ld reps=%d threads=%d\n", static_cast<long>(n), static_cast<long>(dim), reps,
              omp_get_max_threads());

  const Matrix x = random_matrix(n, dim, 1);
  const Matrix y = random_matrix(n, dim / 2, 2);
  double sink = 0.0;

  report("gram", best_of(reps, [&] { return k::serial::gram(x).sum(); }, sink),
         best_of(reps, [&] { return k::omp::gram(x).sum(); }, sink));
  report("centered_kernel_inner", best_of(reps, [&] { return k::serial::centered_kernel_inner(x, y); }, sink),
         best_of(reps, [&] { return k::omp::centered_kernel_inner(x, y); }, sink));

  auto dist = [&x](std::size_t i, std::size_t j) {
    return (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
  };
  const auto un = static_cast<std::size_t>(n);
  report("pairwise", best_of(reps, [&] { return k::serial::pairwise(un, dist, 0.0).sum(); }, sink),
         best_of(reps, [&] { return k::omp::pairwise(un, dist, 0.0).sum(); }, sink));
  report("knn(k=10)", best_of(reps, [&] { return double(k::serial::knn(x, 10).size()); }, sink),
         best_of(reps, [&] { return double(k::omp::knn(x, 10).size()); }, sink));

  const Matrix a = random_matrix(n, 64, 3), b = random_matrix(n, 64, 4);
  report("directed_hausdorff", best_of(reps, [&] { return k::serial::directed_hausdorff(a, b); }, sink),
         best_of(reps, [&] { return k::omp::directed_hausdorff(a, b); }, sink));
  std::printf("checksum %.6g\n", sink);
  return 0;
}
