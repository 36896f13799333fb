// tests/test_stats.cpp

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

#include <cmath>
#include <vector>

#include "voiceprobe/common.hpp"
#include "voiceprobe/stats.hpp"

using namespace voiceprobe;

TEST_CASE("average ranks") {
  std::vector<double> v{3.0, 1.0, 3.0, 2.0};
  CHECK(stats::average_ranks(v) == std::vector<double>{3.5, 1.0, 3.5, 2.0});
  std::vector<double> same{7, 7, 7};
  CHECK(stats::average_ranks(same) == std::vector<double>{2, 2, 2});
}

TEST_CASE("normal cdf and quantile") {
  CHECK(stats::normal_cdf(0.0) == 0.5);
  CHECK(std::abs(stats::normal_quantile(0.9) - 1.2815515655446004) < 1e-12);
  CHECK(std::abs(stats::normal_quantile(0.025) + 1.959963984540054) < 1e-12);
  CHECK(stats::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.7, 0.99, 1 - 1e-9})
    CHECK(std::abs(stats::normal_cdf(stats::normal_quantile(p)) - p) < 1e-9 * std::max(p, 1e-3));
  CHECK_THROWS(stats::normal_quantile(0.0));
  CHECK_THROWS(stats::normal_quantile(1.0));
}

TEST_CASE("student t and correlation p") {
  // scipy.stats.t.sf(2.0, 10) = 0.036694017385370196
  CHECK(std::abs(stats::student_t_sf(2.0, 10) - 0.036694017385370196) < 1e-12);
  CHECK(stats::student_t_sf(0.0, 5) == doctest::Approx(0.5));
  CHECK(stats::correlation_p_value(1.0, 10) == 0.0);
  CHECK(stats::correlation_p_value(0.0, 10) == doctest::Approx(1.0));
}

TEST_CASE("pearson") {
  std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1};
  CHECK(stats::pearson_r(x, y) == doctest::Approx(1.0));
  CHECK(stats::pearson_r(x, z) == doctest::Approx(-1.0));
  std::vector<double> c{1, 1, 1, 1};
  CHECK_THROWS(stats::pearson_r(x, c));
  std::vector<double> shorter{1, 2};
  CHECK_THROWS(stats::pearson_r(x, shorter));
  CHECK(stats::mean(x) == 2.5);
  CHECK(stats::sample_variance(x) == doctest::Approx(5.0 / 3.0));
}
