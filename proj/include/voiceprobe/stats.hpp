// include/voiceprobe/stats.hpp

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

#include <span>
#include <vector>

namespace voiceprobe::stats {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Product-moment correlation. Throws Error for n < 2, length mismatch or a
/// constant input.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of a correlation coefficient under the null of no
/// association, using t = r sqrt((n - 2) / (1 - r^2)) with n - 2 degrees of
/// freedom. Returns 0 for |r| = 1.
double correlation_p_value(double r, std::size_t n);

/// Upper-tail probability P(T > t) of Student's t with `dof` degrees of freedom.
double student_t_sf(double t, double dof);

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF (probit). Rational approximation refined by a
/// Halley step; absolute error well below 1e-9 on (0, 1). Throws for p
/// outside (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double sample_variance(std::span<const double> x);

}  // namespace voiceprobe::stats
