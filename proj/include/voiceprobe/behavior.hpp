// include/voiceprobe/behavior.hpp

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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "voiceprobe/csv.hpp"
#include "voiceprobe/stimsel.hpp"

namespace voiceprobe::behavior {

using stimsel::NoiseOrder;
using stimsel::Truth;

enum class Response { Same, Different };

struct TrialResponse {
  std::string subject_id;
  int trial_id = 0;
  Truth truth = Truth::Same;
  Response response = Response::Same;
  int confidence = 1;  // 1..7
  double rt_s = 0.0;
  NoiseOrder noise_order = NoiseOrder::CleanNoisy;

  bool correct() const noexcept {
    return (truth == Truth::Same) == (response == Response::Same);
  }
};

/// Columns subject_id,trial_id,truth,response,confidence,rt_s,noise_order.
std::vector<TrialResponse> parse_responses(const CsvTable& table);
std::vector<TrialResponse> read_responses(const std::string& path);

struct Rates {
  double hit_rate = 0.0;  // P("different" | Different)
  double fa_rate = 0.0;   // P("different" | Same)
  std::size_t hits = 0, false_alarms = 0;
  std::size_t n_signal = 0, n_noise = 0;
};

/// Throws when either truth condition is absent.
Rates rates(const std::vector<TrialResponse>& responses);

/// z(H') - z(F') with the log-linear correction
/// H' = (H n_signal + 0.5) / (n_signal + 1), likewise for F.
double d_prime(double hit_rate, double fa_rate, std::size_t n_signal, std::size_t n_noise);

struct SubjectSummary {
  std::string subject_id;
  double accuracy = 0.0;
  double hit_rate = 0.0;
  double fa_rate = 0.0;
  double d_prime = 0.0;
  double mean_rt = 0.0;
  std::size_t n = 0;
};

SubjectSummary summarize(const std::vector<TrialResponse>& one_subject);
/// Per subject, ordered by subject id.
std::vector<SubjectSummary> summarize_subjects(const std::vector<TrialResponse>& responses);

struct Cell {
  std::vector<std::pair<std::string, std::string>> key;  // (grouping key, level)
  std::size_t count = 0;
  std::optional<double> accuracy;  // empty when count == 0
};

/// Accuracy per combination of the levels of the grouping keys (truth,
/// noise_order, confidence). Every level combination is listed; empty ones
/// carry no accuracy. No keys: a single overall cell.
std::vector<Cell> breakdown(const std::vector<TrialResponse>& responses, const std::vector<std::string>& group_by);

/// trial_id -> fraction of subjects answering correctly.
std::map<int, double> per_trial_accuracy(const std::vector<TrialResponse>& responses);

struct Correlation {
  double r = 0.0;
  double p = 0.0;
  std::size_t n = 0;
};

/// Two-sided p from Student's t with n - 2 degrees of freedom. Needs n >= 3
/// and non-constant inputs.
Correlation pearson(const std::vector<double>& x, const std::vector<double>& y);
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y);

/// (mean_a - mean_b) / pooled std.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace voiceprobe::behavior
