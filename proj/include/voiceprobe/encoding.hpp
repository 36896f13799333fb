// include/voiceprobe/encoding.hpp

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

// Voxel-wise encoding (delayed-feature ridge regression, leave-one-run-out)
// and label decoding with a linear max-margin classifier.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "voiceprobe/common.hpp"

namespace voiceprobe::encoding {

struct RunSeries {
  std::string run_id;
  Matrix features;  // TRs x D
  Matrix targets;   // TRs x G
  double tr_s = 2.0;
};

/// Runs CSV: run_id,features_path,targets_path,tr_s (paths relative to the CSV).
std::vector<RunSeries> read_runs(const std::string& path);

/// [X shifted by lag_1 | X shifted by lag_2 | ...], zero-padded at the top.
Matrix delay_features(const Matrix& x, const std::vector<int>& lags);

/// (X'X + aI)^-1 X'Y, or X'(XX' + aI)^-1 Y when X has fewer rows than columns.
Matrix ridge_fit(const Matrix& x, const Matrix& y, double alpha);
Matrix ridge_primal(const Matrix& x, const Matrix& y, double alpha);
Matrix ridge_dual(const Matrix& x, const Matrix& y, double alpha);

struct Scores {
  std::vector<double> r;
  std::vector<double> r2;
};

/// Per column. Needs >= 3 rows; a constant truth column raises Error.
Scores r2_and_pearson(const Matrix& predicted, const Matrix& truth);

/// Read access to run targets. loro_cv reads targets only through this
/// interface, so a harness can audit which runs were touched and when.
class TargetProvider {
 public:
  virtual ~TargetProvider() = default;
  virtual const Matrix& targets(std::size_t run) const = 0;
};

struct LoroOptions {
  std::vector<double> alpha_grid{1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
  std::vector<std::vector<int>> lags_grid{{1, 2, 3, 4}};
  bool per_target_alpha = true;
};

struct EncodingResult {
  std::string holdout_run;
  std::vector<double> r;
  std::vector<double> r2;
  std::vector<double> alpha;  // per target
  std::vector<int> lags;
  /// Mean inner-fold r of the chosen lags (averaged over targets).
  double inner_score = 0.0;
};

/// Selects lags and alphas by leave-one-run-out over the training runs (all
/// but `holdout`), refits on all of them and scores the held-out run.
/// Features are standardised on the training rows of every fit and targets
/// centred by their training mean. The held-out run's targets are read once,
/// after selection and refit.
EncodingResult loro_cv(const std::vector<RunSeries>& runs, std::size_t holdout, const LoroOptions& options,
                       const TargetProvider* provider = nullptr);

/// Canonical double-gamma response: peaks and full widths at half maximum of
/// the response and undershoot, and the undershoot ratio.
struct HrfParams {
  double peak_s = 5.4;
  double undershoot_s = 10.8;
  double peak_fwhm_s = 5.2;
  double undershoot_fwhm_s = 7.35;
  double ratio = 0.35;
  double length_s = 32.0;
};

/// Kernel sampled at t = 0, tr, 2 tr, ... up to length_s.
std::vector<double> glover_hrf(double tr_s, const HrfParams& params = {});

struct AlignMode {
  enum class Kind { Shift, Hrf } kind = Kind::Shift;
  int shift = 0;  // TRs, for Kind::Shift
  HrfParams hrf;
};

/// TR t is 1 when the union of segments covers more than half of
/// [t tr, (t + 1) tr). Shift moves labels later (zero fill); Hrf convolves
/// with the response and binarises at the median.
std::vector<int> align_labels(const std::vector<std::pair<double, double>>& segments, std::size_t n_trs, double tr_s,
                              const AlignMode& mode);

/// Segments CSV: start_s,end_s[,run_id].
struct Segment {
  double start_s = 0.0, end_s = 0.0;
  std::string run_id;  // empty: applies to every run
};
std::vector<Segment> read_segments(const std::string& path);

/// Mean of the two class recalls (binary UAR).
double balanced_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Linear SVM (hinge loss, L2 penalty) trained by dual coordinate descent,
/// with a bias feature and class-balanced weights C n / (2 n_c).
class LinearSvc {
 public:
  static LinearSvc fit(const Matrix& x, const std::vector<int>& labels, double c, std::uint64_t seed,
                       int max_iter = 1000, double tol = 1e-4);
  Vector decision(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
  const Vector& weights() const noexcept { return w_; }
  double bias() const noexcept { return b_; }

 private:
  Vector w_;
  double b_ = 0.0;
};

struct LabeledRun {
  std::string run_id;
  Matrix features;  // TRs x F
  std::vector<int> labels;
};

struct DecodeResult {
  std::string holdout_run;
  double balanced_accuracy = 0.0;
  double c = 0.0;
  std::vector<double> inner_scores;  // per C of the grid
};

/// C chosen by inner leave-one-run-out balanced accuracy; refit on all
/// training runs; scored on the held-out run. Every training fold must
/// contain both classes.
DecodeResult svc_decode(const std::vector<LabeledRun>& runs, std::size_t holdout, const std::vector<double>& c_grid,
                        std::uint64_t seed);

}  // namespace voiceprobe::encoding
