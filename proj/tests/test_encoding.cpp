// tests/test_encoding.cpp

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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "voiceprobe/encoding.hpp"
#include "voiceprobe/probe.hpp"

using namespace voiceprobe;
using namespace voiceprobe::encoding;

namespace {

// Gamma density with shape k and scale s, scaled to 1 at its mode (k - 1) s.
double gamma_lobe(double t, double k, double s) {
  auto log_pdf = [&](double x) { return (k - 1.0) * std::log(x) - x / s - std::lgamma(k) - k * std::log(s); };
  if (t <= 0.0) return 0.0;
  return std::exp(log_pdf(t) - log_pdf((k - 1.0) * s));
}

double hrf_oracle(double t, const HrfParams& p) {
  auto shape = [](double peak, double fwhm) { return 8.0 * std::log(2.0) * std::pow(peak / fwhm, 2); };
  const double a1 = shape(p.peak_s, p.peak_fwhm_s), a2 = shape(p.undershoot_s, p.undershoot_fwhm_s);
  return gamma_lobe(t, a1 + 1.0, p.peak_s / a1) - p.ratio * gamma_lobe(t, a2 + 1.0, p.undershoot_s / a2);
}

}  // namespace

TEST_CASE("delay features") {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(delay_features(x, {0}) == x);
  Matrix one(3, 2);
  one << 0, 0, 1, 2, 3, 4;
  CHECK(delay_features(x, {1}) == one);
  std::mt19937_64 rng(1);
  Matrix r = vptest::random_matrix(10, 3, rng);
  Matrix d = delay_features(r, {0, 2});
  REQUIRE(d.cols() == 6);
  for (int t = 0; t < 10; ++t)
    for (int c = 0; c < 3; ++c) {
      CHECK(d(t, c) == r(t, c));
      CHECK(d(t, 3 + c) == (t >= 2 ? r(t - 2, c) : 0.0));
    }
  CHECK(delay_features(delay_features(r, {1}), {2}) == delay_features(r, {3}));
  CHECK_THROWS(delay_features(r, {10}));
  CHECK_THROWS(delay_features(r, {}));
  CHECK_THROWS(delay_features(r, {-1}));
}

TEST_CASE("ridge") {
  Matrix x = Matrix::Identity(2, 2), y(2, 1);
  y << 1, 0;
  Matrix w = ridge_fit(x, y, 1.0);
  CHECK(w(0, 0) == doctest::Approx(0.5));
  CHECK(w(1, 0) == 0.0);
  CHECK(ridge_fit(x, y, 1e12).cwiseAbs().maxCoeff() < 1e-11);

  std::mt19937_64 rng(2);
  Matrix a = vptest::random_matrix(20, 5, rng), b = vptest::random_matrix(20, 3, rng);
  for (double alpha : {1e-2, 1.0, 1e3}) {
    Matrix p = ridge_primal(a, b, alpha), q = ridge_dual(a, b, alpha);
    CHECK((p - q).norm() <= 1e-8 * p.norm());
  }
  Matrix wide = vptest::random_matrix(6, 15, rng), yw = vptest::random_matrix(6, 2, rng);
  Matrix p = ridge_primal(wide, yw, 0.5), q = ridge_dual(wide, yw, 0.5);
  CHECK((p - q).norm() <= 1e-8 * p.norm());
  CHECK((ridge_fit(wide, yw, 0.5) - q).norm() <= 1e-12 * q.norm());
  CHECK_THROWS(ridge_fit(a, b, 0.0));
}

TEST_CASE("r2 and pearson") {
  Matrix truth(5, 2);
  truth << 1, 2, 2, 1, 3, 5, 4, 3, 5, 4;
  auto perfect = r2_and_pearson(truth, truth);
  CHECK(perfect.r[0] == doctest::Approx(1.0));
  CHECK(perfect.r2[1] == doctest::Approx(1.0));
  Matrix mean = truth.colwise().mean().replicate(5, 1);
  mean(0, 0) += 1e-9;  // keep the prediction non-constant for r
  CHECK(std::abs(r2_and_pearson(mean, truth).r2[0]) < 1e-8);

  Matrix pred(5, 2);
  pred << 1.5, 2, 1.5, 2, 3.5, 4, 3, 3, 6, 3;
  auto s = r2_and_pearson(pred, truth);
  for (int c = 0; c < 2; ++c) {
    const double mu = truth.col(c).mean();
    const double ss_res = (truth.col(c) - pred.col(c)).squaredNorm();
    const double ss_tot = (truth.col(c).array() - mu).square().sum();
    CHECK(s.r2[static_cast<std::size_t>(c)] == doctest::Approx(1.0 - ss_res / ss_tot));
    Vector tc = truth.col(c).array() - mu, pc = pred.col(c).array() - pred.col(c).mean();
    CHECK(s.r[static_cast<std::size_t>(c)] == doctest::Approx(tc.dot(pc) / (tc.norm() * pc.norm())));
  }
  Matrix flat = Matrix::Ones(5, 1);
  CHECK_THROWS(r2_and_pearson(flat, flat));
  CHECK_THROWS(r2_and_pearson(truth.topRows(2), truth.topRows(2)));
}

TEST_CASE("glover response") {
  HrfParams p;
  auto h = glover_hrf(0.1, p);
  CHECK(h.size() == 321);
  for (std::size_t k = 0; k < h.size(); ++k) CHECK(std::abs(h[k] - hrf_oracle(0.1 * static_cast<double>(k), p)) < 1e-12);
  const auto peak = std::max_element(h.begin(), h.end()) - h.begin();
  CHECK(static_cast<double>(peak) * 0.1 <= 5.4);
  CHECK(static_cast<double>(peak) * 0.1 > 4.8);
  const auto trough = std::min_element(h.begin(), h.end()) - h.begin();
  CHECK(static_cast<double>(trough) * 0.1 > 10.0);
  CHECK(h.front() == 0.0);
  CHECK(glover_hrf(2.0).size() == 17);
}

TEST_CASE("align labels") {
  AlignMode none;
  auto l = align_labels({{6.0, 12.0}}, 10, 2.0, none);
  CHECK(l == std::vector<int>{0, 0, 0, 1, 1, 1, 0, 0, 0, 0});
  AlignMode two;
  two.shift = 2;
  CHECK(align_labels({{6.0, 12.0}}, 10, 2.0, two) == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 0, 0});
  // Exactly half a TR is not more than half.
  CHECK(align_labels({{1.0, 2.0}}, 3, 2.0, none) == std::vector<int>{0, 0, 0});
  CHECK(align_labels({{0.9, 2.0}}, 3, 2.0, none) == std::vector<int>{1, 0, 0});
  // Two segments that only together exceed half the TR.
  CHECK(align_labels({{0.0, 0.6}, {1.4, 2.0}}, 2, 2.0, none) == std::vector<int>{1, 0});
  CHECK(align_labels({{0.0, 0.6}, {0.4, 1.2}}, 2, 2.0, none) == std::vector<int>{1, 0});
  CHECK_THROWS(align_labels({{0.0, 30.0}}, 10, 2.0, none));
  AlignMode neg;
  neg.shift = -1;
  CHECK_THROWS(align_labels({{0.0, 2.0}}, 10, 2.0, neg));

  // Impulse through the response, against a direct convolution with the oracle.
  AlignMode hrf;
  hrf.kind = AlignMode::Kind::Hrf;
  const std::size_t n = 40;
  auto got = align_labels({{10.0, 12.0}, {40.0, 44.0}}, n, 2.0, hrf);
  std::vector<int> base(n, 0);
  base[5] = base[20] = base[21] = 1;
  std::vector<double> conv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s <= t; ++s)
      if (base[s] && static_cast<double>(t - s) * 2.0 <= 32.0) conv[t] += hrf_oracle(static_cast<double>(t - s) * 2.0, hrf.hrf);
  auto sorted = conv;
  std::sort(sorted.begin(), sorted.end());
  const double med = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<int> expect(n);
  for (std::size_t t = 0; t < n; ++t) expect[t] = conv[t] > med ? 1 : 0;
  CHECK(got == expect);
}

TEST_CASE("balanced accuracy") {
  std::vector<int> truth(100, 0), ones(100, 1);
  for (int i = 0; i < 10; ++i) truth[static_cast<std::size_t>(i)] = 1;
  CHECK(balanced_accuracy(ones, truth) == 0.5);
  std::mt19937_64 rng(3);
  std::vector<int> pred(100);
  for (auto& p : pred) p = static_cast<int>(rng() % 2);
  std::vector<std::string> ps, ts;
  for (std::size_t i = 0; i < 100; ++i) {
    ps.push_back(std::to_string(pred[i]));
    ts.push_back(std::to_string(truth[i]));
  }
  CHECK(balanced_accuracy(pred, truth) == probe::uar(ps, ts));
  std::vector<int> three{0, 1, 2};
  CHECK_THROWS(balanced_accuracy(three, three));
}

TEST_CASE("linear svc") {
  std::mt19937_64 rng(4);
  Matrix x = vptest::random_matrix(200, 4, rng);
  Vector w(4);
  w << 1.0, -2.0, 0.5, 0.0;
  std::vector<int> y(200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const double m = x.row(i).dot(w) + 0.3;
    y[static_cast<std::size_t>(i)] = m > 0 ? 1 : 0;
    x.row(i) += 0.3 * (m > 0 ? 1.0 : -1.0) * w.transpose() / w.norm();  // widen the margin
  }
  auto svc = LinearSvc::fit(x, y, 10.0, 1);
  CHECK(balanced_accuracy(svc.predict(x), y) == 1.0);
  CHECK(svc.weights().normalized().dot(w.normalized()) > 0.95);
  auto again = LinearSvc::fit(x, y, 10.0, 1);
  CHECK(again.weights() == svc.weights());

  std::vector<int> shuffled = y;
  shuffle_in_place(shuffled, rng);
  Matrix fresh = vptest::random_matrix(2000, 4, rng);
  std::vector<int> fy(2000);
  for (auto& v : fy) v = static_cast<int>(rng() % 2);
  auto noise = LinearSvc::fit(x, shuffled, 1.0, 2);
  const double ba = balanced_accuracy(noise.predict(fresh), fy);
  CHECK(std::abs(ba - 0.5) < 0.07);
  std::vector<int> single(200, 1);
  CHECK_THROWS(LinearSvc::fit(x, single, 1.0, 1));
}

namespace {

std::vector<RunSeries> planted_runs(std::size_t n_runs, Eigen::Index trs, Eigen::Index d, Eigen::Index g, double noise,
                                    bool null_targets, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix w = vptest::random_matrix(d * 2, g, rng);
  std::vector<RunSeries> runs;
  for (std::size_t r = 0; r < n_runs; ++r) {
    RunSeries s;
    s.run_id = "run" + std::to_string(r + 1);
    s.features = vptest::random_matrix(trs, d, rng);
    if (null_targets)
      s.targets = vptest::random_matrix(trs, g, rng);
    else
      s.targets = delay_features(s.features, {1, 2}) * w + noise * vptest::random_matrix(trs, g, rng);
    runs.push_back(std::move(s));
  }
  return runs;
}

struct RecordingProvider : TargetProvider {
  const std::vector<RunSeries>& runs;
  mutable std::vector<std::size_t> log;
  explicit RecordingProvider(const std::vector<RunSeries>& r) : runs(r) {}
  const Matrix& targets(std::size_t run) const override {
    log.push_back(run);
    return runs[run].targets;
  }
};

}  // namespace

TEST_CASE("leave one run out encoding") {
  auto runs = planted_runs(3, 80, 4, 6, 0.3, false, 5);
  LoroOptions opt;
  opt.alpha_grid = {10.0};
  opt.lags_grid = {{1, 2}, {3}};
  RecordingProvider audit(runs);
  auto res = loro_cv(runs, 2, opt, &audit);
  CHECK(res.holdout_run == "run3");
  CHECK(res.lags == std::vector<int>{1, 2});
  for (double a : res.alpha) CHECK(a == 10.0);
  std::vector<double> r = res.r;
  std::sort(r.begin(), r.end());
  CHECK(r[r.size() / 2] > 0.9);
  REQUIRE(!audit.log.empty());
  CHECK(audit.log.back() == 2);
  CHECK(std::count(audit.log.begin(), audit.log.end(), std::size_t{2}) == 1);

  CHECK_THROWS(loro_cv({runs[0], runs[1]}, 0, opt));
  auto bad = runs;
  bad[1].targets.conservativeResize(79, Eigen::NoChange);
  CHECK_THROWS(loro_cv(bad, 0, opt));
}

TEST_CASE("svc decoding across runs") {
  std::mt19937_64 rng(6);
  Vector w = vptest::random_vector(8, rng);
  std::vector<LabeledRun> runs;
  for (int r = 0; r < 4; ++r) {
    LabeledRun run;
    run.run_id = "r" + std::to_string(r);
    run.features = vptest::random_matrix(60, 8, rng);
    for (Eigen::Index i = 0; i < 60; ++i) {
      const int label = run.features.row(i).dot(w) > 0 ? 1 : 0;
      run.labels.push_back(label);
      run.features.row(i) += (label ? 0.5 : -0.5) * w.transpose() / w.norm();
    }
    runs.push_back(std::move(run));
  }
  auto res = svc_decode(runs, 3, {0.1, 1.0}, 1);
  CHECK(res.balanced_accuracy >= 0.95);
  CHECK(res.inner_scores.size() == 2);
  CHECK(res.holdout_run == "r3");
  auto single = svc_decode(runs, 0, {1.0}, 1);
  CHECK(single.c == 1.0);
  runs[1].labels.assign(60, 0);
  runs[2].labels.assign(60, 0);
  CHECK_THROWS(svc_decode(runs, 3, {1.0}, 1));
}
