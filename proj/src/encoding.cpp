// src/encoding.cpp

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

#include "voiceprobe/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "voiceprobe/corpus.hpp"
#include "voiceprobe/csv.hpp"
#include "voiceprobe/npy.hpp"
#include "voiceprobe/probe.hpp"

namespace voiceprobe::encoding {

std::vector<RunSeries> read_runs(const std::string& path) {
  auto table = read_csv(path);
  const auto c_id = table.require("run_id");
  const auto c_feat = table.require("features_path");
  const auto c_targ = table.require("targets_path");
  const auto c_tr = table.require("tr_s");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<RunSeries> runs;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    RunSeries r;
    r.run_id = row[c_id];
    if (r.run_id.empty()) throw DataError(path, "row " + std::to_string(i + 1) + ": empty run_id");
    r.features = read_npy((base / row[c_feat]).string());
    r.targets = read_npy((base / row[c_targ]).string());
    r.tr_s = parse_double(row[c_tr], path + ": row " + std::to_string(i + 1) + " tr_s");
    if (!(r.tr_s > 0.0)) throw DataError(path, "row " + std::to_string(i + 1) + ": tr_s must be positive");
    if (r.features.rows() != r.targets.rows())
      throw DataError(path, "run '" + r.run_id + "': features have " + std::to_string(r.features.rows()) +
                                " TRs but targets have " + std::to_string(r.targets.rows()));
    if (!runs.empty() && (r.features.cols() != runs.front().features.cols() ||
                          r.targets.cols() != runs.front().targets.cols()))
      throw DataError(path, "run '" + r.run_id + "': feature or target width differs from the first run");
    runs.push_back(std::move(r));
  }
  if (runs.empty()) throw DataError(path, "no runs");
  return runs;
}

Matrix delay_features(const Matrix& x, const std::vector<int>& lags) {
  if (lags.empty()) throw Error("delay_features: empty lag list");
  const auto n = x.rows(), d = x.cols();
  Matrix out = Matrix::Zero(n, d * static_cast<Eigen::Index>(lags.size()));
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const int lag = lags[k];
    if (lag < 0) throw Error("delay_features: negative lag");
    if (lag >= n) throw Error("delay_features: lag " + std::to_string(lag) + " is not shorter than the run (" + std::to_string(n) + " TRs)");
    out.block(lag, d * static_cast<Eigen::Index>(k), n - lag, d) = x.topRows(n - lag);
  }
  return out;
}

namespace {

void check_finite(const Matrix& w, const char* what) {
  if (!w.allFinite()) throw Error(std::string(what) + ": non-finite solution");
}

void check_ridge(const Matrix& x, const Matrix& y, double alpha) {
  if (x.rows() != y.rows()) throw Error("ridge: sample count mismatch");
  if (!(alpha > 0.0)) throw Error("ridge: alpha must be positive");
}

}  // namespace

Matrix ridge_primal(const Matrix& x, const Matrix& y, double alpha) {
  check_ridge(x, y, alpha);
  Matrix g = x.transpose() * x;
  g.diagonal().array() += alpha;
  Matrix w = g.ldlt().solve(x.transpose() * y);
  check_finite(w, "ridge_primal");
  return w;
}

Matrix ridge_dual(const Matrix& x, const Matrix& y, double alpha) {
  check_ridge(x, y, alpha);
  Matrix k = x * x.transpose();
  k.diagonal().array() += alpha;
  Matrix w = x.transpose() * k.ldlt().solve(y);
  check_finite(w, "ridge_dual");
  return w;
}

Matrix ridge_fit(const Matrix& x, const Matrix& y, double alpha) {
  return x.rows() >= x.cols() ? ridge_primal(x, y, alpha) : ridge_dual(x, y, alpha);
}

Scores r2_and_pearson(const Matrix& predicted, const Matrix& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw Error("r2_and_pearson: shape mismatch");
  if (truth.rows() < 3) throw Error("r2_and_pearson: need at least three samples");
  Scores s;
  for (Eigen::Index g = 0; g < truth.cols(); ++g) {
    const Vector t = truth.col(g), p = predicted.col(g);
    const Vector tc = t.array() - t.mean();
    const double ss_tot = tc.squaredNorm();
    if (!(ss_tot > 0.0)) throw Error("r2_and_pearson: target " + std::to_string(g) + " is constant");
    s.r2.push_back(1.0 - (t - p).squaredNorm() / ss_tot);
    const Vector pc = p.array() - p.mean();
    const double pn = pc.norm();
    s.r.push_back(pn > 0.0 ? std::clamp(tc.dot(pc) / (std::sqrt(ss_tot) * pn), -1.0, 1.0) : std::nan(""));
  }
  return s;
}

namespace {

class OwnTargets : public TargetProvider {
 public:
  explicit OwnTargets(const std::vector<RunSeries>& runs) : runs_(runs) {}
  const Matrix& targets(std::size_t run) const override { return runs_[run].targets; }

 private:
  const std::vector<RunSeries>& runs_;
};

Matrix stack(const std::vector<const Matrix*>& parts) {
  Eigen::Index rows = 0;
  for (auto* p : parts) rows += p->rows();
  Matrix out(rows, parts.front()->cols());
  Eigen::Index at = 0;
  for (auto* p : parts) {
    out.middleRows(at, p->rows()) = *p;
    at += p->rows();
  }
  return out;
}

// Ridge predictions on `xv` for many alphas from one eigendecomposition:
// pred(alpha) = A diag(1 / (s + alpha)) B + mean.
struct RidgePath {
  Matrix a;
  Vector s;
  Matrix b;
  Vector mean;

  RidgePath(const Matrix& xs, const Matrix& y, const Matrix& xv) {
    mean = y.colwise().mean().transpose();
    Matrix yc = y.rowwise() - mean.transpose();
    if (xs.rows() >= xs.cols()) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(xs.transpose() * xs);
      s = eig.eigenvalues().cwiseMax(0.0);
      a = xv * eig.eigenvectors();
      b = eig.eigenvectors().transpose() * (xs.transpose() * yc);
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(xs * xs.transpose());
      s = eig.eigenvalues().cwiseMax(0.0);
      a = (xv * xs.transpose()) * eig.eigenvectors();
      b = eig.eigenvectors().transpose() * yc;
    }
  }

  Matrix predict(double alpha) const {
    Vector inv = (s.array() + alpha).inverse();
    Matrix p = (a * inv.asDiagonal()) * b;
    p.rowwise() += mean.transpose();
    return p;
  }

  Matrix predict(double alpha, const std::vector<Eigen::Index>& cols) const {
    Vector inv = (s.array() + alpha).inverse();
    Matrix bsel(b.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) bsel.col(static_cast<Eigen::Index>(k)) = b.col(cols[k]);
    Matrix p = (a * inv.asDiagonal()) * bsel;
    for (std::size_t k = 0; k < cols.size(); ++k) p.col(static_cast<Eigen::Index>(k)).array() += mean(cols[k]);
    return p;
  }
};

// Pearson r per column; 0 when either side is constant.
Vector column_r(const Matrix& pred, const Matrix& truth) {
  Vector r(truth.cols());
  for (Eigen::Index g = 0; g < truth.cols(); ++g) {
    const Vector tc = truth.col(g).array() - truth.col(g).mean();
    const Vector pc = pred.col(g).array() - pred.col(g).mean();
    const double d = tc.norm() * pc.norm();
    r(g) = d > 0.0 ? tc.dot(pc) / d : 0.0;
  }
  return r;
}

struct Fit {
  Matrix xs;  // standardised training features
  Matrix xv;  // standardised evaluation features
};

Fit standardise(const std::vector<const Matrix*>& train, const Matrix& eval) {
  Matrix xtr = stack(train);
  auto st = Standardizer::fit(xtr);
  return {st.apply_rows(xtr), st.apply_rows(eval)};
}

}  // namespace

EncodingResult loro_cv(const std::vector<RunSeries>& runs, std::size_t holdout, const LoroOptions& options,
                       const TargetProvider* provider) {
  if (runs.size() < 3) throw Error("loro_cv: need at least three runs");
  if (holdout >= runs.size()) throw Error("loro_cv: holdout index out of range");
  if (options.alpha_grid.empty() || options.lags_grid.empty()) throw Error("loro_cv: empty alpha or lag grid");
  for (double a : options.alpha_grid)
    if (!(a > 0.0)) throw Error("loro_cv: alphas must be positive");
  const auto d = runs.front().features.cols();
  const auto g = runs.front().targets.cols();
  for (const auto& r : runs) {
    if (r.features.cols() != d) throw Error("loro_cv: run '" + r.run_id + "' has a different feature width");
    if (r.targets.cols() != g) throw Error("loro_cv: run '" + r.run_id + "' has a different target count");
    if (r.features.rows() != r.targets.rows())
      throw Error("loro_cv: run '" + r.run_id + "' has " + std::to_string(r.features.rows()) + " feature rows but " +
                  std::to_string(r.targets.rows()) + " target rows");
  }
  OwnTargets own(runs);
  const TargetProvider& tp = provider ? *provider : own;
  std::vector<std::size_t> train_runs;
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (i != holdout) train_runs.push_back(i);

  const std::size_t n_alpha = options.alpha_grid.size();
  // Training targets, read once each.
  std::vector<const Matrix*> targets(runs.size(), nullptr);
  for (auto i : train_runs) targets[i] = &tp.targets(i);

  double best_lag_score = -std::numeric_limits<double>::infinity();
  std::size_t best_lag = 0;
  std::vector<double> best_alpha(static_cast<std::size_t>(g));
  for (std::size_t li = 0; li < options.lags_grid.size(); ++li) {
    std::vector<Matrix> delayed(runs.size());
    for (auto i : train_runs) delayed[i] = delay_features(runs[i].features, options.lags_grid[li]);
    // score(a, target): mean validation r across inner folds.
    Matrix score = Matrix::Zero(static_cast<Eigen::Index>(n_alpha), g);
    std::vector<Matrix> fold_scores(train_runs.size());
    std::vector<std::exception_ptr> errors(train_runs.size());
    const auto n_folds = static_cast<std::ptrdiff_t>(train_runs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t f = 0; f < n_folds; ++f) {
      try {
        const auto v = train_runs[static_cast<std::size_t>(f)];
        std::vector<const Matrix*> xp, yp;
        for (auto i : train_runs)
          if (i != v) {
            xp.push_back(&delayed[i]);
            yp.push_back(targets[i]);
          }
        auto fit = standardise(xp, delayed[v]);
        RidgePath path(fit.xs, stack(yp), fit.xv);
        Matrix s(static_cast<Eigen::Index>(n_alpha), g);
        for (std::size_t a = 0; a < n_alpha; ++a)
          s.row(static_cast<Eigen::Index>(a)) = column_r(path.predict(options.alpha_grid[a]), *targets[v]).transpose();
        fold_scores[static_cast<std::size_t>(f)] = std::move(s);
      } catch (...) {
        errors[static_cast<std::size_t>(f)] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (const auto& s : fold_scores) score += s;
    score /= static_cast<double>(train_runs.size());

    std::vector<double> alpha(static_cast<std::size_t>(g));
    double total = 0.0;
    if (options.per_target_alpha) {
      for (Eigen::Index t = 0; t < g; ++t) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < score.rows(); ++a)
          if (score(a, t) > score(best, t)) best = a;
        alpha[static_cast<std::size_t>(t)] = options.alpha_grid[static_cast<std::size_t>(best)];
        total += score(best, t);
      }
    } else {
      Vector mean_over_targets = score.rowwise().mean();
      Eigen::Index best = 0;
      for (Eigen::Index a = 1; a < score.rows(); ++a)
        if (mean_over_targets(a) > mean_over_targets(best)) best = a;
      std::fill(alpha.begin(), alpha.end(), options.alpha_grid[static_cast<std::size_t>(best)]);
      total = score.row(best).sum();
    }
    const double lag_score = total / static_cast<double>(g);
    if (lag_score > best_lag_score) {
      best_lag_score = lag_score;
      best_lag = li;
      best_alpha = alpha;
    }
  }

  // Refit on all training runs with the selected lags and alphas.
  const auto& lags = options.lags_grid[best_lag];
  std::vector<Matrix> delayed(runs.size());
  std::vector<const Matrix*> xp, yp;
  for (auto i : train_runs) {
    delayed[i] = delay_features(runs[i].features, lags);
    xp.push_back(&delayed[i]);
    yp.push_back(targets[i]);
  }
  const Matrix hold_x = delay_features(runs[holdout].features, lags);
  auto fit = standardise(xp, hold_x);
  RidgePath path(fit.xs, stack(yp), fit.xv);
  std::map<double, std::vector<Eigen::Index>> by_alpha;
  for (Eigen::Index t = 0; t < g; ++t) by_alpha[best_alpha[static_cast<std::size_t>(t)]].push_back(t);
  Matrix pred(hold_x.rows(), g);
  for (const auto& [a, cols] : by_alpha) {
    Matrix p = path.predict(a, cols);
    for (std::size_t k = 0; k < cols.size(); ++k) pred.col(cols[k]) = p.col(static_cast<Eigen::Index>(k));
  }

  const Matrix& hold_y = tp.targets(holdout);
  if (hold_y.rows() != hold_x.rows() || hold_y.cols() != g)
    throw Error("loro_cv: held-out run '" + runs[holdout].run_id + "' targets have the wrong shape");
  auto s = r2_and_pearson(pred, hold_y);
  EncodingResult out;
  out.holdout_run = runs[holdout].run_id;
  out.r = std::move(s.r);
  out.r2 = std::move(s.r2);
  out.alpha = std::move(best_alpha);
  out.lags = lags;
  out.inner_score = best_lag_score;
  return out;
}

std::vector<double> glover_hrf(double tr_s, const HrfParams& p) {
  if (!(tr_s > 0.0)) throw Error("glover_hrf: TR must be positive");
  // Gamma-like lobes (t/d)^a exp(-(t - d)/b) with d = a b; shape and scale
  // follow from the peak time and full width at half maximum.
  auto shape = [](double peak, double fwhm) { return 8.0 * std::log(2.0) * peak * peak / (fwhm * fwhm); };
  auto scale = [](double peak, double fwhm) { return fwhm * fwhm / (8.0 * std::log(2.0) * peak); };
  const double a1 = shape(p.peak_s, p.peak_fwhm_s), b1 = scale(p.peak_s, p.peak_fwhm_s);
  const double a2 = shape(p.undershoot_s, p.undershoot_fwhm_s), b2 = scale(p.undershoot_s, p.undershoot_fwhm_s);
  std::vector<double> h;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * tr_s;
    if (t > p.length_s + 1e-9) break;
    const double lobe1 = std::pow(t / p.peak_s, a1) * std::exp(-(t - p.peak_s) / b1);
    const double lobe2 = std::pow(t / p.undershoot_s, a2) * std::exp(-(t - p.undershoot_s) / b2);
    h.push_back(lobe1 - p.ratio * lobe2);
  }
  return h;
}

std::vector<int> align_labels(const std::vector<std::pair<double, double>>& segments, std::size_t n_trs, double tr_s,
                              const AlignMode& mode) {
  if (!(tr_s > 0.0)) throw Error("align_labels: TR must be positive");
  if (n_trs == 0) throw Error("align_labels: empty run");
  const double run_end = static_cast<double>(n_trs) * tr_s;
  auto segs = segments;
  for (const auto& [a, b] : segs) {
    if (!(a >= 0.0) || !(b > a)) throw Error("align_labels: invalid segment [" + format_double(a) + ", " + format_double(b) + ")");
    if (b > run_end + 1e-9)
      throw Error("align_labels: segment ends at " + format_double(b) + " s, beyond the run end " + format_double(run_end) + " s");
  }
  std::sort(segs.begin(), segs.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& s : segs) {
    if (!merged.empty() && s.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, s.second);
    else
      merged.push_back(s);
  }
  std::vector<int> base(n_trs, 0);
  for (std::size_t t = 0; t < n_trs; ++t) {
    const double lo = static_cast<double>(t) * tr_s, hi = lo + tr_s;
    double covered = 0.0;
    for (const auto& [a, b] : merged) covered += std::max(0.0, std::min(b, hi) - std::max(a, lo));
    base[t] = covered > 0.5 * tr_s ? 1 : 0;
  }
  if (mode.kind == AlignMode::Kind::Shift) {
    if (mode.shift < 0) throw Error("align_labels: negative shift");
    std::vector<int> out(n_trs, 0);
    for (std::size_t t = static_cast<std::size_t>(mode.shift); t < n_trs; ++t) out[t] = base[t - static_cast<std::size_t>(mode.shift)];
    return out;
  }
  const auto h = glover_hrf(tr_s, mode.hrf);
  std::vector<double> conv(n_trs, 0.0);
  for (std::size_t t = 0; t < n_trs; ++t)
    for (std::size_t j = 0; j < h.size() && j <= t; ++j) conv[t] += h[j] * base[t - j];
  std::vector<double> sorted = conv;
  std::sort(sorted.begin(), sorted.end());
  const double median = n_trs % 2 ? sorted[n_trs / 2] : 0.5 * (sorted[n_trs / 2 - 1] + sorted[n_trs / 2]);
  std::vector<int> out(n_trs);
  for (std::size_t t = 0; t < n_trs; ++t) out[t] = conv[t] > median ? 1 : 0;
  return out;
}

std::vector<Segment> read_segments(const std::string& path) {
  auto table = read_csv(path);
  const auto c_start = table.require("start_s");
  const auto c_end = table.require("end_s");
  const auto c_run = table.find("run_id");
  std::vector<Segment> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string ctx = path + ": row " + std::to_string(i + 1);
    Segment s;
    s.start_s = parse_double(row[c_start], ctx + " start_s");
    s.end_s = parse_double(row[c_end], ctx + " end_s");
    if (!(s.start_s >= 0.0) || !(s.end_s > s.start_s)) throw DataError(path, "row " + std::to_string(i + 1) + ": need 0 <= start_s < end_s");
    if (c_run) s.run_id = row[*c_run];
    out.push_back(std::move(s));
  }
  return out;
}

double balanced_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  for (int t : truth)
    if (t != 0 && t != 1) throw Error("balanced_accuracy: labels must be 0 or 1");
  return probe::uar(predicted, truth);
}

LinearSvc LinearSvc::fit(const Matrix& x, const std::vector<int>& labels, double c, std::uint64_t seed, int max_iter,
                         double tol) {
  const auto n = x.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw Error("svc: label count mismatch");
  if (!(c > 0.0)) throw Error("svc: C must be positive");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error("svc: labels must be 0 or 1");
    pos += l == 1;
  }
  if (pos == 0 || pos == labels.size()) throw Error("svc: single-class training set");
  const double neg = static_cast<double>(labels.size() - pos);
  const double cw[2] = {c * static_cast<double>(n) / (2.0 * neg), c * static_cast<double>(n) / (2.0 * static_cast<double>(pos))};

  const auto d = x.cols();
  Vector w = Vector::Zero(d);
  double b = 0.0;
  Vector alpha = Vector::Zero(n);
  Vector q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = x.row(i).squaredNorm() + 1.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  auto rng = make_rng(seed, {0x5fcu});
  for (int it = 0; it < max_iter; ++it) {
    shuffle_in_place(order, rng);
    double pg_max = -std::numeric_limits<double>::infinity(), pg_min = std::numeric_limits<double>::infinity();
    for (auto i : order) {
      const double y = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
      const double upper = cw[labels[static_cast<std::size_t>(i)]];
      const double grad = y * (x.row(i).dot(w) + b) - 1.0;
      double pg = grad;
      if (alpha(i) <= 0.0) pg = std::min(grad, 0.0);
      else if (alpha(i) >= upper) pg = std::max(grad, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha(i);
        alpha(i) = std::clamp(old - grad / q(i), 0.0, upper);
        const double step = (alpha(i) - old) * y;
        w += step * x.row(i).transpose();
        b += step;
      }
    }
    if (pg_max - pg_min < tol) break;
  }
  LinearSvc m;
  m.w_ = std::move(w);
  m.b_ = b;
  return m;
}

Vector LinearSvc::decision(const Matrix& x) const { return (x * w_).array() + b_; }

std::vector<int> LinearSvc::predict(const Matrix& x) const {
  Vector s = decision(x);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) > 0.0 ? 1 : 0;
  return out;
}

namespace {

struct Stacked {
  Matrix x;
  std::vector<int> y;
};

Stacked stack_runs(const std::vector<LabeledRun>& runs, const std::vector<std::size_t>& which) {
  std::vector<const Matrix*> parts;
  Stacked s;
  for (auto i : which) {
    parts.push_back(&runs[i].features);
    s.y.insert(s.y.end(), runs[i].labels.begin(), runs[i].labels.end());
  }
  s.x = stack(parts);
  return s;
}

double fit_and_score(const std::vector<LabeledRun>& runs, const std::vector<std::size_t>& train, std::size_t eval,
                     double c, std::uint64_t seed) {
  auto tr = stack_runs(runs, train);
  if (std::count(tr.y.begin(), tr.y.end(), 1) == 0 || std::count(tr.y.begin(), tr.y.end(), 0) == 0)
    throw Error("svc_decode: single-class training fold (evaluating run '" + runs[eval].run_id + "')");
  auto st = Standardizer::fit(tr.x);
  auto model = LinearSvc::fit(st.apply_rows(tr.x), tr.y, c, seed);
  return balanced_accuracy(model.predict(st.apply_rows(runs[eval].features)), runs[eval].labels);
}

}  // namespace

DecodeResult svc_decode(const std::vector<LabeledRun>& runs, std::size_t holdout, const std::vector<double>& c_grid,
                        std::uint64_t seed) {
  if (runs.size() < 3) throw Error("svc_decode: need at least three runs");
  if (holdout >= runs.size()) throw Error("svc_decode: holdout index out of range");
  if (c_grid.empty()) throw Error("svc_decode: empty C grid");
  for (const auto& r : runs) {
    if (static_cast<std::size_t>(r.features.rows()) != r.labels.size())
      throw Error("svc_decode: run '" + r.run_id + "' has " + std::to_string(r.features.rows()) + " samples but " +
                  std::to_string(r.labels.size()) + " labels");
    if (r.features.cols() != runs.front().features.cols())
      throw Error("svc_decode: run '" + r.run_id + "' has a different feature width");
  }
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (i != holdout) train.push_back(i);

  const std::size_t n_c = c_grid.size(), n_f = train.size();
  std::vector<double> fold(n_c * n_f);
  std::vector<std::exception_ptr> errors(n_c * n_f);
  const auto jobs = static_cast<std::ptrdiff_t>(n_c * n_f);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < jobs; ++j) {
    const auto ci = static_cast<std::size_t>(j) / n_f, fi = static_cast<std::size_t>(j) % n_f;
    try {
      std::vector<std::size_t> inner;
      for (auto i : train)
        if (i != train[fi]) inner.push_back(i);
      fold[static_cast<std::size_t>(j)] = fit_and_score(runs, inner, train[fi], c_grid[ci], seed);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  DecodeResult out;
  out.holdout_run = runs[holdout].run_id;
  std::size_t best = 0;
  for (std::size_t ci = 0; ci < n_c; ++ci) {
    double s = 0.0;
    for (std::size_t fi = 0; fi < n_f; ++fi) s += fold[ci * n_f + fi];
    out.inner_scores.push_back(s / static_cast<double>(n_f));
    const double cur = out.inner_scores.back(), top = out.inner_scores[best];
    if (cur > top || (cur == top && c_grid[ci] < c_grid[best])) best = ci;
  }
  out.c = c_grid[best];
  out.balanced_accuracy = fit_and_score(runs, train, holdout, out.c, seed);
  return out;
}

}  // namespace voiceprobe::encoding
