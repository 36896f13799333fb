// src/corpus.cpp

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

#include "voiceprobe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <exception>
#include <set>

#include <json.hpp>

#include "voiceprobe/csv.hpp"
#include "voiceprobe/log.hpp"
#include "voiceprobe/npy.hpp"

namespace voiceprobe {

Sex parse_sex(const std::string& text, const std::string& context) {
  if (text == "M" || text == "m") return Sex::M;
  if (text == "F" || text == "f") return Sex::F;
  throw DataError(context, "sex must be M or F, got '" + text + "'");
}

const char* to_string(Sex sex) { return sex == Sex::M ? "M" : "F"; }

std::optional<std::string> UtteranceMeta::condition(const std::string& key) const {
  auto it = conditions.find(key);
  if (it == conditions.end()) return std::nullopt;
  return it->second;
}

Manifest::Manifest(std::vector<UtteranceMeta> items, std::string source)
    : items_(std::move(items)), source_(std::move(source)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& u = items_[i];
    if (u.utterance_id.empty()) throw DataError(source_, "record " + std::to_string(i + 1) + ": empty utterance_id");
    if (!std::isfinite(u.duration_s) || u.duration_s < 0)
      throw DataError(source_, "utterance '" + u.utterance_id + "': duration_s must be finite and >= 0");
    if (!index_.emplace(u.utterance_id, i).second)
      throw DataError(source_, "duplicate utterance_id '" + u.utterance_id + "'");
  }
}

const UtteranceMeta* Manifest::find(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

const UtteranceMeta& Manifest::at(const std::string& utterance_id) const {
  const auto* u = find(utterance_id);
  if (!u) throw DataError(source_, "unknown utterance_id '" + utterance_id + "'");
  return *u;
}

std::optional<std::size_t> Manifest::index_of(const std::string& utterance_id) const {
  auto it = index_.find(utterance_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Manifest::condition_keys() const {
  std::set<std::string> keys;
  for (const auto& u : items_)
    for (const auto& [k, v] : u.conditions) keys.insert(k);
  return {keys.begin(), keys.end()};
}

std::vector<std::string> Manifest::speakers() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& u : items_)
    if (seen.insert(u.speaker_id).second) out.push_back(u.speaker_id);
  return out;
}

namespace {

const std::vector<std::string> kManifestColumns = {"utterance_id", "speaker_id", "sex",
                                                   "dataset",      "sentence_id", "duration_s",
                                                   "path"};

}  // namespace

Manifest parse_manifest_csv(const std::string& text, const std::string& source) {
  CsvTable t = parse_csv(text, source);
  std::vector<std::size_t> col;
  for (const auto& name : kManifestColumns) col.push_back(t.require(name));
  std::vector<std::pair<std::string, std::size_t>> cond_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const auto& h = t.header[i];
    if (h.rfind("cond:", 0) == 0) {
      cond_cols.emplace_back(h.substr(5), i);
    } else if (std::find(kManifestColumns.begin(), kManifestColumns.end(), h) == kManifestColumns.end()) {
      throw DataError(source, "unknown manifest column '" + h + "'");
    }
  }
  std::vector<UtteranceMeta> items;
  items.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    std::string ctx = source + ":" + std::to_string(r + 2);
    UtteranceMeta u;
    u.utterance_id = row[col[0]];
    u.speaker_id = row[col[1]];
    u.sex = parse_sex(row[col[2]], ctx);
    u.dataset = row[col[3]];
    u.sentence_id = row[col[4]];
    u.duration_s = parse_double(row[col[5]], ctx);
    u.path = row[col[6]];
    for (const auto& [key, idx] : cond_cols)
      if (!row[idx].empty()) u.conditions[key] = row[idx];
    items.push_back(std::move(u));
  }
  return Manifest(std::move(items), source);
}

Manifest parse_manifest_json(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw DataError(source, "manifest JSON must be an array");
  std::vector<UtteranceMeta> items;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& o = doc[i];
    std::string ctx = source + "[" + std::to_string(i) + "]";
    if (!o.is_object()) throw DataError(ctx, "record is not an object");
    auto str = [&](const char* key) -> std::string {
      if (!o.contains(key)) throw DataError(ctx, std::string("missing field '") + key + "'");
      const auto& v = o.at(key);
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number()) return v.dump();
      throw DataError(ctx, std::string("field '") + key + "' must be a string");
    };
    UtteranceMeta u;
    u.utterance_id = str("utterance_id");
    u.speaker_id = str("speaker_id");
    u.sex = parse_sex(str("sex"), ctx);
    u.dataset = str("dataset");
    u.sentence_id = o.contains("sentence_id") ? str("sentence_id") : "";
    if (!o.contains("duration_s") || !o.at("duration_s").is_number())
      throw DataError(ctx, "duration_s must be a number");
    u.duration_s = o.at("duration_s").get<double>();
    u.path = str("path");
    for (const auto& [key, value] : o.items()) {
      if (key == "conditions") {
        if (!value.is_object()) throw DataError(ctx, "conditions must be an object");
        for (const auto& [ck, cv] : value.items()) u.conditions[ck] = cv.is_string() ? cv.get<std::string>() : cv.dump();
      } else if (key.rfind("cond:", 0) == 0) {
        u.conditions[key.substr(5)] = value.is_string() ? value.get<std::string>() : value.dump();
      } else if (std::find(kManifestColumns.begin(), kManifestColumns.end(), key) == kManifestColumns.end()) {
        throw DataError(ctx, "unknown field '" + key + "'");
      }
    }
    items.push_back(std::move(u));
  }
  return Manifest(std::move(items), source);
}

Manifest read_manifest(const std::string& path) {
  std::string text = read_text_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return parse_manifest_json(text, path);
  return parse_manifest_csv(text, path);
}

std::string format_manifest_csv(const Manifest& manifest) {
  auto keys = manifest.condition_keys();
  std::string out = "utterance_id,speaker_id,sex,dataset,sentence_id,duration_s,path";
  for (const auto& k : keys) out += ",cond:" + csv_escape(k);
  out += '\n';
  for (const auto& u : manifest) {
    out += csv_escape(u.utterance_id) + ',' + csv_escape(u.speaker_id) + ',' + to_string(u.sex) + ',' +
           csv_escape(u.dataset) + ',' + csv_escape(u.sentence_id) + ',' + format_double(u.duration_s) +
           ',' + csv_escape(u.path);
    for (const auto& k : keys) out += ',' + csv_escape(u.condition(k).value_or(""));
    out += '\n';
  }
  return out;
}

EmbeddingMatrix load_embedding(const std::string& path, std::string model_tag, std::string layer_tag) {
  return EmbeddingMatrix{read_npy(path), std::move(model_tag), std::move(layer_tag)};
}

std::string embedding_path(const std::string& root, const std::string& layer, const UtteranceMeta& meta) {
  std::filesystem::path p(root);
  if (!layer.empty()) p /= layer;
  p /= meta.path;
  return p.string();
}

Vector pool(const Matrix& frames) {
  const auto d = frames.cols();
  if (frames.rows() < 1 || d < 1) throw Error("pool: empty frame matrix");
  Vector out(2 * d);
  out.head(d) = frames.colwise().mean().transpose();
  out.tail(d) = frames.colwise().maxCoeff().transpose();
  return out;
}

Standardizer Standardizer::fit(const Matrix& samples) {
  if (samples.rows() < 2) throw Error("Standardizer::fit needs at least two vectors");
  Standardizer s;
  const double n = static_cast<double>(samples.rows());
  s.mean_ = samples.colwise().mean().transpose();
  s.std_.resize(samples.cols());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    double ss = (samples.col(j).array() - s.mean_(j)).square().sum();
    s.std_(j) = std::max(std::sqrt(ss / n), kStdFloor);
  }
  return s;
}

Standardizer Standardizer::from_stats(Vector mean, Vector stddev) {
  if (mean.size() != stddev.size() || mean.size() == 0) throw Error("Standardizer::from_stats: shape mismatch");
  if ((stddev.array() <= 0.0).any() || !mean.allFinite() || !stddev.allFinite())
    throw Error("Standardizer::from_stats: invalid statistics");
  Standardizer s;
  s.mean_ = std::move(mean);
  s.std_ = std::move(stddev);
  return s;
}

Vector Standardizer::apply(const Vector& v) const {
  if (v.size() != mean_.size()) throw Error("Standardizer::apply: dimension mismatch");
  return ((v - mean_).array() / std_.array()).matrix();
}

Matrix Standardizer::apply_rows(const Matrix& samples) const {
  if (samples.cols() != mean_.size()) throw Error("Standardizer::apply_rows: dimension mismatch");
  Matrix out = samples.rowwise() - mean_.transpose();
  out.array().rowwise() /= std_.transpose().array();
  return out;
}

Criterion Criterion::parse(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + text + "'");
  return Criterion{text.substr(0, eq), text.substr(eq + 1)};
}

namespace {

std::string strip_condition_prefix(const std::string& field) {
  if (field.rfind("cond:", 0) == 0) return field.substr(5);
  if (field.rfind("conditions.", 0) == 0) return field.substr(11);
  return field;
}

bool is_core_field(const std::string& f) {
  return f == "utterance_id" || f == "speaker_id" || f == "sex" || f == "dataset" || f == "sentence_id";
}

bool matches(const UtteranceMeta& u, const Criterion& c) {
  if (c.field == "utterance_id") return u.utterance_id == c.value;
  if (c.field == "speaker_id") return u.speaker_id == c.value;
  if (c.field == "sex") return to_string(u.sex) == c.value;
  if (c.field == "dataset") return u.dataset == c.value;
  if (c.field == "sentence_id") return u.sentence_id == c.value;
  auto v = u.condition(strip_condition_prefix(c.field));
  return v && *v == c.value;
}

}  // namespace

Manifest filter(const Manifest& manifest, const std::vector<Criterion>& criteria) {
  auto keys = manifest.condition_keys();
  for (const auto& c : criteria) {
    if (is_core_field(c.field)) continue;
    auto key = strip_condition_prefix(c.field);
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw Error("filter: unknown condition key '" + key + "'");
  }
  return filter(manifest, [&](const UtteranceMeta& u) {
    return std::all_of(criteria.begin(), criteria.end(), [&](const Criterion& c) { return matches(u, c); });
  });
}

Manifest filter(const Manifest& manifest, const std::function<bool(const UtteranceMeta&)>& keep) {
  std::vector<UtteranceMeta> out;
  for (const auto& u : manifest)
    if (keep(u)) out.push_back(u);
  return Manifest(std::move(out), manifest.source());
}

const char* to_string(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Val: return "val";
    case Partition::Test: return "test";
  }
  return "?";
}

Partition parse_partition(const std::string& text, const std::string& context) {
  if (text == "train") return Partition::Train;
  if (text == "val" || text == "valid" || text == "validation") return Partition::Val;
  if (text == "test") return Partition::Test;
  throw DataError(context, "unknown partition '" + text + "'");
}

std::vector<std::string> SplitSpec::ids(const Manifest& manifest, Partition p) const {
  std::vector<std::string> out;
  for (const auto& u : manifest) {
    auto it = assignment.find(u.utterance_id);
    if (it != assignment.end() && it->second == p) out.push_back(u.utterance_id);
  }
  return out;
}

std::size_t SplitSpec::count(Partition p) const {
  return static_cast<std::size_t>(
      std::count_if(assignment.begin(), assignment.end(), [p](const auto& kv) { return kv.second == p; }));
}

SplitSpec split_by_ratio(const Manifest& manifest, double train_ratio, std::uint64_t seed, double val_ratio) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw Error("split: train ratio must be in (0, 1)");
  if (!(val_ratio >= 0.0 && val_ratio < train_ratio)) throw Error("split: val ratio must be in [0, train ratio)");
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& u : manifest) by_speaker[u.speaker_id].push_back(u.utterance_id);

  SplitSpec spec;
  auto rng = make_rng(seed, {0x5e11u});
  for (auto& [speaker, ids] : by_speaker) {
    const std::size_t n = ids.size();
    shuffle_in_place(ids, rng);
    if (n == 1) {
      warn("split: speaker '" + speaker + "' has a single utterance; assigned to train");
      spec.assignment[ids[0]] = Partition::Train;
      continue;
    }
    auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    auto n_val = static_cast<std::size_t>(std::llround(val_ratio * static_cast<double>(n)));
    n_val = std::min(n_val, n_train - 1);
    for (std::size_t i = 0; i < n; ++i) {
      Partition p = i < n_train - n_val ? Partition::Train : (i < n_train ? Partition::Val : Partition::Test);
      spec.assignment[ids[i]] = p;
    }
  }
  return spec;
}

SplitSpec split_explicit(const Manifest& manifest, const std::vector<std::string>& train,
                         const std::vector<std::string>& val, const std::vector<std::string>& test) {
  SplitSpec spec;
  auto add = [&](const std::vector<std::string>& ids, Partition p) {
    for (const auto& id : ids) {
      if (!manifest.find(id)) throw DataError(manifest.source(), "split references unknown utterance '" + id + "'");
      if (!spec.assignment.emplace(id, p).second)
        throw DataError(manifest.source(), "utterance '" + id + "' assigned to more than one partition");
    }
  };
  add(train, Partition::Train);
  add(val, Partition::Val);
  add(test, Partition::Test);
  return spec;
}

SplitSpec read_split(const std::string& path, const Manifest& manifest) {
  CsvTable t = read_csv(path);
  auto id_col = t.require("utterance_id");
  auto part_col = t.require("partition");
  std::vector<std::string> lists[3];
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Partition p = parse_partition(t.rows[r][part_col], path + ":" + std::to_string(r + 2));
    lists[static_cast<int>(p)].push_back(t.rows[r][id_col]);
  }
  try {
    return split_explicit(manifest, lists[0], lists[1], lists[2]);
  } catch (const DataError& e) {
    throw DataError(path, e.what());
  }
}

Manifest balanced_speaker_sample(const Manifest& manifest, std::size_t n_speakers, std::uint64_t seed) {
  std::map<std::string, Sex> sex_of;
  for (const auto& u : manifest) sex_of.emplace(u.speaker_id, u.sex);
  std::vector<std::string> male, female;
  for (const auto& [spk, sex] : sex_of) (sex == Sex::M ? male : female).push_back(spk);
  const std::size_t want_f = (n_speakers + 1) / 2;
  const std::size_t want_m = n_speakers / 2;
  if (female.size() < want_f || male.size() < want_m)
    throw Error("balanced_speaker_sample: need " + std::to_string(want_f) + " F and " + std::to_string(want_m) +
                " M speakers, have " + std::to_string(female.size()) + " F and " + std::to_string(male.size()) +
                " M");
  auto rng = make_rng(seed, {0xba1au});
  shuffle_in_place(female, rng);
  shuffle_in_place(male, rng);
  std::set<std::string> keep(female.begin(), female.begin() + static_cast<std::ptrdiff_t>(want_f));
  keep.insert(male.begin(), male.begin() + static_cast<std::ptrdiff_t>(want_m));
  return filter(manifest, [&](const UtteranceMeta& u) { return keep.count(u.speaker_id) > 0; });
}

std::optional<std::size_t> PooledSet::row_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return i;
  return std::nullopt;
}

Matrix PooledSet::select(const std::vector<std::string>& wanted) const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  Matrix out(static_cast<Eigen::Index>(wanted.size()), rows.cols());
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    auto it = index.find(wanted[i]);
    if (it == index.end()) throw Error("no pooled vector for utterance '" + wanted[i] + "'");
    out.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

std::vector<Matrix> load_frames(const Manifest& manifest, const std::string& root, const std::string& layer) {
  const auto n = static_cast<std::ptrdiff_t>(manifest.size());
  std::vector<Matrix> frames(manifest.size());
  std::vector<std::exception_ptr> errors(manifest.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      frames[i] = read_npy(embedding_path(root, layer, manifest[i]));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].cols() != frames[0].cols())
      throw DataError(embedding_path(root, layer, manifest[i]),
                      "feature dimension " + std::to_string(frames[i].cols()) + " differs from " +
                          std::to_string(frames[0].cols()));
  return frames;
}

PooledSet load_pooled(const Manifest& manifest, const std::string& root, const std::string& layer) {
  auto frames = load_frames(manifest, root, layer);
  PooledSet set;
  if (frames.empty()) return set;
  set.rows.resize(static_cast<Eigen::Index>(frames.size()), 2 * frames[0].cols());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    set.ids.push_back(manifest[i].utterance_id);
    set.rows.row(static_cast<Eigen::Index>(i)) = pool(frames[i]).transpose();
  }
  return set;
}

}  // namespace voiceprobe
