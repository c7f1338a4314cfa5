// Copyright 2026 The TrustAudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trustaudit/aggregation.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace trustaudit {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Strips a trailing "_<digits>" seed or k suffix.
std::string_view StripNumericSuffix(std::string_view s) {
  const auto pos = s.rfind('_');
  if (pos == std::string_view::npos || pos + 1 == s.size()) return s;
  for (size_t i = pos + 1; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return s;
  }
  return s.substr(0, pos);
}

bool InScope(Split split, PoolScope scope) {
  if (split == Split::kNone) return true;
  return scope == PoolScope::kFinal ? split == Split::kTest : split == Split::kVal;
}

bool Aggregated(const MetricRecord& r) {
  const auto info = ClassifyMetric(r.metric);
  return !info || info->aggregated;
}

}  // namespace

std::string_view DimensionName(Dimension d) {
  switch (d) {
    case Dimension::kFidelity: return "fidelity";
    case Dimension::kPrivacy: return "privacy";
    case Dimension::kUtility: return "utility";
    case Dimension::kFairness: return "fairness";
    case Dimension::kRobustness: return "robustness";
  }
  return "?";
}

Dimension ParseDimension(std::string_view name) {
  const auto l = Lower(name);
  for (auto d : kAllDimensions) {
    if (l == DimensionName(d)) return d;
  }
  throw ConfigError(fmt::format("unknown trust dimension '{}'", name));
}

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kNone: return "none";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  if (name == "none") return Split::kNone;
  throw ConfigError(fmt::format("unknown split '{}'", name));
}

std::optional<MetricInfo> ClassifyMetric(std::string_view name) {
  using D = Dimension;
  if (StartsWith(name, "ChiSq_")) return MetricInfo{D::kFidelity, -1, true};
  if (name == "MutualInformation") return MetricInfo{D::kFidelity, -1, true};
  if (name == "knnPrecisionRecallprecision" || name == "knnPrecisionRecallrecall") {
    return MetricInfo{D::kFidelity, 1, true};
  }
  if (name == "FID") return MetricInfo{D::kFidelity, -1, true};
  if (name == "MMD_snr") return MetricInfo{D::kFidelity, -1, true};
  if (name == "MMD_train_snr") return MetricInfo{D::kFidelity, -1, false};
  if (name == "MMD_p_value") return MetricInfo{D::kFidelity, 1, true};
  if (name == "ReplicatedRows") return MetricInfo{D::kPrivacy, -1, true};
  if (StartsWith(name, "NNRawData_") || StartsWith(name, "NNEmbeddings_")) {
    const auto stat = StripNumericSuffix(name.substr(name.find('_') + 1));
    if (stat == "Mean" || stat == "Median") return MetricInfo{D::kPrivacy, 1, true};
    if (stat == "Std" || stat == "Mode") return MetricInfo{D::kPrivacy, 1, false};
    return std::nullopt;
  }
  if (StartsWith(name, "CC_")) {
    const auto rest = name.substr(3);
    const auto sep = rest.find('_');
    if (sep == std::string_view::npos) return std::nullopt;
    const auto score = StripNumericSuffix(rest.substr(sep + 1));
    auto is_score = [](std::string_view s) {
      return s == "accuracy" || s == "precision" || s == "recall" || s == "f1_score";
    };
    if (score == "EOD" || score == "AOD" || score == "EqOdds") {
      return MetricInfo{D::kFairness, -1, true};
    }
    if (StartsWith(score, "adv_") && is_score(score.substr(4))) {
      return MetricInfo{D::kRobustness, 1, true};
    }
    if (StartsWith(score, "delta_") && is_score(score.substr(6))) {
      return MetricInfo{D::kRobustness, -1, true};
    }
    if (is_score(score)) return MetricInfo{D::kUtility, 1, true};
  }
  return std::nullopt;
}

nlohmann::json RecordToJson(const MetricRecord& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["dimension"] = DimensionName(r.dimension);
  j["polarity"] = r.polarity;
  if (r.value && std::isfinite(*r.value)) {
    j["value"] = *r.value;
  } else {
    j["value"] = nullptr;
  }
  j["context"] = {{"dataset_id", r.context.dataset_id},
                  {"model_id", r.context.model_id},
                  {"fold_id", r.context.fold_id},
                  {"checkpoint_id", r.context.checkpoint_id},
                  {"classifier_seed", r.context.classifier_seed}};
  j["split"] = SplitName(r.split);
  return j;
}

MetricRecord RecordFromJson(const nlohmann::json& j) {
  try {
    MetricRecord r;
    r.metric = j.at("metric").get<std::string>();
    r.dimension = ParseDimension(j.at("dimension").get<std::string>());
    r.polarity = j.at("polarity").get<int>();
    if (r.polarity != 1 && r.polarity != -1) {
      throw ConfigError(fmt::format("metric {}: polarity must be +1 or -1", r.metric));
    }
    const auto& v = j.at("value");
    if (!v.is_null()) {
      r.value = v.get<double>();
      if (!std::isfinite(*r.value)) r.value.reset();
    }
    const auto& c = j.at("context");
    r.context.dataset_id = c.value("dataset_id", std::string());
    r.context.model_id = c.at("model_id").get<std::string>();
    r.context.fold_id = c.value("fold_id", 0);
    r.context.checkpoint_id = c.value("checkpoint_id", 0);
    r.context.classifier_seed = c.value("classifier_seed", 0);
    r.split = ParseSplit(j.value("split", std::string("none")));
    if (const auto info = ClassifyMetric(r.metric)) {
      if (info->dimension != r.dimension || info->polarity != r.polarity) {
        throw ConfigError(fmt::format("metric {} is registered as {} with polarity {:+d}", r.metric,
                                      DimensionName(info->dimension), info->polarity));
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad metric record: {}", e.what()));
  }
}

std::vector<MetricRecord> ReadRecordsJsonl(std::istream& in) {
  std::vector<MetricRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(fmt::format("records line {}: {}", line_no, e.what()));
    }
    out.push_back(RecordFromJson(j));
  }
  return out;
}

std::vector<MetricRecord> ReadRecordsJsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open records file {}", path.string()));
  return ReadRecordsJsonl(in);
}

void WriteRecordsJsonl(std::span<const MetricRecord> records, std::ostream& out) {
  for (const auto& r : records) out << RecordToJson(r).dump() << '\n';
}

std::optional<double> AlignPolarity(const MetricRecord& r) {
  if (!r.value) return std::nullopt;
  return r.polarity * *r.value;
}

double EcdfEval(std::span<const double> sorted_pool, double x) {
  if (sorted_pool.empty()) throw ConfigError("empty ECDF pool");
  const double n = static_cast<double>(sorted_pool.size());
  const auto count = std::upper_bound(sorted_pool.begin(), sorted_pool.end(), x) - sorted_pool.begin();
  return std::max(static_cast<double>(count) / n, 1.0 / (2.0 * n));
}

void MetricPool::Add(const std::string& metric, double aligned) {
  if (frozen_) throw ConfigError("metric pool is frozen");
  if (!std::isfinite(aligned)) throw ConfigError(fmt::format("non-finite value for {}", metric));
  values_[metric].push_back(aligned);
}

void MetricPool::Freeze() {
  for (auto& [_, v] : values_) std::sort(v.begin(), v.end());
  frozen_ = true;
}

double MetricPool::Evaluate(const std::string& metric, double aligned) const {
  if (!frozen_) throw ConfigError("metric pool used before freezing");
  const auto it = values_.find(metric);
  if (it == values_.end()) throw ConfigError(fmt::format("metric {} has no pool", metric));
  return EcdfEval(it->second, aligned);
}

double DimensionIndex(std::span<const double> u, std::span<const double> beta) {
  if (u.empty()) throw ConfigError("dimension index needs at least one metric");
  if (!beta.empty() && beta.size() != u.size()) throw ConfigError("beta and u differ in length");
  double total = 0.0;
  for (size_t i = 0; i < u.size(); ++i) total += beta.empty() ? 1.0 : beta[i];
  if (total <= 0.0) throw ConfigError("metric weights sum to zero");
  double s = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0 && u[i] <= 1.0)) throw ConfigError("normalized score outside (0,1]");
    const double b = beta.empty() ? 1.0 : beta[i];
    if (b < 0) throw ConfigError("negative metric weight");
    s += b / total * std::log(u[i]);
  }
  return std::exp(s);
}

// ---------------------------------------------------------------------------
// Profiles

std::string TrustProfile::RawNotation() const {
  return fmt::format("({},{},{},{},{})/{}", raw[0], raw[1], raw[2], raw[3], raw[4], raw_total);
}

TrustProfile TrustProfile::FromRaw(std::string name, const std::array<double, kNumDimensions>& raw) {
  TrustProfile p;
  p.name = std::move(name);
  p.raw = raw;
  for (double w : raw) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError(fmt::format("profile {}: weights must be finite and >= 0", p.name));
    }
    p.raw_total += w;
  }
  if (p.raw_total <= 0) throw ConfigError(fmt::format("profile {}: weights sum to zero", p.name));
  for (int i = 0; i < kNumDimensions; ++i) p.weights[i] = raw[i] / p.raw_total;
  return p;
}

TrustProfile TrustProfile::Parse(std::string name, const nlohmann::json& spec) {
  std::array<double, kNumDimensions> raw{};
  if (spec.is_array()) {
    if (spec.size() != kNumDimensions) {
      throw ConfigError(fmt::format("profile {}: expected five weights", name));
    }
    for (int i = 0; i < kNumDimensions; ++i) {
      if (!spec[i].is_number()) throw ConfigError(fmt::format("profile {}: non-numeric weight", name));
      raw[i] = spec[i].get<double>();
    }
    return FromRaw(std::move(name), raw);
  }
  if (!spec.is_string()) throw ConfigError(fmt::format("profile {}: expected array or string", name));
  std::string s;
  for (char c : spec.get<std::string>()) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  const auto open = s.find('('), close = s.find(')');
  if (open != 0 || close == std::string::npos) {
    throw ConfigError(fmt::format("profile {}: cannot parse '{}'", name, s));
  }
  std::stringstream body(s.substr(1, close - 1));
  std::string item;
  int i = 0;
  try {
    while (std::getline(body, item, ',')) {
      if (i >= kNumDimensions) throw ConfigError("");
      size_t used = 0;
      raw[i++] = std::stod(item, &used);
      if (used != item.size()) throw ConfigError("");
    }
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("profile {}: cannot parse '{}'", name, s));
  }
  if (i != kNumDimensions) throw ConfigError(fmt::format("profile {}: expected five weights", name));
  auto p = FromRaw(std::move(name), raw);
  const auto rest = s.substr(close + 1);
  if (!rest.empty()) {
    double denom = 0.0;
    size_t used = 0;
    try {
      if (rest[0] != '/') throw ConfigError("");
      denom = std::stod(rest.substr(1), &used);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("profile {}: cannot parse '{}'", p.name, s));
    }
    if (used != rest.size() - 1 || std::abs(denom - p.raw_total) > 1e-9 * p.raw_total) {
      throw ConfigError(
          fmt::format("profile {}: denominator {} differs from weight total {}", p.name, denom, p.raw_total));
    }
  }
  return p;
}

std::vector<TrustProfile> PresetProfiles() {
  return {
      TrustProfile::FromRaw("all", {100, 100, 100, 100, 100}),
      TrustProfile::FromRaw("e(PU)", {50, 100, 100, 50, 50}),
      TrustProfile::FromRaw("e(PUF)", {50, 100, 100, 100, 50}),
      TrustProfile::FromRaw("U", {0, 0, 100, 0, 0}),
      TrustProfile::FromRaw("PU", {0, 100, 100, 0, 0}),
      TrustProfile::FromRaw("UF", {0, 0, 100, 100, 0}),
      TrustProfile::FromRaw("e(UF)r(R)", {50, 50, 100, 100, 0}),
      TrustProfile::FromRaw("UFR", {0, 0, 100, 100, 100}),
      TrustProfile::FromRaw("UR", {0, 0, 100, 0, 100}),
      TrustProfile::FromRaw("PUR", {0, 100, 100, 0, 100}),
  };
}

TrustProfile PresetProfile(std::string_view name) {
  for (auto& p : PresetProfiles()) {
    if (p.name == name) return p;
  }
  throw ConfigError(fmt::format("unknown profile '{}'", name));
}

std::vector<TrustProfile> ProfilesFromJson(const nlohmann::ordered_json& j) {
  std::vector<TrustProfile> out;
  if (j.is_array()) {
    // A list of preset names.
    for (const auto& name : j) {
      if (!name.is_string()) throw ConfigError("profile list must hold preset names");
      out.push_back(PresetProfile(name.get<std::string>()));
    }
  } else if (j.is_object()) {
    for (const auto& [name, spec] : j.items()) {
      out.push_back(TrustProfile::Parse(name, nlohmann::json::parse(spec.dump())));
    }
  } else {
    throw ConfigError("profiles must be an object or a list of preset names");
  }
  if (out.empty()) throw ConfigError("no trust profiles given");
  std::set<std::string> names;
  for (const auto& p : out) {
    if (!names.insert(p.name).second) throw ConfigError(fmt::format("duplicate profile {}", p.name));
  }
  return out;
}

std::vector<TrustProfile> LoadProfiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open profiles file {}", path.string()));
  try {
    return ProfilesFromJson(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("profiles file {}: {}", path.string(), e.what()));
  }
}

double TrustworthinessIndex(const DimensionValues& pi, const TrustProfile& profile) {
  double s = 0.0;
  for (int t = 0; t < kNumDimensions; ++t) {
    const double w = profile.weights[t];
    if (w == 0.0) continue;
    if (!pi[t]) {
      throw ConfigError(fmt::format("profile {} needs the {} index, which has no metrics",
                                    profile.name, DimensionName(static_cast<Dimension>(t))));
    }
    s += w * std::log(*pi[t]);
  }
  return std::exp(s);
}

GeoMeanDev GeoMeanDeviation(std::span<const double> values) {
  if (values.empty()) throw ConfigError("geometric mean of an empty set");
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw ConfigError("geometric mean needs positive values");
    log_sum += std::log(v);
  }
  const double n = static_cast<double>(values.size());
  GeoMeanDev out;
  out.mean = std::exp(log_sum / n);
  for (double v : values) out.deviation += (v - out.mean) * (v - out.mean);
  out.deviation /= n;
  return out;
}

std::vector<RankedItem> RankWithUncertainty(std::span<const RankInput> items, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  std::vector<RankedItem> out;
  for (const auto& it : items) {
    if (!(it.tau_mean > 0.0)) throw ConfigError(fmt::format("{}: tau must be positive", it.model_id));
    RankedItem r{it.model_id, it.tau_mean, it.tau_deviation, std::log(it.tau_mean)};
    if (alpha > 0.0) r.score -= alpha * std::log(std::max(it.tau_deviation, kDeviationFloor));
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tau_mean != b.tau_mean) return a.tau_mean > b.tau_mean;
    return a.model_id < b.model_id;
  });
  return out;
}

int SelectCheckpoint(std::span<const double> validation_tau) {
  if (validation_tau.empty()) throw ConfigError("no checkpoints to select from");
  int best = 0;
  for (size_t i = 1; i < validation_tau.size(); ++i) {
    if (validation_tau[i] > validation_tau[best]) best = static_cast<int>(i);
  }
  return best;
}

double OverlapAtK(std::span<const std::string> a, std::span<const std::string> b, int k) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (static_cast<size_t>(k) > a.size() || static_cast<size_t>(k) > b.size()) {
    throw ConfigError("k exceeds a ranked list");
  }
  const std::set<std::string> sa(a.begin(), a.begin() + k), sb(b.begin(), b.begin() + k);
  if (sa.size() != static_cast<size_t>(k) || sb.size() != static_cast<size_t>(k)) {
    throw ConfigError("ranked lists must hold distinct ids");
  }
  std::vector<std::string> inter;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  const double uni = static_cast<double>(sa.size() + sb.size() - inter.size());
  return static_cast<double>(inter.size()) / uni;
}

// ---------------------------------------------------------------------------
// Record pipeline

std::vector<ItemKey> DistinctItems(std::span<const MetricRecord> records) {
  std::set<ItemKey> keys;
  for (const auto& r : records) {
    keys.insert({r.context.model_id, r.context.fold_id, r.context.checkpoint_id});
  }
  return {keys.begin(), keys.end()};
}

std::vector<ItemIndices> ComputeItemIndices(std::span<const MetricRecord> records,
                                            std::span<const ItemKey> items, PoolScope scope) {
  std::map<ItemKey, size_t> slot;
  std::vector<ItemIndices> out;
  {
    std::set<ItemKey> sorted(items.begin(), items.end());
    for (const auto& k : sorted) {
      slot[k] = out.size();
      out.push_back({k, {}, {}, {}});
    }
  }
  // (item, metric) -> record, restricted to the scope.
  std::vector<std::map<std::string, const MetricRecord*>> by_item(out.size());
  MetricPool pool;
  for (const auto& r : records) {
    const auto it = slot.find({r.context.model_id, r.context.fold_id, r.context.checkpoint_id});
    if (it == slot.end() || !InScope(r.split, scope) || !Aggregated(r)) continue;
    auto& item = out[it->second];
    if (item.dataset_id.empty()) item.dataset_id = r.context.dataset_id;
    if (!by_item[it->second].emplace(r.metric, &r).second) {
      throw ConfigError(fmt::format("duplicate record {} for model {} fold {} checkpoint {}",
                                    r.metric, r.context.model_id, r.context.fold_id,
                                    r.context.checkpoint_id));
    }
    if (const auto v = AlignPolarity(r)) pool.Add(r.metric, *v);
  }
  pool.Freeze();
  for (size_t i = 0; i < out.size(); ++i) {
    std::array<std::vector<double>, kNumDimensions> u;
    for (const auto& [metric, rec] : by_item[i]) {
      const auto v = AlignPolarity(*rec);
      if (!v) continue;
      const double ui = pool.Evaluate(metric, *v);
      out[i].u[metric] = ui;
      u[static_cast<int>(rec->dimension)].push_back(ui);
    }
    for (int t = 0; t < kNumDimensions; ++t) {
      if (!u[t].empty()) out[i].pi[t] = DimensionIndex(u[t]);
    }
  }
  return out;
}

std::vector<CheckpointChoice> SelectCheckpoints(std::span<const MetricRecord> records,
                                                const TrustProfile& profile) {
  std::map<std::string, std::vector<ItemKey>> by_model;
  for (auto& k : DistinctItems(records)) by_model[k.model_id].push_back(k);
  std::vector<CheckpointChoice> out;
  for (const auto& [model, keys] : by_model) {
    const auto indices = ComputeItemIndices(records, keys, PoolScope::kSelection);
    // Items arrive sorted by (fold, checkpoint) within a model.
    size_t i = 0;
    while (i < indices.size()) {
      const int fold = indices[i].key.fold_id;
      std::vector<double> tau;
      std::vector<int> ckpt;
      for (; i < indices.size() && indices[i].key.fold_id == fold; ++i) {
        tau.push_back(TrustworthinessIndex(indices[i].pi, profile));
        ckpt.push_back(indices[i].key.checkpoint_id);
      }
      const int best = SelectCheckpoint(tau);
      out.push_back({model, fold, ckpt[best], tau[best]});
    }
  }
  return out;
}

std::vector<ProfileRanking> RankRecords(std::span<const MetricRecord> records,
                                        std::span<const TrustProfile> profiles, double alpha) {
  if (profiles.empty()) throw ConfigError("no trust profiles given");
  const auto all = DistinctItems(records);
  if (all.empty()) throw ConfigError("no metric records");
  bool multi_checkpoint = false;
  for (size_t i = 1; i < all.size(); ++i) {
    if (all[i].model_id == all[i - 1].model_id && all[i].fold_id == all[i - 1].fold_id) {
      multi_checkpoint = true;
    }
  }

  std::vector<ItemIndices> shared;
  if (!multi_checkpoint) shared = ComputeItemIndices(records, all, PoolScope::kFinal);

  std::vector<ProfileRanking> out;
  for (const auto& profile : profiles) {
    std::vector<ItemIndices> chosen;
    if (multi_checkpoint) {
      std::vector<ItemKey> keys;
      for (const auto& c : SelectCheckpoints(records, profile)) {
        keys.push_back({c.model_id, c.fold_id, c.checkpoint_id});
      }
      chosen = ComputeItemIndices(records, keys, PoolScope::kFinal);
    }
    const auto& items = multi_checkpoint ? chosen : shared;

    std::map<std::string, RankedModel> models;
    for (const auto& item : items) {
      auto& m = models[item.key.model_id];
      m.model_id = item.key.model_id;
      if (m.dataset_id.empty()) m.dataset_id = item.dataset_id;
      m.folds.push_back(item.key.fold_id);
      m.checkpoints.push_back(item.key.checkpoint_id);
      try {
        m.tau_per_fold.push_back(TrustworthinessIndex(item.pi, profile));
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("model {} fold {}: {}", m.model_id, item.key.fold_id, e.what()));
      }
      for (int t = 0; t < kNumDimensions; ++t) {
        if (!item.pi[t]) continue;
        if (!m.dimensions[t]) m.dimensions[t].emplace();
        m.dimensions[t]->per_fold.push_back(*item.pi[t]);
      }
      for (const auto& [metric, u] : item.u) m.u_per_fold[metric].push_back(u);
    }
    std::vector<RankInput> inputs;
    for (auto& [id, m] : models) {
      for (auto& d : m.dimensions) {
        if (!d) continue;
        const auto g = GeoMeanDeviation(d->per_fold);
        d->mean = g.mean;
        d->deviation = g.deviation;
      }
      const auto g = GeoMeanDeviation(m.tau_per_fold);
      m.tau_mean = g.mean;
      m.tau_deviation = g.deviation;
      inputs.push_back({id, m.tau_mean, m.tau_deviation});
    }
    ProfileRanking pr;
    pr.profile = profile;
    for (const auto& r : RankWithUncertainty(inputs, alpha)) {
      auto m = std::move(models.at(r.model_id));
      m.score = r.score;
      pr.entries.push_back(std::move(m));
    }
    out.push_back(std::move(pr));
  }
  return out;
}

}  // namespace trustaudit
