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

#include "trustaudit/report.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <omp.h>

#include "trustaudit/fidelity.h"
#include "trustaudit/kernels.h"
#include "trustaudit/privacy.h"

namespace trustaudit::report {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Seed streams.
enum : uint64_t {
  kStreamMmdSplit = 1,
  kStreamRff,
  kStreamBandwidth,
  kStreamPermutation,
  kStreamMlp,
  kStreamAttack,
  kStreamGenerator,
  kStreamFold,
};

uint64_t Fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Runs `body` and re-raises any failure with the stage name in front.
template <class F>
auto Stage(std::string_view name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", name, e.what()));
  } catch (const RuntimeFailure& e) {
    throw RuntimeFailure(fmt::format("{}: {}", name, e.what()));
  } catch (const std::exception& e) {
    throw RuntimeFailure(fmt::format("{}: {}", name, e.what()));
  }
}

// Parallel loop that rethrows the failure of the lowest failing index.
template <class F>
void ParallelFor(size_t n, int workers, F&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void CheckKeys(const json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", section));
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError(fmt::format("unknown key '{}' in config section '{}'", k, section));
    }
  }
}

template <class T>
T Get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
  }
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void ParseClassifierOverrides(const json& j, downstream::ClassifierSpec* spec, std::string_view name) {
  if (spec->kind == downstream::ClassifierKind::kMlp) {
    CheckKeys(j, name, {"learning_rate", "hidden", "batch_size", "max_epochs", "patience", "bn_momentum"});
    spec->learning_rate = Get(j, "learning_rate", spec->learning_rate);
    spec->hidden = Get(j, "hidden", spec->hidden);
    spec->batch_size = Get(j, "batch_size", spec->batch_size);
    spec->max_epochs = Get(j, "max_epochs", spec->max_epochs);
    spec->patience = Get(j, "patience", spec->patience);
    spec->bn_momentum = Get(j, "bn_momentum", spec->bn_momentum);
  } else {
    CheckKeys(j, name, {"l2", "max_iterations", "gradient_tolerance", "selected_features"});
    spec->l2 = Get(j, "l2", spec->l2);
    spec->max_iterations = Get(j, "max_iterations", spec->max_iterations);
    spec->gradient_tolerance = Get(j, "gradient_tolerance", spec->gradient_tolerance);
    spec->selected_features = Get(j, "selected_features", spec->selected_features);
  }
  spec->Validate();
}

MetricsConfig ParseMetrics(const json& j) {
  MetricsConfig m;
  CheckKeys(j, "metrics",
            {"bins", "rff_features", "bandwidth_subsample", "mmd_permutations", "precision_recall_k",
             "privacy_k", "classifiers", "mlp_seeds", "attack_classifiers", "attack", "mlp", "lr",
             "dimensions"});
  m.bins = Get(j, "bins", m.bins);
  m.rff_features = Get(j, "rff_features", m.rff_features);
  m.bandwidth_subsample = Get(j, "bandwidth_subsample", m.bandwidth_subsample);
  m.mmd_permutations = Get(j, "mmd_permutations", m.mmd_permutations);
  m.precision_recall_k = Get(j, "precision_recall_k", m.precision_recall_k);
  m.privacy_k = Get(j, "privacy_k", m.privacy_k);
  m.classifiers = Get(j, "classifiers", m.classifiers);
  m.mlp_seeds = Get(j, "mlp_seeds", m.mlp_seeds);
  m.attack_classifiers = Get(j, "attack_classifiers", m.attack_classifiers);
  if (j.contains("attack")) {
    CheckKeys(j["attack"], "metrics.attack", {"candidates", "budget"});
    m.attack.candidates = Get(j["attack"], "candidates", m.attack.candidates);
    m.attack.budget = Get(j["attack"], "budget", m.attack.budget);
  }
  if (j.contains("mlp")) ParseClassifierOverrides(j["mlp"], &m.mlp, "metrics.mlp");
  if (j.contains("lr")) ParseClassifierOverrides(j["lr"], &m.lr, "metrics.lr");
  if (j.contains("dimensions")) {
    m.dimensions.clear();
    for (const auto& d : Get<std::vector<std::string>>(j, "dimensions", {})) {
      m.dimensions.push_back(ParseDimension(d));
    }
  }
  m.Validate();
  return m;
}

void CheckSameLayout(const DatasetSchema& a, const DatasetSchema& b) {
  if (a.columns.size() != b.columns.size()) {
    throw ConfigError("synthetic data does not match the real schema");
  }
  for (size_t c = 0; c < a.columns.size(); ++c) {
    if (a.columns[c].name != b.columns[c].name || a.columns[c].kind != b.columns[c].kind) {
      throw ConfigError(fmt::format("synthetic column '{}' does not match the real schema",
                                    b.columns[c].name));
    }
  }
}

TabularDataset ColumnShuffle(const TabularDataset& data, uint64_t seed) {
  std::vector<Column> cols = data.columns();
  for (size_t c = 0; c < cols.size(); ++c) {
    std::mt19937_64 rng(DeriveSeed(seed, {c}));
    if (!cols[c].numeric.empty()) std::shuffle(cols[c].numeric.begin(), cols[c].numeric.end(), rng);
    if (!cols[c].categorical.empty()) {
      std::shuffle(cols[c].categorical.begin(), cols[c].categorical.end(), rng);
    }
  }
  return TabularDataset(data.schema(), std::move(cols));
}

TabularDataset Resize(const TabularDataset& data, size_t rows, uint64_t seed) {
  if (rows == 0 || rows == data.num_rows()) return data;
  std::mt19937_64 rng(seed);
  std::vector<size_t> idx(rows);
  if (rows < data.num_rows()) {
    std::vector<size_t> all(data.num_rows());
    std::iota(all.begin(), all.end(), size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    std::copy(all.begin(), all.begin() + rows, idx.begin());
    std::sort(idx.begin(), idx.end());
  } else {
    std::uniform_int_distribution<size_t> pick(0, data.num_rows() - 1);
    for (auto& i : idx) i = pick(rng);
  }
  return data.Subset(idx);
}

std::string Fixed(double x, int decimals) {
  if (!std::isfinite(x)) return "n/a";
  std::string s = fmt::format("{:.{}f}", x, decimals);
  // Avoid "-0.00".
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

ordered_json WarningToJson(const WarningMessage& w) {
  ordered_json j;
  j["code"] = w.code;
  j["severity"] = w.severity;
  j["text"] = w.text;
  j["metric"] = w.metric;
  if (w.threshold) {
    j["threshold"] = *w.threshold;
  } else {
    j["threshold"] = nullptr;
  }
  j["model_id"] = w.model_id;
  return j;
}

std::vector<std::string> DesignDecisions(const AuditReport& report) {
  std::vector<std::string> out = {
      "Metric values are mapped to [1/(2|pool|), 1] by the empirical CDF of a pool shared by every "
      "ranked item; polarity -1 metrics are negated first.",
      "Within a dimension, normalized scores are combined by an unweighted geometric mean "
      "(independent copula); missing metrics are dropped and the weights renormalized.",
      "Checkpoint selection maximizes the geometric (not arithmetic) validation trustworthiness "
      "index; ties go to the earliest checkpoint.",
      "Fold uncertainty is the mean squared distance of fold indices from their geometric mean; a "
      "zero deviation is floored at 1e-12 when alpha > 0.",
      "The raw-space distance for privacy metrics is the Hamming distance over quantized tokens.",
      "The MMD statistic that enters aggregation is the held-out (test half) witness SNR.",
      "Fairness metrics with a group lacking positives or negatives are recorded as missing.",
      "The attack requires a strict loss increase; numeric tokens are ranked by bin-centre distance, "
      "categorical tokens by cosine similarity of co-occurrence profiles.",
  };
  if (report.metadata.contains("private_sampler")) {
    out.push_back(
        "The private sampler adds Laplace noise of scale 2T/(epsilon |V_L|) and projects onto the "
        "simplex; the division by |V_L| is applied as stated even though it is unusual.");
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

bool MetricsConfig::Wants(Dimension d) const {
  return std::find(dimensions.begin(), dimensions.end(), d) != dimensions.end();
}

void MetricsConfig::Validate() const {
  if (bins < 2) throw ConfigError("metrics.bins must be >= 2");
  if (rff_features < 1) throw ConfigError("metrics.rff_features must be >= 1");
  if (bandwidth_subsample < 2) throw ConfigError("metrics.bandwidth_subsample must be >= 2");
  if (mmd_permutations < 1) throw ConfigError("metrics.mmd_permutations must be >= 1");
  if (precision_recall_k < 1) throw ConfigError("metrics.precision_recall_k must be >= 1");
  if (privacy_k.empty()) throw ConfigError("metrics.privacy_k must not be empty");
  for (int k : privacy_k) {
    if (k < 1) throw ConfigError("metrics.privacy_k entries must be >= 1");
  }
  if (mlp_seeds < 1) throw ConfigError("metrics.mlp_seeds must be >= 1");
  for (const auto& c : classifiers) {
    if (c != "LR" && c != "KNN" && c != "MLP") throw ConfigError(fmt::format("unknown classifier {}", c));
  }
  for (const auto& c : attack_classifiers) {
    if (std::find(classifiers.begin(), classifiers.end(), c) == classifiers.end()) {
      throw ConfigError(fmt::format("attack classifier {} is not among metrics.classifiers", c));
    }
  }
  if (dimensions.empty()) throw ConfigError("metrics.dimensions must not be empty");
  attack.Validate();
}

AuditConfig AuditConfig::FromJson(const json& j, const std::filesystem::path& base_dir) {
  CheckKeys(j, "config",
            {"data", "folds", "metrics", "profiles", "ranking", "warnings", "seeds", "workers"});
  AuditConfig cfg;
  cfg.raw = j;
  if (!j.contains("data")) throw ConfigError("config needs a 'data' section");
  const auto& data = j["data"];
  CheckKeys(data, "data", {"real", "schema", "synthetic"});
  cfg.real_path = Resolve(base_dir, Get<std::string>(data, "real", ""));
  if (!data.contains("real")) throw ConfigError("data.real is required");
  if (!data.contains("schema")) throw ConfigError("data.schema is required");
  cfg.schema = data["schema"].is_string()
                   ? LoadSchema(Resolve(base_dir, data["schema"].get<std::string>()))
                   : DatasetSchema::FromJson(data["schema"]);
  if (!data.contains("synthetic") || !data["synthetic"].is_array() || data["synthetic"].empty()) {
    throw ConfigError("data.synthetic must list at least one synthetic dataset or generator");
  }
  std::set<std::pair<std::string, int>> seen;
  for (const auto& s : data["synthetic"]) {
    CheckKeys(s, "data.synthetic[]",
              {"id", "model", "checkpoint", "path", "paths", "generator", "rows", "dp_epsilon"});
    SyntheticSource src;
    src.id = Get<std::string>(s, "id", "");
    if (src.id.empty()) throw ConfigError("every synthetic entry needs an id");
    src.model_id = Get<std::string>(s, "model", src.id);
    src.checkpoint_id = Get(s, "checkpoint", 0);
    if (s.contains("path")) src.paths.push_back(Resolve(base_dir, s["path"].get<std::string>()));
    for (const auto& p : Get<std::vector<std::string>>(s, "paths", {})) {
      src.paths.push_back(Resolve(base_dir, p));
    }
    src.generator = Get<std::string>(s, "generator", "");
    src.rows = Get<size_t>(s, "rows", 0);
    if (s.contains("dp_epsilon")) src.dp_epsilon = s["dp_epsilon"].get<double>();
    if (src.paths.empty() == src.generator.empty()) {
      throw ConfigError(fmt::format("synthetic entry {} needs exactly one of path(s) or generator", src.id));
    }
    static const std::set<std::string> kGenerators = {"gaussian_copula", "private_independent",
                                                      "copy", "column_shuffle"};
    if (!src.generator.empty() && !kGenerators.count(src.generator)) {
      throw ConfigError(fmt::format("unknown generator '{}'", src.generator));
    }
    if (src.generator == "private_independent" && !src.dp_epsilon) {
      throw ConfigError(fmt::format("synthetic entry {} needs dp_epsilon", src.id));
    }
    if (!seen.insert({src.model_id, src.checkpoint_id}).second) {
      throw ConfigError(fmt::format("duplicate model {} checkpoint {}", src.model_id, src.checkpoint_id));
    }
    cfg.synthetic.push_back(std::move(src));
  }
  if (j.contains("folds")) {
    const auto& f = j["folds"];
    CheckKeys(f, "folds", {"count", "ratios"});
    cfg.folds = Get(f, "count", cfg.folds);
    if (f.contains("ratios")) {
      const auto r = Get<std::vector<double>>(f, "ratios", {});
      if (r.size() != 3) throw ConfigError("folds.ratios needs three fractions");
      cfg.ratios = {r[0], r[1], r[2]};
    }
  }
  if (cfg.folds < 1) throw ConfigError("folds.count must be >= 1");
  for (const auto& s : cfg.synthetic) {
    if (s.paths.size() > 1 && static_cast<int>(s.paths.size()) != cfg.folds) {
      throw ConfigError(fmt::format("synthetic entry {} lists {} paths for {} folds", s.id,
                                    s.paths.size(), cfg.folds));
    }
  }
  if (j.contains("metrics")) cfg.metrics = ParseMetrics(j["metrics"]);
  cfg.profiles = j.contains("profiles") ? ProfilesFromJson(ordered_json::parse(j["profiles"].dump()))
                                        : PresetProfiles();
  if (j.contains("ranking")) {
    CheckKeys(j["ranking"], "ranking", {"alpha"});
    cfg.alpha = Get(j["ranking"], "alpha", 0.0);
  }
  if (!(cfg.alpha >= 0)) throw ConfigError("ranking.alpha must be >= 0");
  if (j.contains("warnings")) {
    const auto& w = j["warnings"];
    CheckKeys(w, "warnings", {"replicated_rows", "privacy_index", "fairness_index"});
    cfg.warnings.replicated_rows = Get(w, "replicated_rows", cfg.warnings.replicated_rows);
    cfg.warnings.privacy_index = Get(w, "privacy_index", cfg.warnings.privacy_index);
    cfg.warnings.fairness_index = Get(w, "fairness_index", cfg.warnings.fairness_index);
  }
  if (j.contains("seeds")) {
    CheckKeys(j["seeds"], "seeds", {"base"});
    cfg.seed = Get<uint64_t>(j["seeds"], "base", 0);
  }
  cfg.workers = Get(j, "workers", 0);
  if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
  return cfg;
}

AuditConfig AuditConfig::FromJson(const ordered_json& j, const std::filesystem::path& base_dir) {
  auto cfg = FromJson(json::parse(j.dump()), base_dir);
  if (j.is_object() && j.contains("profiles")) cfg.profiles = ProfilesFromJson(j["profiles"]);
  return cfg;
}

AuditConfig LoadAuditConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(fmt::format("config file {}: {}", path.string(), e.what()));
  }
  return AuditConfig::FromJson(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Per-fold evaluation

FoldContext PrepareFold(const TabularDataset& real, const FoldSplit& split,
                        const std::string& positive_label, const MetricsConfig& metrics) {
  auto train = real.Subset(split.train);
  auto val = real.Subset(split.val);
  auto test = real.Subset(split.test);
  auto quantizer = FitQuantizer(train, metrics.bins);
  auto embedder = FitEmbedder(train);
  auto train_tokens = quantizer.Quantize(train);
  auto test_tokens = quantizer.Quantize(test);
  auto val_tokens = quantizer.Quantize(val);
  auto train_features = embedder.Embed(train);
  auto val_features = embedder.Embed(val);
  auto test_features = embedder.Embed(test);
  auto val_labels = BinaryLabels(val, positive_label);
  auto test_labels = BinaryLabels(test, positive_label);
  auto val_priv = ProtectedIndicator(val);
  auto test_priv = ProtectedIndicator(test);
  auto token_embeddings = downstream::BuildTokenEmbeddings(quantizer, train_tokens);
  downstream::TokenFeatureMap token_map(quantizer, embedder);
  std::vector<int> attackable;
  const int target_field = quantizer.FieldIndex(real.schema().target);
  for (int f = 0; f < static_cast<int>(quantizer.num_fields()); ++f) {
    if (f != target_field) attackable.push_back(f);
  }
  return FoldContext{split,
                     std::move(train),
                     std::move(val),
                     std::move(test),
                     positive_label,
                     std::move(quantizer),
                     std::move(embedder),
                     std::move(train_tokens),
                     std::move(test_tokens),
                     std::move(val_tokens),
                     std::move(train_features),
                     std::move(val_features),
                     std::move(test_features),
                     std::move(val_labels),
                     std::move(test_labels),
                     std::move(val_priv),
                     std::move(test_priv),
                     std::move(token_embeddings),
                     std::move(token_map),
                     std::move(attackable)};
}

namespace {

class RecordSink {
 public:
  explicit RecordSink(const MetricContext& ctx) : ctx_(ctx) {}

  void Add(std::string name, std::optional<double> value, Split split, int seed = 0) {
    const auto info = ClassifyMetric(name);
    if (!info) throw RuntimeFailure(fmt::format("metric {} is not registered", name));
    MetricRecord r;
    r.metric = std::move(name);
    r.dimension = info->dimension;
    r.polarity = info->polarity;
    if (value && std::isfinite(*value)) r.value = value;
    r.context = ctx_;
    r.context.classifier_seed = seed;
    r.split = split;
    records.push_back(std::move(r));
  }

  std::vector<MetricRecord> records;

 private:
  MetricContext ctx_;
};

struct SplitView {
  Split split;
  const Matrix* features;
  const TokenMatrix* tokens;
  const std::vector<int>* labels;
  const std::vector<int>* privileged;
};

std::string SeedSuffix(const std::string& clf, int seed) {
  return clf == "MLP" ? fmt::format("_{}", seed) : "";
}

void ScoreClassifier(const downstream::Classifier& clf, const std::string& name, int seed,
                     const SplitView& view, const FoldContext& fold, const MetricsConfig& metrics,
                     uint64_t attack_seed, RecordSink* sink, Evaluation* eval) {
  const auto suffix = SeedSuffix(name, seed);
  const auto pred = downstream::MakePredictionSet(clf, *view.features, *view.labels, *view.privileged);
  if (metrics.Wants(Dimension::kUtility)) {
    const auto s = downstream::ScoreClassification(pred);
    sink->Add(fmt::format("CC_{}_accuracy{}", name, suffix), s.accuracy, view.split, seed);
    sink->Add(fmt::format("CC_{}_precision{}", name, suffix), s.precision, view.split, seed);
    sink->Add(fmt::format("CC_{}_recall{}", name, suffix), s.recall, view.split, seed);
    sink->Add(fmt::format("CC_{}_f1_score{}", name, suffix), s.f1, view.split, seed);
  }
  if (metrics.Wants(Dimension::kFairness)) {
    const auto f = downstream::ScoreFairness(pred);
    if (!f) {
      eval->notes.push_back({"degenerate-fairness-group", "info",
                             fmt::format("a protected group in the {} split of fold {} lacks positive "
                                         "or negative rows; fairness metrics of {} are missing",
                                         SplitName(view.split), fold.split.fold_id, name),
                             fmt::format("CC_{}_EOD", name), std::nullopt, ""});
    }
    sink->Add(fmt::format("CC_{}_EOD{}", name, suffix), f ? std::optional(f->eod) : std::nullopt,
              view.split, seed);
    sink->Add(fmt::format("CC_{}_AOD{}", name, suffix), f ? std::optional(f->aod) : std::nullopt,
              view.split, seed);
    sink->Add(fmt::format("CC_{}_EqOdds{}", name, suffix),
              f ? std::optional(f->eq_odds) : std::nullopt, view.split, seed);
  }
  const bool attacked = std::find(metrics.attack_classifiers.begin(), metrics.attack_classifiers.end(),
                                  name) != metrics.attack_classifiers.end();
  if (!attacked || !metrics.Wants(Dimension::kRobustness)) return;

  // Clean and adversarial predictions both go through token decoding.
  const auto& tokens = *view.tokens;
  const Matrix clean_x = fold.token_map.Features(tokens);
  const auto clean = downstream::MakePredictionSet(clf, clean_x, *view.labels, *view.privileged);
  TokenMatrix adv = tokens;
  const int dim = fold.token_map.dimension();
  auto scorer = [&](std::span<const int32_t> row) {
    Matrix x(1, dim);
    fold.token_map.Features(row, x.data());
    return clf.PredictProba(x)[0];
  };
  auto cfg = metrics.attack;
  cfg.seed = attack_seed;
  std::vector<std::exception_ptr> errors(tokens.rows());
#pragma omp parallel for schedule(dynamic, 16) num_threads(kernels::WorkerCount())
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    try {
      const auto res = downstream::GreedySubstitutionAttack(
          scorer, std::span<const int32_t>(tokens.row(r).data(), tokens.cols()), (*view.labels)[r],
          fold.attackable_fields, fold.quantizer, fold.token_embeddings, cfg, static_cast<uint64_t>(r));
      for (Eigen::Index c = 0; c < tokens.cols(); ++c) adv(r, c) = res.tokens[c];
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  const auto adversarial =
      downstream::MakePredictionSet(clf, fold.token_map.Features(adv), *view.labels, *view.privileged);
  const auto rob = downstream::ScoreRobustness(clean, adversarial);
  sink->Add(fmt::format("CC_{}_adv_accuracy{}", name, suffix), rob.adversarial.accuracy, view.split, seed);
  sink->Add(fmt::format("CC_{}_adv_precision{}", name, suffix), rob.adversarial.precision, view.split, seed);
  sink->Add(fmt::format("CC_{}_adv_recall{}", name, suffix), rob.adversarial.recall, view.split, seed);
  sink->Add(fmt::format("CC_{}_adv_f1_score{}", name, suffix), rob.adversarial.f1, view.split, seed);
  sink->Add(fmt::format("CC_{}_delta_accuracy{}", name, suffix), rob.delta.accuracy, view.split, seed);
  sink->Add(fmt::format("CC_{}_delta_precision{}", name, suffix), rob.delta.precision, view.split, seed);
  sink->Add(fmt::format("CC_{}_delta_recall{}", name, suffix), rob.delta.recall, view.split, seed);
  sink->Add(fmt::format("CC_{}_delta_f1_score{}", name, suffix), rob.delta.f1, view.split, seed);
}

}  // namespace

Evaluation EvaluateSynthetic(const FoldContext& fold, const TabularDataset& synth,
                             const MetricContext& context, const MetricsConfig& metrics,
                             uint64_t seed, bool with_validation) {
  CheckSameLayout(fold.train.schema(), synth.schema());
  Evaluation eval;
  RecordSink sink(context);
  const TokenMatrix synth_tokens = fold.quantizer.Quantize(synth);
  const Matrix synth_features = fold.embedder.Embed(synth);

  if (metrics.Wants(Dimension::kFidelity)) {
    for (size_t f = 0; f < fold.quantizer.num_fields(); ++f) {
      const auto& fq = fold.quantizer.field(f);
      sink.Add("ChiSq_" + fq.name,
               fidelity::ChiSquaredPerField(fold.train_tokens, synth_tokens, static_cast<int>(f),
                                            fq.vocab_size()),
               Split::kNone);
    }
    sink.Add("MutualInformation", fidelity::MiL2Difference(fold.train_tokens, synth_tokens), Split::kNone);
    const auto pr = fidelity::KnnPrecisionRecall(fold.train_features, synth_features,
                                                 metrics.precision_recall_k);
    sink.Add("knnPrecisionRecallprecision", pr.precision, Split::kNone);
    sink.Add("knnPrecisionRecallrecall", pr.recall, Split::kNone);
    sink.Add("FID", fidelity::FrechetDistance(fold.train_features, synth_features), Split::kNone);

    Matrix pooled(fold.train_features.rows() + synth_features.rows(), synth_features.cols());
    pooled << fold.train_features, synth_features;
    const double bandwidth = MedianHeuristicBandwidth(pooled, metrics.bandwidth_subsample,
                                                      DeriveSeed(seed, {kStreamBandwidth}));
    const auto rff = RffMap::Sample(static_cast<int>(synth_features.cols()), metrics.rff_features,
                                    bandwidth, DeriveSeed(seed, {kStreamRff}));
    const auto witness = fidelity::MmdWitnessSnr(fold.train_features, synth_features, rff,
                                                 DeriveSeed(seed, {kStreamMmdSplit}));
    sink.Add("MMD_snr", witness.test_snr, Split::kNone);
    sink.Add("MMD_train_snr", witness.train_snr, Split::kNone);
    sink.Add("MMD_p_value",
             fidelity::MmdPermutationPValue(witness.test_real, witness.test_synth,
                                            metrics.mmd_permutations,
                                            DeriveSeed(seed, {kStreamPermutation})),
             Split::kNone);
  }

  if (metrics.Wants(Dimension::kPrivacy)) {
    sink.Add("ReplicatedRows", static_cast<double>(privacy::ReplicatedRows(fold.train, synth)),
             Split::kNone);
    auto add_stats = [&](const std::string& prefix, const std::vector<privacy::KnnDistanceStats>& all) {
      for (const auto& s : all) {
        sink.Add(fmt::format("{}_Mean_{}", prefix, s.k), s.stats.mean, Split::kNone);
        sink.Add(fmt::format("{}_Median_{}", prefix, s.k), s.stats.median, Split::kNone);
        sink.Add(fmt::format("{}_Std_{}", prefix, s.k), s.stats.stddev, Split::kNone);
        sink.Add(fmt::format("{}_Mode_{}", prefix, s.k), s.stats.mode, Split::kNone);
      }
    };
    add_stats("NNRawData",
              privacy::KnnDistanceStatistics(fold.train_tokens, synth_tokens, metrics.privacy_k));
    add_stats("NNEmbeddings",
              privacy::KnnDistanceStatistics(fold.train_features, synth_features, metrics.privacy_k));
  }

  const bool downstream_wanted = metrics.Wants(Dimension::kUtility) ||
                                 metrics.Wants(Dimension::kFairness) ||
                                 metrics.Wants(Dimension::kRobustness);
  if (downstream_wanted) {
    const auto labels = BinaryLabels(synth, fold.positive_label);
    if (std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels[0]; })) {
      eval.notes.push_back({"single-class-synthetic", "info",
                            fmt::format("synthetic labels of {} in fold {} hold one class; "
                                        "classifiers fall back to a constant prediction",
                                        context.model_id, fold.split.fold_id),
                            "", std::nullopt, context.model_id});
    }
    std::vector<SplitView> views = {{Split::kTest, &fold.test_features, &fold.test_tokens,
                                     &fold.test_labels, &fold.test_privileged}};
    if (with_validation) {
      views.push_back({Split::kVal, &fold.val_features, &fold.val_tokens, &fold.val_labels,
                       &fold.val_privileged});
    }
    const uint64_t attack_seed = DeriveSeed(seed, {kStreamAttack});
    for (const auto& name : metrics.classifiers) {
      const int replicates = name == "MLP" ? metrics.mlp_seeds : 1;
      for (int s = 0; s < replicates; ++s) {
        auto spec = name == "LR" ? metrics.lr : name == "KNN" ? metrics.knn : metrics.mlp;
        spec.seed = DeriveSeed(seed, {kStreamMlp, static_cast<uint64_t>(s)});
        const auto clf = downstream::TrainClassifier(synth_features, labels, fold.val_features,
                                                     fold.val_labels, spec);
        for (const auto& view : views) {
          ScoreClassifier(*clf, name, s, view, fold, metrics, attack_seed, &sink, &eval);
        }
      }
    }
  }
  eval.records = std::move(sink.records);
  return eval;
}

TabularDataset GenerateForFold(const SyntheticSource& source, const FoldContext& fold, int bins,
                               uint64_t seed) {
  const size_t rows = source.rows > 0 ? source.rows : fold.train.num_rows();
  if (source.generator == "copy") return Resize(fold.train, rows, seed);
  if (source.generator == "column_shuffle") return ColumnShuffle(Resize(fold.train, rows, seed), seed);
  if (source.generator == "gaussian_copula") {
    const auto model = synthgen::FitGaussianCopula(fold.train, DeriveSeed(seed, {0}));
    return synthgen::SampleGaussianCopula(model, rows, DeriveSeed(seed, {1}));
  }
  if (source.generator == "private_independent") {
    const synthgen::IndependentCategoricalSampler sampler(fold.train, bins);
    synthgen::PrivateSamplerConfig cfg;
    cfg.epsilon = source.dp_epsilon.value_or(1.0);
    cfg.total_length = static_cast<int>(sampler.quantizer().num_fields());
    return sampler.Sample(rows, DeriveSeed(seed, {1}), cfg);
  }
  throw ConfigError(fmt::format("unknown generator '{}'", source.generator));
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

void AddIndexWarnings(const AuditReport& report, const WarningThresholds& th,
                      std::vector<WarningMessage>* out) {
  if (report.rankings.empty()) return;
  // Entries of the first profile; indices only vary by profile through
  // checkpoint selection.
  std::vector<const RankedModel*> models;
  for (const auto& e : report.rankings.front().entries) models.push_back(&e);
  std::sort(models.begin(), models.end(),
            [](const RankedModel* a, const RankedModel* b) { return a->model_id < b->model_id; });
  std::map<std::string, double> replicated;
  for (const auto& r : report.records) {
    if (r.metric == "ReplicatedRows" && r.value) {
      auto& v = replicated[r.context.model_id];
      v = std::max(v, *r.value);
    }
  }
  for (const auto* m : models) {
    if (const auto it = replicated.find(m->model_id);
        it != replicated.end() && it->second > th.replicated_rows) {
      out->push_back({"replicated-rows", "warn",
                      fmt::format("{}: up to {} synthetic rows replicate real training rows in a fold "
                                  "(threshold: replicated rows > {})",
                                  m->model_id, it->second, th.replicated_rows),
                      "ReplicatedRows", th.replicated_rows, m->model_id});
    }
    auto check = [&](Dimension d, double threshold, const char* code) {
      const auto& s = m->dimensions[static_cast<int>(d)];
      if (s && s->mean < threshold) {
        out->push_back({code, "warn",
                        fmt::format("{}: {} index {} is below {}", m->model_id, DimensionName(d),
                                    Fixed(s->mean, 4), threshold),
                        std::string(DimensionName(d)) + "_index", threshold, m->model_id});
      }
    };
    check(Dimension::kPrivacy, th.privacy_index, "privacy-index");
    check(Dimension::kFairness, th.fairness_index, "fairness-index");
  }
}

void MergeNotes(std::vector<WarningMessage> notes, std::vector<WarningMessage>* out) {
  std::set<std::string> seen;
  for (auto& n : notes) {
    if (seen.insert(n.code + "\x1f" + n.text).second) out->push_back(std::move(n));
  }
}

}  // namespace

AuditReport RunAudit(const AuditConfig& config, const std::optional<std::string>& timestamp) {
  config.metrics.Validate();
  const int workers = [&] {
    if (std::getenv("TRUST_AUDIT_THREADS")) return kernels::WorkerCount();
    return config.workers > 0 ? config.workers : kernels::WorkerCount();
  }();

  const auto real = Stage("load real data", [&] {
    auto d = LoadCsv(config.real_path, config.schema);
    CheckLabelDiversity(d);
    return d;
  });
  const auto positive = Stage("labels", [&] { return ResolvePositiveLabel(real); });
  const auto splits = Stage("fold split", [&] {
    return SplitFolds(real, config.ratios, config.folds, config.seed);
  });

  std::vector<std::optional<FoldContext>> folds(splits.size());
  Stage("quantize and embed", [&] {
    ParallelFor(splits.size(), workers, [&](size_t f) {
      folds[f].emplace(PrepareFold(real, splits[f], positive, config.metrics));
    });
  });

  // File-based synthetic data, loaded once per path.
  std::map<std::filesystem::path, std::shared_ptr<const TabularDataset>> files;
  Stage("load synthetic data", [&] {
    for (const auto& s : config.synthetic) {
      for (const auto& p : s.paths) {
        if (!files.count(p)) {
          files[p] = std::make_shared<const TabularDataset>(LoadCsv(p, config.schema));
        }
      }
    }
  });

  std::map<std::string, int> checkpoints_per_model;
  for (const auto& s : config.synthetic) ++checkpoints_per_model[s.model_id];
  const bool with_validation = std::any_of(checkpoints_per_model.begin(), checkpoints_per_model.end(),
                                           [](const auto& kv) { return kv.second > 1; });

  const size_t n_sources = config.synthetic.size();
  const size_t n_tasks = n_sources * folds.size();
  std::vector<Evaluation> results(n_tasks);
  Stage("evaluate metrics", [&] {
    ParallelFor(n_tasks, workers, [&](size_t t) {
      const auto& src = config.synthetic[t / folds.size()];
      const auto& fold = *folds[t % folds.size()];
      const int fold_id = fold.split.fold_id;
      const uint64_t fold_seed = DeriveSeed(config.seed, {kStreamFold, static_cast<uint64_t>(fold_id)});
      std::optional<TabularDataset> generated;
      const TabularDataset* synth = nullptr;
      if (!src.paths.empty()) {
        synth = files.at(src.paths.size() == 1 ? src.paths[0] : src.paths[fold_id]).get();
      } else {
        generated.emplace(GenerateForFold(
            src, fold, config.metrics.bins,
            DeriveSeed(fold_seed, {kStreamGenerator, Fnv1a(src.model_id),
                                   static_cast<uint64_t>(src.checkpoint_id)})));
        synth = &*generated;
      }
      const MetricContext ctx{src.id, src.model_id, fold_id, src.checkpoint_id, 0};
      try {
        results[t] = EvaluateSynthetic(fold, *synth, ctx, config.metrics, fold_seed, with_validation);
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{} fold {}: {}", src.id, fold_id, e.what()));
      }
    });
  });

  AuditReport report;
  report.profiles = config.profiles;
  report.alpha = config.alpha;
  std::vector<WarningMessage> notes;
  for (const auto& f : folds) {
    for (const auto& w : f->quantizer.warnings()) {
      notes.push_back({"quantizer", "info", w, "", std::nullopt, ""});
    }
  }
  if (real.dropped_rows() > 0) {
    notes.push_back({"dropped-rows", "info",
                     fmt::format("{} real rows with missing cells were dropped", real.dropped_rows()),
                     "", std::nullopt, ""});
  }
  for (auto& r : results) {
    report.records.insert(report.records.end(), std::make_move_iterator(r.records.begin()),
                          std::make_move_iterator(r.records.end()));
    notes.insert(notes.end(), r.notes.begin(), r.notes.end());
  }
  report.rankings = Stage("aggregate and rank", [&] {
    return RankRecords(report.records, config.profiles, config.alpha);
  });
  AddIndexWarnings(report, config.warnings, &report.warnings);
  MergeNotes(std::move(notes), &report.warnings);

  auto& md = report.metadata;
  md["tool"] = kToolName;
  md["version"] = kToolVersion;
  md["format_version"] = kReportFormatVersion;
  md["config_digest"] = fmt::format("{:016x}", Fnv1a(config.raw.dump()));
  md["seeds"] = {{"base", config.seed}};
  ordered_json fold_seeds = ordered_json::array();
  for (const auto& s : splits) fold_seeds.push_back(s.seed);
  md["seeds"]["folds"] = fold_seeds;
  md["real_data"] = {{"path", config.real_path.filename().string()},
                     {"rows", real.num_rows()},
                     {"dropped_rows", real.dropped_rows()},
                     {"columns", real.num_columns()},
                     {"target", config.schema.target},
                     {"positive_label", positive},
                     {"protected_column", config.schema.protected_column},
                     {"privileged_value", config.schema.privileged_value}};
  md["folds"] = {{"count", config.folds},
                 {"ratios", {config.ratios.train, config.ratios.val, config.ratios.test}}};
  md["workers"] = workers;
  md["raw_distance"] = "hamming over quantized tokens";
  md["validation_index"] = "geometric";
  md["warning_thresholds"] = {{"replicated_rows", config.warnings.replicated_rows},
                              {"privacy_index", config.warnings.privacy_index},
                              {"fairness_index", config.warnings.fairness_index}};
  for (const auto& s : config.synthetic) {
    if (s.generator == "private_independent") {
      md["private_sampler"] = {{"laplace_scale", "2T/(epsilon*|V_L|)"},
                               {"note", "noise scale divides by the local vocabulary size as stated"}};
      break;
    }
  }
  md["config"] = ordered_json::parse(config.raw.dump());
  if (timestamp) md["generated_at"] = *timestamp;
  return report;
}

AuditReport ReportFromRecords(std::vector<MetricRecord> records, std::vector<TrustProfile> profiles,
                              double alpha) {
  AuditReport report;
  report.rankings = RankRecords(records, profiles, alpha);
  report.records = std::move(records);
  report.profiles = std::move(profiles);
  report.alpha = alpha;
  report.metadata["tool"] = kToolName;
  report.metadata["version"] = kToolVersion;
  report.metadata["format_version"] = kReportFormatVersion;
  report.metadata["validation_index"] = "geometric";
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

std::string FormatIndex(double mean, double deviation) {
  return fmt::format("{} ({})", Fixed(mean, 2), Fixed(deviation, 2));
}

double Round4(double x) {
  const double r = std::round(x * 1e4) / 1e4;
  return r == 0.0 ? 0.0 : r;
}

ordered_json ReportToJson(const AuditReport& report) {
  ordered_json j;
  j["format_version"] = kReportFormatVersion;
  j["metadata"] = report.metadata;
  j["metadata"]["design_decisions"] = DesignDecisions(report);
  j["profiles"] = ordered_json::array();
  for (const auto& p : report.profiles) {
    j["profiles"].push_back({{"name", p.name},
                             {"raw", p.RawNotation()},
                             {"weights", p.weights}});
  }
  j["rankings"] = ordered_json::array();
  for (const auto& pr : report.rankings) {
    ordered_json r;
    r["profile"] = pr.profile.name;
    r["raw"] = pr.profile.RawNotation();
    r["alpha"] = report.alpha;
    r["entries"] = ordered_json::array();
    int rank = 0;
    for (const auto& e : pr.entries) {
      ordered_json entry;
      entry["rank"] = ++rank;
      entry["model_id"] = e.model_id;
      entry["dataset_id"] = e.dataset_id;
      entry["tau"] = Round4(e.tau_mean);
      entry["tau_deviation"] = Round4(e.tau_deviation);
      entry["score"] = Round4(e.score);
      entry["display"] = FormatIndex(e.tau_mean, e.tau_deviation);
      entry["checkpoints"] = e.checkpoints;
      ordered_json dims;
      for (auto d : kAllDimensions) {
        const auto& s = e.dimensions[static_cast<int>(d)];
        if (!s) {
          dims[std::string(DimensionName(d))] = nullptr;
          continue;
        }
        dims[std::string(DimensionName(d))] = {{"mean", Round4(s->mean)},
                                               {"deviation", Round4(s->deviation)},
                                               {"display", FormatIndex(s->mean, s->deviation)}};
      }
      entry["dimensions"] = dims;
      r["entries"].push_back(std::move(entry));
    }
    j["rankings"].push_back(std::move(r));
  }

  // Breakdown: model -> checkpoint -> split -> metric -> per-fold values.
  struct Cell {
    std::string dataset_id;
    std::set<int> folds;
    std::map<std::string, std::map<std::string, std::map<int, std::optional<double>>>> values;
  };
  std::map<std::pair<std::string, int>, Cell> cells;
  for (const auto& r : report.records) {
    auto& c = cells[{r.context.model_id, r.context.checkpoint_id}];
    c.dataset_id = r.context.dataset_id;
    c.folds.insert(r.context.fold_id);
    c.values[std::string(SplitName(r.split))][r.metric][r.context.fold_id] = r.value;
  }
  j["breakdown"] = ordered_json::array();
  for (const auto& [key, c] : cells) {
    ordered_json b;
    b["model_id"] = key.first;
    b["checkpoint_id"] = key.second;
    b["dataset_id"] = c.dataset_id;
    b["folds"] = std::vector<int>(c.folds.begin(), c.folds.end());
    ordered_json splits;
    for (const auto& [split, metrics] : c.values) {
      ordered_json m;
      for (const auto& [name, per_fold] : metrics) {
        ordered_json arr = ordered_json::array();
        for (int f : c.folds) {
          const auto it = per_fold.find(f);
          if (it != per_fold.end() && it->second) {
            arr.push_back(*it->second);
          } else {
            arr.push_back(nullptr);
          }
        }
        m[name] = std::move(arr);
      }
      splits[split] = std::move(m);
    }
    b["metrics"] = std::move(splits);
    j["breakdown"].push_back(std::move(b));
  }
  j["warnings"] = ordered_json::array();
  for (const auto& w : report.warnings) j["warnings"].push_back(WarningToJson(w));
  return j;
}

std::string RenderJson(const AuditReport& report) { return ReportToJson(report).dump(2) + "\n"; }

std::string RenderMarkdown(const AuditReport& report) {
  std::ostringstream out;
  const auto& md = report.metadata;
  out << "# Trust Audit Report\n\n## Metadata\n\n";
  out << fmt::format("- Tool: {} {}\n", md.value("tool", kToolName), md.value("version", kToolVersion));
  if (md.contains("generated_at")) out << "- Generated at: " << md["generated_at"].get<std::string>() << "\n";
  if (md.contains("config_digest")) {
    out << "- Config digest: `" << md["config_digest"].get<std::string>() << "`\n";
  }
  if (md.contains("seeds")) out << "- Base seed: " << md["seeds"]["base"].dump() << "\n";
  if (md.contains("real_data")) {
    const auto& rd = md["real_data"];
    out << fmt::format("- Real data: {} rows ({} dropped), {} columns; target `{}` (positive `{}`); "
                       "protected `{}` (privileged `{}`)\n",
                       rd["rows"].dump(), rd["dropped_rows"].dump(), rd["columns"].dump(),
                       rd["target"].get<std::string>(), rd["positive_label"].get<std::string>(),
                       rd["protected_column"].get<std::string>(),
                       rd["privileged_value"].get<std::string>());
  }
  if (md.contains("folds")) out << "- Folds: " << md["folds"]["count"].dump() << "\n";
  out << fmt::format("- Ranking alpha: {}\n", report.alpha);
  out << "- Records: " << report.records.size() << "\n\n";

  out << "## Profiles\n\n| Profile | Weights (F, P, U, Fair, R) | Normalized |\n|---|---|---|\n";
  for (const auto& p : report.profiles) {
    out << fmt::format("| {} | {} | {:.4f}, {:.4f}, {:.4f}, {:.4f}, {:.4f} |\n", p.name,
                       p.RawNotation(), p.weights[0], p.weights[1], p.weights[2], p.weights[3],
                       p.weights[4]);
  }

  static const char* kMedals[] = {"\xF0\x9F\xA5\x87", "\xF0\x9F\xA5\x88", "\xF0\x9F\xA5\x89"};
  out << "\n## Ranked Lists\n";
  for (const auto& pr : report.rankings) {
    out << fmt::format("\n### {} `{}`\n\n", pr.profile.name, pr.profile.RawNotation());
    out << "| Rank | Model | Dataset | tau (deviation) | R^alpha |\n|---|---|---|---|---|\n";
    int rank = 0;
    for (const auto& e : pr.entries) {
      ++rank;
      const std::string medal = rank <= 3 ? fmt::format("{} {}", rank, kMedals[rank - 1])
                                          : std::to_string(rank);
      out << fmt::format("| {} | {} | {} | {} | {} |\n", medal, e.model_id, e.dataset_id,
                         FormatIndex(e.tau_mean, e.tau_deviation), Fixed(e.score, 4));
    }
  }

  out << "\n## Dimension Index Tables\n";
  for (const auto& pr : report.rankings) {
    out << fmt::format("\n### {}\n\n", pr.profile.name);
    out << "| Model | Fidelity | Privacy | Utility | Fairness | Robustness |\n|---|---|---|---|---|---|\n";
    for (const auto& e : pr.entries) {
      out << "| " << e.model_id;
      for (const auto& s : e.dimensions) out << " | " << (s ? FormatIndex(s->mean, s->deviation) : "n/a");
      out << " |\n";
    }
  }

  out << "\n## Metric Breakdown\n";
  std::map<std::pair<std::string, int>, std::map<std::pair<std::string, std::string>, std::vector<double>>>
      grouped;
  for (const auto& r : report.records) {
    auto& v = grouped[{r.context.model_id, r.context.checkpoint_id}]
                     [{std::string(SplitName(r.split)), r.metric}];
    if (r.value) v.push_back(*r.value);
  }
  for (const auto& [key, metrics] : grouped) {
    out << fmt::format("\n### {} (checkpoint {})\n\n", key.first, key.second);
    out << "| Metric | Split | Dimension | Mean over folds | Folds |\n|---|---|---|---|---|\n";
    for (const auto& [mk, values] : metrics) {
      const auto info = ClassifyMetric(mk.second);
      const double mean = values.empty()
                              ? std::nan("")
                              : std::accumulate(values.begin(), values.end(), 0.0) / values.size();
      out << fmt::format("| {} | {} | {} | {} | {} |\n", mk.second, mk.first,
                         info ? DimensionName(info->dimension) : "external",
                         values.empty() ? "missing" : fmt::format("{:.6g}", mean), values.size());
    }
  }

  out << "\n## Warnings\n\n";
  if (report.warnings.empty()) out << "None.\n";
  for (const auto& w : report.warnings) {
    out << fmt::format("- **{}** `{}`: {}\n", w.severity, w.code, w.text);
  }

  out << "\n## Design-Decision Disclosure\n\n";
  for (const auto& d : DesignDecisions(report)) out << "- " << d << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Iterative collapse

double SpearmanCorrelation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("Spearman needs two equal-length series");
  auto ranks = [](std::span<const double> v) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      for (size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

CollapseSummary RunCollapse(const TabularDataset& real, int generations, size_t rows, int folds,
                            uint64_t seed, const MetricsConfig& metrics_in) {
  if (generations < 1) throw ConfigError("generations must be >= 1");
  MetricsConfig metrics = metrics_in;
  metrics.dimensions = {Dimension::kFidelity, Dimension::kPrivacy};
  metrics.Validate();
  CheckLabelDiversity(real);
  const auto positive = ResolvePositiveLabel(real);
  const auto splits = SplitFolds(real, SplitRatios{}, folds, seed);
  const int workers = kernels::WorkerCount();

  std::vector<std::optional<FoldContext>> contexts(splits.size());
  std::vector<synthgen::CollapseRun> chains(splits.size());
  ParallelFor(splits.size(), workers, [&](size_t f) {
    contexts[f].emplace(PrepareFold(real, splits[f], positive, metrics));
    const size_t n = rows > 0 ? rows : contexts[f]->train.num_rows();
    chains[f] = synthgen::IterativeRetrain(contexts[f]->train, generations, n,
                                           DeriveSeed(seed, {kStreamGenerator, f}));
  });
  std::vector<std::pair<size_t, size_t>> tasks;
  for (size_t f = 0; f < chains.size(); ++f) {
    for (size_t g = 0; g < chains[f].generations.size(); ++g) tasks.push_back({f, g});
  }
  std::vector<Evaluation> results(tasks.size());
  ParallelFor(tasks.size(), workers, [&](size_t t) {
    const auto [f, g] = tasks[t];
    const auto id = fmt::format("gen-{}", g + 1);
    const MetricContext ctx{id, id, static_cast<int>(f), 0, 0};
    results[t] = EvaluateSynthetic(*contexts[f], chains[f].generations[g], ctx, metrics,
                                   DeriveSeed(seed, {kStreamFold, f}), false);
  });
  std::vector<MetricRecord> records;
  std::vector<WarningMessage> notes;
  for (auto& r : results) {
    records.insert(records.end(), r.records.begin(), r.records.end());
    notes.insert(notes.end(), r.notes.begin(), r.notes.end());
  }
  for (const auto& c : chains) {
    for (const auto& n : c.notes) notes.push_back({"collapse", "info", n, "", std::nullopt, ""});
  }
  CollapseSummary out;
  out.report = ReportFromRecords(std::move(records), {TrustProfile::FromRaw("FP", {100, 100, 0, 0, 0})}, 0.0);
  MergeNotes(std::move(notes), &out.report.warnings);
  std::map<int, const RankedModel*> by_gen;
  for (const auto& e : out.report.rankings.front().entries) {
    by_gen[std::stoi(e.model_id.substr(4))] = &e;
  }
  for (const auto& [g, e] : by_gen) {
    out.generations.push_back(e->model_id);
    out.fidelity.push_back(e->dimensions[static_cast<int>(Dimension::kFidelity)]->mean);
    out.privacy.push_back(e->dimensions[static_cast<int>(Dimension::kPrivacy)]->mean);
  }
  return out;
}

}  // namespace trustaudit::report
