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

#ifndef TRUSTAUDIT_REPORT_H_
#define TRUSTAUDIT_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trustaudit/aggregation.h"
#include "trustaudit/core_data.h"
#include "trustaudit/downstream.h"
#include "trustaudit/embedding.h"
#include "trustaudit/synthgen.h"

namespace trustaudit::report {

inline constexpr const char* kToolName = "trustaudit";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kReportFormatVersion = 1;

struct MetricsConfig {
  int bins = 10;
  int rff_features = 512;
  size_t bandwidth_subsample = 1000;
  int mmd_permutations = 200;
  int precision_recall_k = 3;
  std::vector<int> privacy_k = {1, 3, 5};
  // Any of "LR", "KNN", "MLP".
  std::vector<std::string> classifiers = {"LR", "KNN", "MLP"};
  int mlp_seeds = 5;
  std::vector<std::string> attack_classifiers = {"MLP"};
  downstream::AttackConfig attack;
  downstream::ClassifierSpec lr{.kind = downstream::ClassifierKind::kLogisticRegression};
  downstream::ClassifierSpec knn{.kind = downstream::ClassifierKind::kKnn};
  downstream::ClassifierSpec mlp{.kind = downstream::ClassifierKind::kMlp};
  // Dimensions to evaluate; all five by default.
  std::vector<Dimension> dimensions = {kAllDimensions.begin(), kAllDimensions.end()};

  bool Wants(Dimension d) const;
  void Validate() const;
};

struct WarningThresholds {
  double replicated_rows = 0.0;  // warn when the count exceeds this
  double privacy_index = 0.2;    // warn when the mean index falls below
  double fairness_index = 0.2;
};

struct WarningMessage {
  std::string code;
  std::string severity;  // info | warn | fail
  std::string text;
  std::string metric;
  std::optional<double> threshold;
  std::string model_id;
};

// Where one synthetic candidate comes from. Either files (one for all folds,
// or one per fold) or a generator fit on each fold's real training split.
struct SyntheticSource {
  std::string id;        // dataset id
  std::string model_id;  // defaults to id
  int checkpoint_id = 0;
  std::vector<std::filesystem::path> paths;
  // gaussian_copula | private_independent | copy | column_shuffle
  std::string generator;
  size_t rows = 0;  // 0 = size of the fold's real training split
  std::optional<double> dp_epsilon;
};

struct AuditConfig {
  std::filesystem::path real_path;
  DatasetSchema schema;
  std::vector<SyntheticSource> synthetic;
  int folds = 5;
  SplitRatios ratios;
  uint64_t seed = 0;
  MetricsConfig metrics;
  std::vector<TrustProfile> profiles;
  double alpha = 0.0;
  WarningThresholds warnings;
  int workers = 0;  // 0 = all available
  nlohmann::json raw;

  // Relative paths resolve against base_dir. Profiles keep their order only
  // in the ordered overload.
  static AuditConfig FromJson(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static AuditConfig FromJson(const nlohmann::ordered_json& j,
                              const std::filesystem::path& base_dir);
};

AuditConfig LoadAuditConfig(const std::filesystem::path& path);

// Everything a fold needs that depends only on real data.
struct FoldContext {
  FoldSplit split;
  TabularDataset train;
  TabularDataset val;
  TabularDataset test;
  std::string positive_label;
  Quantizer quantizer;
  Embedder embedder;
  TokenMatrix train_tokens;
  TokenMatrix test_tokens;
  TokenMatrix val_tokens;
  Matrix train_features;
  Matrix val_features;
  Matrix test_features;
  std::vector<int> val_labels;
  std::vector<int> test_labels;
  std::vector<int> val_privileged;
  std::vector<int> test_privileged;
  downstream::TokenEmbeddings token_embeddings;
  downstream::TokenFeatureMap token_map;
  std::vector<int> attackable_fields;
};

FoldContext PrepareFold(const TabularDataset& real, const FoldSplit& split,
                        const std::string& positive_label, const MetricsConfig& metrics);

struct Evaluation {
  std::vector<MetricRecord> records;
  std::vector<WarningMessage> notes;
};

// All registered metrics of one synthetic dataset against one fold. With
// `with_validation`, utility, fairness and robustness are also measured on
// the validation split.
Evaluation EvaluateSynthetic(const FoldContext& fold, const TabularDataset& synth,
                             const MetricContext& context, const MetricsConfig& metrics,
                             uint64_t seed, bool with_validation);

// Builds one fold's synthetic dataset for a generator source.
TabularDataset GenerateForFold(const SyntheticSource& source, const FoldContext& fold,
                               int bins, uint64_t seed);

struct AuditReport {
  nlohmann::ordered_json metadata;
  std::vector<TrustProfile> profiles;
  double alpha = 0.0;
  std::vector<ProfileRanking> rankings;
  std::vector<MetricRecord> records;
  std::vector<WarningMessage> warnings;
};

AuditReport RunAudit(const AuditConfig& config,
                     const std::optional<std::string>& timestamp = std::nullopt);

// Ranking-only report over externally computed records.
AuditReport ReportFromRecords(std::vector<MetricRecord> records,
                              std::vector<TrustProfile> profiles, double alpha);

// "0.42 (0.09)"
std::string FormatIndex(double mean, double deviation);
double Round4(double x);

nlohmann::ordered_json ReportToJson(const AuditReport& report);
std::string RenderJson(const AuditReport& report);
std::string RenderMarkdown(const AuditReport& report);

// Iterative-collapse experiment: every generation is audited on fidelity and
// privacy against the fold it descends from.
struct CollapseSummary {
  std::vector<std::string> generations;  // model ids in chain order
  std::vector<double> fidelity;          // mean index per generation
  std::vector<double> privacy;
  AuditReport report;
};
CollapseSummary RunCollapse(const TabularDataset& real, int generations, size_t rows,
                            int folds, uint64_t seed, const MetricsConfig& metrics);

// Spearman rank correlation with average ranks for ties.
double SpearmanCorrelation(std::span<const double> x, std::span<const double> y);

}  // namespace trustaudit::report

#endif  // TRUSTAUDIT_REPORT_H_
