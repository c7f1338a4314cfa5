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

#ifndef TRUSTAUDIT_AGGREGATION_H_
#define TRUSTAUDIT_AGGREGATION_H_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trustaudit/common.h"

namespace trustaudit {

enum class Dimension { kFidelity = 0, kPrivacy, kUtility, kFairness, kRobustness };
inline constexpr int kNumDimensions = 5;
inline constexpr std::array<Dimension, kNumDimensions> kAllDimensions = {
    Dimension::kFidelity, Dimension::kPrivacy, Dimension::kUtility, Dimension::kFairness,
    Dimension::kRobustness};

std::string_view DimensionName(Dimension d);
Dimension ParseDimension(std::string_view name);

enum class Split { kVal, kTest, kNone };
std::string_view SplitName(Split s);
Split ParseSplit(std::string_view name);

struct MetricContext {
  std::string dataset_id;
  std::string model_id;
  int fold_id = 0;
  int checkpoint_id = 0;
  int classifier_seed = 0;
};

struct MetricRecord {
  std::string metric;
  Dimension dimension = Dimension::kFidelity;
  int polarity = 1;
  std::optional<double> value;  // empty = missing
  MetricContext context;
  Split split = Split::kNone;
};

struct MetricInfo {
  Dimension dimension;
  int polarity;
  bool aggregated;  // false for report-only statistics
};

// Registered metric names. Unknown names return nullopt and are taken as
// declared by their records.
std::optional<MetricInfo> ClassifyMetric(std::string_view name);

// JSON lines interchange. A null value marks a missing metric.
nlohmann::json RecordToJson(const MetricRecord& r);
MetricRecord RecordFromJson(const nlohmann::json& j);
std::vector<MetricRecord> ReadRecordsJsonl(std::istream& in);
std::vector<MetricRecord> ReadRecordsJsonl(const std::filesystem::path& path);
void WriteRecordsJsonl(std::span<const MetricRecord> records, std::ostream& out);

// p * m; missing stays missing.
std::optional<double> AlignPolarity(const MetricRecord& r);

// #{pool <= x} / |pool|, clamped below at 1 / (2 |pool|). Pool sorted.
double EcdfEval(std::span<const double> sorted_pool, double x);

// Aligned values per metric name, frozen (sorted) before evaluation.
class MetricPool {
 public:
  void Add(const std::string& metric, double aligned);
  void Freeze();
  bool Has(const std::string& metric) const { return values_.count(metric) > 0; }
  double Evaluate(const std::string& metric, double aligned) const;
  const std::map<std::string, std::vector<double>>& values() const { return values_; }

 private:
  std::map<std::string, std::vector<double>> values_;
  bool frozen_ = false;
};

// exp(sum beta_i log u_i). Empty beta means uniform. Throws when u is empty.
double DimensionIndex(std::span<const double> u, std::span<const double> beta = {});

struct TrustProfile {
  std::string name;
  std::array<double, kNumDimensions> weights{};  // normalized
  std::array<double, kNumDimensions> raw{};
  double raw_total = 0.0;

  // "(50,100,100,50,50)/350"
  std::string RawNotation() const;
  double weight(Dimension d) const { return weights[static_cast<int>(d)]; }

  static TrustProfile FromRaw(std::string name, const std::array<double, kNumDimensions>& raw);
  // Accepts "(a,b,c,d,e)/n", "(a,b,c,d,e)" or a JSON array of five numbers.
  static TrustProfile Parse(std::string name, const nlohmann::json& spec);
};

std::vector<TrustProfile> PresetProfiles();
// Resolves a preset by name.
TrustProfile PresetProfile(std::string_view name);
// JSON object name -> weights, file order preserved.
std::vector<TrustProfile> ProfilesFromJson(const nlohmann::ordered_json& j);
std::vector<TrustProfile> LoadProfiles(const std::filesystem::path& path);

using DimensionValues = std::array<std::optional<double>, kNumDimensions>;

// exp(sum omega_T log pi_T). Dimensions with zero weight may be absent.
double TrustworthinessIndex(const DimensionValues& pi, const TrustProfile& profile);

struct GeoMeanDev {
  double mean = 0.0;       // geometric mean
  double deviation = 0.0;  // mean squared distance to the geometric mean
};
GeoMeanDev GeoMeanDeviation(std::span<const double> values);

struct RankInput {
  std::string model_id;
  double tau_mean = 0.0;
  double tau_deviation = 0.0;
};
struct RankedItem {
  std::string model_id;
  double tau_mean = 0.0;
  double tau_deviation = 0.0;
  double score = 0.0;
};

inline constexpr double kDeviationFloor = 1e-12;

// R = log tau_mean - alpha log max(dev, floor); descending, ties by higher
// tau_mean then model id.
std::vector<RankedItem> RankWithUncertainty(std::span<const RankInput> items, double alpha);

// Index of the largest value; ties go to the earliest.
int SelectCheckpoint(std::span<const double> validation_tau);

double OverlapAtK(std::span<const std::string> a, std::span<const std::string> b, int k);

// ---------------------------------------------------------------------------
// Record-level pipeline.

struct ItemKey {
  std::string model_id;
  int fold_id = 0;
  int checkpoint_id = 0;
  auto operator<=>(const ItemKey&) const = default;
};

struct ItemIndices {
  ItemKey key;
  std::string dataset_id;
  DimensionValues pi;
  // Normalized u per metric, for the breakdown.
  std::map<std::string, double> u;
};

enum class PoolScope { kFinal, kSelection };

// Builds one pool over every given item and computes its dimension indices.
// kFinal uses test and split-free records, kSelection val and split-free.
// Items appear in key order.
std::vector<ItemIndices> ComputeItemIndices(std::span<const MetricRecord> records,
                                            std::span<const ItemKey> items, PoolScope scope);

std::vector<ItemKey> DistinctItems(std::span<const MetricRecord> records);

struct CheckpointChoice {
  std::string model_id;
  int fold_id = 0;
  int checkpoint_id = 0;
  double validation_tau = 0.0;
};

// Per model, pools validation records across its folds and checkpoints and
// picks the best checkpoint of every fold.
std::vector<CheckpointChoice> SelectCheckpoints(std::span<const MetricRecord> records,
                                                const TrustProfile& profile);

struct DimensionSummary {
  std::vector<double> per_fold;
  double mean = 0.0;
  double deviation = 0.0;
};

struct RankedModel {
  std::string model_id;
  std::string dataset_id;
  std::array<std::optional<DimensionSummary>, kNumDimensions> dimensions;
  std::vector<int> folds;
  std::vector<int> checkpoints;  // chosen checkpoint per fold
  std::vector<double> tau_per_fold;
  double tau_mean = 0.0;
  double tau_deviation = 0.0;
  double score = 0.0;
  std::map<std::string, std::vector<double>> u_per_fold;
};

struct ProfileRanking {
  TrustProfile profile;
  std::vector<RankedModel> entries;  // ranked
};

// Full ranking: checkpoint selection where a model has several checkpoints,
// then one final pool over the chosen items, dimension indices, tau per
// fold, cross-fold summaries and R^alpha ordering.
std::vector<ProfileRanking> RankRecords(std::span<const MetricRecord> records,
                                        std::span<const TrustProfile> profiles, double alpha);

}  // namespace trustaudit

#endif  // TRUSTAUDIT_AGGREGATION_H_
