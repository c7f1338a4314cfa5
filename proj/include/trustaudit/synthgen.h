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

#ifndef TRUSTAUDIT_SYNTHGEN_H_
#define TRUSTAUDIT_SYNTHGEN_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trustaudit/common.h"
#include "trustaudit/core_data.h"

namespace trustaudit::synthgen {

// Empirical marginal of one non-identifier column.
struct CopulaMarginal {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  std::vector<double> sorted_values;      // continuous
  std::vector<std::string> categories;    // categorical, sorted
  std::vector<double> probabilities;      // categorical, aligned with categories
  bool constant = false;
};

class GaussianCopulaModel {
 public:
  GaussianCopulaModel() = default;
  GaussianCopulaModel(DatasetSchema schema, std::vector<CopulaMarginal> marginals,
                      Eigen::MatrixXd correlation, uint64_t seed);

  const DatasetSchema& schema() const { return schema_; }
  // One marginal per schema column; identifier columns have none and are
  // regenerated as row numbers.
  const std::vector<std::optional<CopulaMarginal>>& marginals() const { return marginals_; }
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  uint64_t seed() const { return seed_; }

  nlohmann::json ToJson() const;
  static GaussianCopulaModel FromJson(const nlohmann::json& j);

 private:
  DatasetSchema schema_;
  std::vector<std::optional<CopulaMarginal>> marginals_;
  Eigen::MatrixXd correlation_;  // over non-identifier columns, schema order
  uint64_t seed_ = 0;
};

inline constexpr double kCorrelationShrinkage = 1e-3;

GaussianCopulaModel FitGaussianCopula(const TabularDataset& train, uint64_t seed);

// Rows are drawn in blocks with per-block derived seeds, so the output does
// not depend on the worker count.
TabularDataset SampleGaussianCopula(const GaussianCopulaModel& model, size_t rows, uint64_t seed);

// Euclidean projection onto the probability simplex.
std::vector<double> ProjectToSimplex(std::span<const double> v);

struct PrivateSamplerConfig {
  double epsilon = 1.0;
  int total_length = 1;  // fields per sample

  void Validate() const;
  // 2T / (epsilon |V_L|)
  double NoiseScale(int vocab_size) const;
};

// Adds i.i.d. Laplace noise of the configured scale and projects back onto
// the simplex.
std::vector<double> PrivateSamplePerturb(std::span<const double> probs,
                                         const PrivateSamplerConfig& cfg, uint64_t seed);
// Same with caller-supplied noise.
std::vector<double> PrivateSamplePerturb(std::span<const double> probs,
                                         std::span<const double> noise);

// Per-field categorical sampler over quantized tokens. Numeric tokens decode
// to their bin centre. With a private config, each field draw uses a freshly
// perturbed distribution.
class IndependentCategoricalSampler {
 public:
  IndependentCategoricalSampler(const TabularDataset& train, int bins);

  const Quantizer& quantizer() const { return quantizer_; }
  // Per field, over the observed vocabulary (the unseen token excluded).
  const std::vector<std::vector<double>>& probabilities() const { return probs_; }

  TabularDataset Sample(size_t rows, uint64_t seed,
                        const std::optional<PrivateSamplerConfig>& privacy = std::nullopt) const;

 private:
  DatasetSchema schema_;
  Quantizer quantizer_;
  std::vector<std::vector<double>> probs_;
};

struct CollapseRun {
  std::vector<TabularDataset> generations;
  std::vector<std::string> notes;
};

// Generation 1 is fit on real_train, generation g on generation g-1. Stops
// early, with a note, once a generation has only constant columns.
CollapseRun IterativeRetrain(const TabularDataset& real_train, int generations, size_t rows_per_gen,
                             uint64_t seed);

}  // namespace trustaudit::synthgen

#endif  // TRUSTAUDIT_SYNTHGEN_H_
