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

#ifndef TRUSTAUDIT_EMBEDDING_H_
#define TRUSTAUDIT_EMBEDDING_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trustaudit/common.h"
#include "trustaudit/core_data.h"

namespace trustaudit {

// Deterministic row embedding: standardized continuous columns followed by
// one-hot blocks for categorical columns. The target and identifier columns
// are excluded. Statistics come from real training rows only.
class Embedder {
 public:
  struct NumericFeature {
    int column = -1;
    double mean = 0.0;
    double stddev = 0.0;  // 0 marks a constant column, embedded as 0
  };
  struct CategoricalFeature {
    int column = -1;
    std::vector<std::string> categories;  // sorted; unseen values embed as all zeros
    int offset = 0;
  };

  Embedder() = default;
  Embedder(std::vector<NumericFeature> numeric, std::vector<CategoricalFeature> categorical);

  int dimension() const { return dimension_; }
  const std::vector<NumericFeature>& numeric() const { return numeric_; }
  const std::vector<CategoricalFeature>& categorical() const { return categorical_; }

  Matrix Embed(const TabularDataset& data) const;

 private:
  std::vector<NumericFeature> numeric_;
  std::vector<CategoricalFeature> categorical_;
  int dimension_ = 0;
};

Embedder FitEmbedder(const TabularDataset& real_train);

// Precomputed embedding file: a header row, one row-id column and d float
// columns. Rows are returned in file order together with their ids.
struct LoadedEmbedding {
  std::vector<std::string> row_ids;
  Matrix features;
};
LoadedEmbedding LoadEmbeddingCsv(const std::filesystem::path& path,
                                 const std::string& id_column);

// Median pairwise Euclidean distance over at most `subsample` rows chosen
// without replacement, clamped below at 1e-12.
double MedianHeuristicBandwidth(const Matrix& x, size_t subsample, uint64_t seed);

// Random Fourier feature map for the Gaussian kernel
// exp(-||x - y||^2 / (2 sigma^2)).
class RffMap {
 public:
  // Explicit frequencies (d x m) and phases (m).
  RffMap(Matrix frequencies, Vector phases, double bandwidth, uint64_t seed = 0);
  static RffMap Sample(int input_dim, int features, double bandwidth, uint64_t seed);

  int input_dim() const { return static_cast<int>(frequencies_.rows()); }
  int features() const { return static_cast<int>(frequencies_.cols()); }
  double bandwidth() const { return bandwidth_; }
  uint64_t seed() const { return seed_; }
  const Matrix& frequencies() const { return frequencies_; }
  const Vector& phases() const { return phases_; }

  Matrix Transform(const Matrix& x) const;

 private:
  Matrix frequencies_;
  Vector phases_;
  double bandwidth_;
  uint64_t seed_;
};

// One-way ANOVA F statistic per feature column. Zero within-class variance
// gives +inf when the class means differ and 0 when they do not.
std::vector<double> AnovaFStatistics(const Matrix& x, std::span<const int> labels);

// min(k, d) feature indices with the largest F statistic; ties go to the
// lower index. Throws ConfigError when fewer than two classes are present.
std::vector<int> AnovaFSelect(const Matrix& x, std::span<const int> labels, int k);

}  // namespace trustaudit

#endif  // TRUSTAUDIT_EMBEDDING_H_
