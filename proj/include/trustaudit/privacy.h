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

#ifndef TRUSTAUDIT_PRIVACY_H_
#define TRUSTAUDIT_PRIVACY_H_

#include <span>
#include <vector>

#include "trustaudit/common.h"
#include "trustaudit/core_data.h"

namespace trustaudit::privacy {

// Synthetic rows that exactly match some real training row. Every matching
// synthetic row counts, duplicates included.
size_t ReplicatedRows(const TabularDataset& real_train, const TabularDataset& synth);

struct DistanceStats {
  double mean = 0.0;
  double median = 0.0;
  // Midpoint of the most populated of 32 equal-width bins. Report only.
  double mode = 0.0;
  double stddev = 0.0;  // population; report only
};

DistanceStats Summarize(std::span<const double> distances);

struct KnnDistanceStats {
  int k = 1;
  DistanceStats stats;
};

// For each query row, the median distance among its k nearest reference
// rows (for k = 1 simply the nearest distance), summarized over queries.
std::vector<KnnDistanceStats> KnnDistanceStatistics(const Matrix& reference, const Matrix& query,
                                                    std::span<const int> k_list);
// Same in quantized space with the Hamming (field mismatch) distance.
std::vector<KnnDistanceStats> KnnDistanceStatistics(const TokenMatrix& reference,
                                                    const TokenMatrix& query,
                                                    std::span<const int> k_list);

}  // namespace trustaudit::privacy

#endif  // TRUSTAUDIT_PRIVACY_H_
