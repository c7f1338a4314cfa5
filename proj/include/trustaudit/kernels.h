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

#ifndef TRUSTAUDIT_KERNELS_H_
#define TRUSTAUDIT_KERNELS_H_

// Data-parallel inner loops shared by the metric modules. Every kernel has an
// OpenMP implementation (namespace kernels) and a single-threaded reference
// implementation (namespace kernels::serial) with the same summation order,
// so the two agree bit for bit. Tests compare them; the benchmark times them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trustaudit/common.h"

namespace trustaudit::kernels {

using IndexMatrix =
    Eigen::Matrix<int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// k nearest reference rows per query row, ordered by (distance, index).
struct KnnResult {
  Matrix distances;     // queries x k
  IndexMatrix indices;  // queries x k
};

struct KnnOptions {
  // Reference sets at or above this size use the partition forest.
  size_t exact_threshold = 50000;
  int trees = 8;
  int leaf_size = 128;
  uint64_t seed = 0x5eed;
};

// Euclidean kNN. With `exclude_self`, query i never matches reference i
// (the query set must then be the reference set).
KnnResult KnnEuclidean(const Matrix& reference, const Matrix& query, int k,
                       bool exclude_self = false, const KnnOptions& options = {});

// Hamming distance over token rows: the number of mismatching fields.
KnnResult KnnHamming(const TokenMatrix& reference, const TokenMatrix& query, int k,
                     bool exclude_self = false);

// 1 when ||q - r|| <= radius[r] for at least one reference row r.
std::vector<uint8_t> CoveredByBalls(const Matrix& reference, std::span<const double> radii,
                                    const Matrix& query);

// sqrt(2/m) * cos(x W + b) for every row x; W is d x m.
Matrix RandomFourierTransform(const Matrix& x, const Matrix& frequencies, const Vector& phases);

// Upper-triangle pairwise Euclidean distances, row-major pair order.
std::vector<double> PairwiseDistances(const Matrix& x);

// Approximate kNN by a forest of random-projection trees. Candidates are the
// union of the leaves a query falls into; distances among candidates are
// exact.
class PartitionForest {
 public:
  PartitionForest(const Matrix& reference, int trees, int leaf_size, uint64_t seed);
  KnnResult Search(const Matrix& query, int k, bool exclude_self) const;

 private:
  struct Node {
    Vector direction;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<int64_t> items;  // leaves only
  };
  void Build(std::vector<Node>& nodes, std::vector<int64_t> items, std::mt19937_64& rng);
  int Descend(const std::vector<Node>& nodes, const double* row) const;

  const Matrix& reference_;
  int leaf_size_;
  std::vector<std::vector<Node>> trees_;
};

namespace serial {

KnnResult KnnEuclidean(const Matrix& reference, const Matrix& query, int k,
                       bool exclude_self = false);
KnnResult KnnHamming(const TokenMatrix& reference, const TokenMatrix& query, int k,
                     bool exclude_self = false);
std::vector<uint8_t> CoveredByBalls(const Matrix& reference, std::span<const double> radii,
                                    const Matrix& query);
Matrix RandomFourierTransform(const Matrix& x, const Matrix& frequencies, const Vector& phases);
std::vector<double> PairwiseDistances(const Matrix& x);

}  // namespace serial

// Worker count for parallel regions: TRUST_AUDIT_THREADS when set, otherwise
// the OpenMP default.
int WorkerCount();

}  // namespace trustaudit::kernels

#endif  // TRUSTAUDIT_KERNELS_H_
