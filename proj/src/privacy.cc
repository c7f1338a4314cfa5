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

#include "trustaudit/privacy.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "trustaudit/kernels.h"

namespace trustaudit::privacy {
namespace {

constexpr int kModeBins = 32;

double MedianOf(std::vector<double> v) {
  const size_t m = v.size();
  std::nth_element(v.begin(), v.begin() + m / 2, v.end());
  double median = v[m / 2];
  if (m % 2 == 0) median = 0.5 * (median + *std::max_element(v.begin(), v.begin() + m / 2));
  return median;
}

std::vector<KnnDistanceStats> FromNeighbors(const kernels::KnnResult& knn,
                                            std::span<const int> k_list) {
  std::vector<KnnDistanceStats> out;
  for (int k : k_list) {
    std::vector<double> per_query(knn.distances.rows());
    for (Eigen::Index q = 0; q < knn.distances.rows(); ++q) {
      // Neighbor distances are already sorted ascending.
      const double* d = knn.distances.data() + q * knn.distances.cols();
      per_query[q] = k % 2 == 1 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
    }
    out.push_back({k, Summarize(per_query)});
  }
  return out;
}

int MaxK(std::span<const int> k_list) {
  if (k_list.empty()) throw ConfigError("empty k list");
  const int k = *std::max_element(k_list.begin(), k_list.end());
  if (*std::min_element(k_list.begin(), k_list.end()) < 1) throw ConfigError("k must be >= 1");
  return k;
}

}  // namespace

size_t ReplicatedRows(const TabularDataset& real_train, const TabularDataset& synth) {
  const auto& a = real_train.schema().columns;
  const auto& b = synth.schema().columns;
  if (a.size() != b.size()) throw ConfigError("replica count needs matching schemas");
  for (size_t c = 0; c < a.size(); ++c) {
    if (a[c].name != b[c].name || a[c].kind != b[c].kind) {
      throw ConfigError("replica count needs matching schemas");
    }
  }
  std::unordered_multimap<uint64_t, size_t> index;
  index.reserve(real_train.num_rows());
  for (size_t r = 0; r < real_train.num_rows(); ++r) {
    index.emplace(CanonicalRowHash(real_train, r), r);
  }
  size_t count = 0;
  for (size_t s = 0; s < synth.num_rows(); ++s) {
    const auto [lo, hi] = index.equal_range(CanonicalRowHash(synth, s));
    if (lo == hi) continue;
    const auto canonical = CanonicalRow(synth, s);
    for (auto it = lo; it != hi; ++it) {
      if (CanonicalRow(real_train, it->second) == canonical) {
        ++count;
        break;
      }
    }
  }
  return count;
}

DistanceStats Summarize(std::span<const double> distances) {
  if (distances.empty()) throw ConfigError("no distances to summarize");
  DistanceStats s;
  const double n = static_cast<double>(distances.size());
  s.mean = std::accumulate(distances.begin(), distances.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : distances) ss += (d - s.mean) * (d - s.mean);
  s.stddev = std::sqrt(ss / n);
  s.median = MedianOf({distances.begin(), distances.end()});
  const auto [lo_it, hi_it] = std::minmax_element(distances.begin(), distances.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    s.mode = lo;
  } else {
    const double width = (hi - lo) / kModeBins;
    std::vector<int> counts(kModeBins, 0);
    for (double d : distances) {
      ++counts[std::min(static_cast<int>((d - lo) / width), kModeBins - 1)];
    }
    const int best = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    s.mode = lo + (best + 0.5) * width;
  }
  return s;
}

std::vector<KnnDistanceStats> KnnDistanceStatistics(const Matrix& reference, const Matrix& query,
                                                    std::span<const int> k_list) {
  const int k = MaxK(k_list);
  if (reference.rows() < k) {
    throw ConfigError(fmt::format("kNN distance needs at least {} reference rows", k));
  }
  return FromNeighbors(kernels::KnnEuclidean(reference, query, k), k_list);
}

std::vector<KnnDistanceStats> KnnDistanceStatistics(const TokenMatrix& reference,
                                                    const TokenMatrix& query,
                                                    std::span<const int> k_list) {
  const int k = MaxK(k_list);
  if (reference.rows() < k) {
    throw ConfigError(fmt::format("kNN distance needs at least {} reference rows", k));
  }
  return FromNeighbors(kernels::KnnHamming(reference, query, k), k_list);
}

}  // namespace trustaudit::privacy
