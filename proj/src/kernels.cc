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

#include "trustaudit/kernels.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include <fmt/format.h>
#include <omp.h>

namespace trustaudit::kernels {
namespace {

double SquaredDistance(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

int HammingDistance(const int32_t* a, const int32_t* b, Eigen::Index d) {
  int s = 0;
  for (Eigen::Index j = 0; j < d; ++j) s += a[j] != b[j];
  return s;
}

// Bounded sorted buffer of the k best (key, index) pairs. References are
// scanned in increasing index order, so a strict comparison on the key keeps
// the lower index among equal keys.
class TopK {
 public:
  explicit TopK(int k) : k_(k) {
    keys_.reserve(k);
    idx_.reserve(k);
  }
  void Offer(double key, int64_t index) {
    if (static_cast<int>(keys_.size()) == k_ && !(key < keys_.back())) return;
    int pos = static_cast<int>(keys_.size());
    if (pos == k_) {
      --pos;
      keys_.pop_back();
      idx_.pop_back();
    }
    keys_.push_back(key);
    idx_.push_back(index);
    while (pos > 0 && keys_[pos - 1] > key) {
      std::swap(keys_[pos - 1], keys_[pos]);
      std::swap(idx_[pos - 1], idx_[pos]);
      --pos;
    }
  }
  // Candidate lists from the forest arrive in arbitrary index order.
  void OfferUnordered(double key, int64_t index) {
    if (static_cast<int>(keys_.size()) == k_) {
      const bool better = key < keys_.back() || (key == keys_.back() && index < idx_.back());
      if (!better) return;
      keys_.pop_back();
      idx_.pop_back();
    }
    int pos = static_cast<int>(keys_.size());
    keys_.push_back(key);
    idx_.push_back(index);
    while (pos > 0 && (keys_[pos - 1] > key || (keys_[pos - 1] == key && idx_[pos - 1] > index))) {
      std::swap(keys_[pos - 1], keys_[pos]);
      std::swap(idx_[pos - 1], idx_[pos]);
      --pos;
    }
  }
  int size() const { return static_cast<int>(keys_.size()); }
  double key(int i) const { return keys_[i]; }
  int64_t index(int i) const { return idx_[i]; }

 private:
  int k_;
  std::vector<double> keys_;
  std::vector<int64_t> idx_;
};

void CheckKnnArgs(Eigen::Index n_ref, Eigen::Index n_query, Eigen::Index d_ref,
                  Eigen::Index d_query, int k, bool exclude_self) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (d_ref != d_query) {
    throw ConfigError(fmt::format("dimension mismatch: reference {} vs query {}", d_ref, d_query));
  }
  if (exclude_self && n_ref != n_query) {
    throw ConfigError("self-exclusion requires the query set to be the reference set");
  }
  const Eigen::Index available = exclude_self ? n_ref - 1 : n_ref;
  if (available < k) {
    throw ConfigError(fmt::format("kNN needs at least {} reference rows, got {}", k, available));
  }
}

void EuclideanRow(const Matrix& reference, const Matrix& query, int k, bool exclude_self,
                  Eigen::Index q, KnnResult& out) {
  TopK top(k);
  const Eigen::Index d = reference.cols();
  const double* qrow = query.data() + q * d;
  for (Eigen::Index r = 0; r < reference.rows(); ++r) {
    if (exclude_self && r == q) continue;
    top.Offer(SquaredDistance(qrow, reference.data() + r * d, d), r);
  }
  for (int i = 0; i < k; ++i) {
    out.distances(q, i) = std::sqrt(top.key(i));
    out.indices(q, i) = top.index(i);
  }
}

void HammingRow(const TokenMatrix& reference, const TokenMatrix& query, int k,
                bool exclude_self, Eigen::Index q, KnnResult& out) {
  TopK top(k);
  const Eigen::Index d = reference.cols();
  const int32_t* qrow = query.data() + q * d;
  for (Eigen::Index r = 0; r < reference.rows(); ++r) {
    if (exclude_self && r == q) continue;
    top.Offer(HammingDistance(qrow, reference.data() + r * d, d), r);
  }
  for (int i = 0; i < k; ++i) {
    out.distances(q, i) = top.key(i);
    out.indices(q, i) = top.index(i);
  }
}

uint8_t CoveredRow(const Matrix& reference, std::span<const double> radii, const double* q) {
  const Eigen::Index d = reference.cols();
  for (Eigen::Index r = 0; r < reference.rows(); ++r) {
    if (std::sqrt(SquaredDistance(q, reference.data() + r * d, d)) <= radii[r]) return 1;
  }
  return 0;
}

void RffRow(const Matrix& x, const Matrix& w, const Vector& b, double scale, Eigen::Index i,
            Matrix& out) {
  const Eigen::Index d = x.cols();
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double s = b(j);
    for (Eigen::Index l = 0; l < d; ++l) s += x(i, l) * w(l, j);
    out(i, j) = scale * std::cos(s);
  }
}

size_t PairOffset(size_t i, size_t n) { return i * n - i * (i + 1) / 2; }

void CheckRffArgs(const Matrix& x, const Matrix& w, const Vector& b) {
  if (x.cols() != w.rows()) {
    throw ConfigError(fmt::format("RFF dimension mismatch: data has {} columns, map expects {}",
                                  x.cols(), w.rows()));
  }
  if (b.size() != w.cols()) throw ConfigError("RFF phase vector length mismatch");
}

}  // namespace

int WorkerCount() {
  if (const char* env = std::getenv("TRUST_AUDIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

KnnResult KnnEuclidean(const Matrix& reference, const Matrix& query, int k, bool exclude_self,
                       const KnnOptions& options) {
  CheckKnnArgs(reference.rows(), query.rows(), reference.cols(), query.cols(), k, exclude_self);
  if (static_cast<size_t>(reference.rows()) >= options.exact_threshold) {
    PartitionForest forest(reference, options.trees, options.leaf_size, options.seed);
    return forest.Search(query, k, exclude_self);
  }
  KnnResult out{Matrix(query.rows(), k), IndexMatrix(query.rows(), k)};
#pragma omp parallel for schedule(static) num_threads(WorkerCount())
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    EuclideanRow(reference, query, k, exclude_self, q, out);
  }
  return out;
}

KnnResult KnnHamming(const TokenMatrix& reference, const TokenMatrix& query, int k,
                     bool exclude_self) {
  CheckKnnArgs(reference.rows(), query.rows(), reference.cols(), query.cols(), k, exclude_self);
  KnnResult out{Matrix(query.rows(), k), IndexMatrix(query.rows(), k)};
#pragma omp parallel for schedule(static) num_threads(WorkerCount())
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    HammingRow(reference, query, k, exclude_self, q, out);
  }
  return out;
}

std::vector<uint8_t> CoveredByBalls(const Matrix& reference, std::span<const double> radii,
                                    const Matrix& query) {
  if (static_cast<Eigen::Index>(radii.size()) != reference.rows()) {
    throw ConfigError("one radius per reference row required");
  }
  std::vector<uint8_t> out(query.rows());
#pragma omp parallel for schedule(static) num_threads(WorkerCount())
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    out[q] = CoveredRow(reference, radii, query.data() + q * query.cols());
  }
  return out;
}

Matrix RandomFourierTransform(const Matrix& x, const Matrix& frequencies, const Vector& phases) {
  CheckRffArgs(x, frequencies, phases);
  Matrix out(x.rows(), frequencies.cols());
  const double scale = std::sqrt(2.0 / static_cast<double>(frequencies.cols()));
#pragma omp parallel for schedule(static) num_threads(WorkerCount())
  for (Eigen::Index i = 0; i < x.rows(); ++i) RffRow(x, frequencies, phases, scale, i, out);
  return out;
}

std::vector<double> PairwiseDistances(const Matrix& x) {
  const size_t n = static_cast<size_t>(x.rows());
  std::vector<double> out(n * (n - 1) / 2);
  const Eigen::Index d = x.cols();
#pragma omp parallel for schedule(dynamic, 16) num_threads(WorkerCount())
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    size_t pos = PairOffset(static_cast<size_t>(i), n);
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      out[pos++] = std::sqrt(SquaredDistance(x.data() + i * d, x.data() + j * d, d));
    }
  }
  return out;
}

PartitionForest::PartitionForest(const Matrix& reference, int trees, int leaf_size,
                                 uint64_t seed)
    : reference_(reference), leaf_size_(std::max(leaf_size, 2)) {
  if (trees < 1) throw ConfigError("partition forest needs at least one tree");
  trees_.resize(trees);
  for (int t = 0; t < trees; ++t) {
    std::mt19937_64 rng(DeriveSeed(seed, {static_cast<uint64_t>(t)}));
    std::vector<int64_t> all(reference.rows());
    std::iota(all.begin(), all.end(), int64_t{0});
    Build(trees_[t], std::move(all), rng);
  }
}

void PartitionForest::Build(std::vector<Node>& nodes, std::vector<int64_t> items,
                            std::mt19937_64& rng) {
  // Iterative construction; each stack entry is (node id, items).
  std::vector<std::pair<int, std::vector<int64_t>>> stack;
  nodes.emplace_back();
  stack.emplace_back(0, std::move(items));
  while (!stack.empty()) {
    auto [id, members] = std::move(stack.back());
    stack.pop_back();
    if (static_cast<int>(members.size()) <= leaf_size_) {
      nodes[id].items = std::move(members);
      continue;
    }
    // Split along the direction between two random members at the median
    // projection.
    std::uniform_int_distribution<size_t> pick(0, members.size() - 1);
    const int64_t a = members[pick(rng)];
    int64_t b = members[pick(rng)];
    Vector dir = (reference_.row(a) - reference_.row(b)).transpose();
    if (dir.norm() == 0.0) {
      std::normal_distribution<double> g;
      for (Eigen::Index j = 0; j < dir.size(); ++j) dir(j) = g(rng);
    }
    std::vector<std::pair<double, int64_t>> proj(members.size());
    for (size_t i = 0; i < members.size(); ++i) {
      proj[i] = {reference_.row(members[i]).dot(dir), members[i]};
    }
    const size_t mid = proj.size() / 2;
    std::nth_element(proj.begin(), proj.begin() + mid, proj.end());
    std::vector<int64_t> left, right;
    left.reserve(mid);
    right.reserve(proj.size() - mid);
    for (size_t i = 0; i < proj.size(); ++i) (i < mid ? left : right).push_back(proj[i].second);
    const double threshold = proj[mid].first;
    const int l = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const int r = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[id].direction = std::move(dir);
    nodes[id].threshold = threshold;
    nodes[id].left = l;
    nodes[id].right = r;
    stack.emplace_back(l, std::move(left));
    stack.emplace_back(r, std::move(right));
  }
}

int PartitionForest::Descend(const std::vector<Node>& nodes, const double* row) const {
  int id = 0;
  const Eigen::Index d = reference_.cols();
  while (nodes[id].left >= 0) {
    const auto& node = nodes[id];
    const double p = Eigen::Map<const Vector>(row, d).dot(node.direction);
    id = p < node.threshold ? node.left : node.right;
  }
  return id;
}

KnnResult PartitionForest::Search(const Matrix& query, int k, bool exclude_self) const {
  CheckKnnArgs(reference_.rows(), query.rows(), reference_.cols(), query.cols(), k,
               exclude_self);
  KnnResult out{Matrix(query.rows(), k), IndexMatrix(query.rows(), k)};
  const Eigen::Index d = reference_.cols();
#pragma omp parallel for schedule(dynamic, 64) num_threads(WorkerCount())
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    const double* qrow = query.data() + q * d;
    std::vector<int64_t> candidates;
    for (const auto& tree : trees_) {
      const auto& leaf = tree[Descend(tree, qrow)].items;
      candidates.insert(candidates.end(), leaf.begin(), leaf.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    if (exclude_self) std::erase(candidates, static_cast<int64_t>(q));
    TopK top(k);
    if (static_cast<int>(candidates.size()) < k) {
      for (Eigen::Index r = 0; r < reference_.rows(); ++r) {
        if (exclude_self && r == q) continue;
        top.Offer(SquaredDistance(qrow, reference_.data() + r * d, d), r);
      }
    } else {
      for (int64_t r : candidates) {
        top.OfferUnordered(SquaredDistance(qrow, reference_.data() + r * d, d), r);
      }
    }
    for (int i = 0; i < k; ++i) {
      out.distances(q, i) = std::sqrt(top.key(i));
      out.indices(q, i) = top.index(i);
    }
  }
  return out;
}

namespace serial {

KnnResult KnnEuclidean(const Matrix& reference, const Matrix& query, int k, bool exclude_self) {
  CheckKnnArgs(reference.rows(), query.rows(), reference.cols(), query.cols(), k, exclude_self);
  KnnResult out{Matrix(query.rows(), k), IndexMatrix(query.rows(), k)};
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    EuclideanRow(reference, query, k, exclude_self, q, out);
  }
  return out;
}

KnnResult KnnHamming(const TokenMatrix& reference, const TokenMatrix& query, int k,
                     bool exclude_self) {
  CheckKnnArgs(reference.rows(), query.rows(), reference.cols(), query.cols(), k, exclude_self);
  KnnResult out{Matrix(query.rows(), k), IndexMatrix(query.rows(), k)};
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    HammingRow(reference, query, k, exclude_self, q, out);
  }
  return out;
}

std::vector<uint8_t> CoveredByBalls(const Matrix& reference, std::span<const double> radii,
                                    const Matrix& query) {
  if (static_cast<Eigen::Index>(radii.size()) != reference.rows()) {
    throw ConfigError("one radius per reference row required");
  }
  std::vector<uint8_t> out(query.rows());
  for (Eigen::Index q = 0; q < query.rows(); ++q) {
    out[q] = CoveredRow(reference, radii, query.data() + q * query.cols());
  }
  return out;
}

Matrix RandomFourierTransform(const Matrix& x, const Matrix& frequencies, const Vector& phases) {
  CheckRffArgs(x, frequencies, phases);
  Matrix out(x.rows(), frequencies.cols());
  const double scale = std::sqrt(2.0 / static_cast<double>(frequencies.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) RffRow(x, frequencies, phases, scale, i, out);
  return out;
}

std::vector<double> PairwiseDistances(const Matrix& x) {
  const Eigen::Index d = x.cols();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(x.rows()) * (x.rows() - 1) / 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      out.push_back(std::sqrt(SquaredDistance(x.data() + i * d, x.data() + j * d, d)));
    }
  }
  return out;
}

}  // namespace serial
}  // namespace trustaudit::kernels
