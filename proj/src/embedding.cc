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

#include "trustaudit/embedding.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "trustaudit/kernels.h"

namespace trustaudit {

Embedder::Embedder(std::vector<NumericFeature> numeric,
                   std::vector<CategoricalFeature> categorical)
    : numeric_(std::move(numeric)), categorical_(std::move(categorical)) {
  int offset = static_cast<int>(numeric_.size());
  for (auto& cat : categorical_) {
    cat.offset = offset;
    offset += static_cast<int>(cat.categories.size());
  }
  dimension_ = offset;
}

Embedder FitEmbedder(const TabularDataset& real_train) {
  const auto& schema = real_train.schema();
  const int target = schema.IndexOf(schema.target);
  std::vector<Embedder::NumericFeature> numeric;
  std::vector<Embedder::CategoricalFeature> categorical;
  const double n = static_cast<double>(real_train.num_rows());
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (ci == target || schema.IsIdColumn(ci)) continue;
    if (schema.columns[c].kind == ColumnKind::kContinuous) {
      const auto& v = real_train.column(c).numeric;
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      double sd = std::sqrt(ss / n);
      // Rounding can leave a tiny spread on a constant column.
      if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) sd = 0.0;
      numeric.push_back({ci, mean, sd});
    } else {
      const auto& cells = real_train.column(c).categorical;
      std::set<std::string> distinct(cells.begin(), cells.end());
      categorical.push_back({ci, {distinct.begin(), distinct.end()}, 0});
    }
  }
  return Embedder(std::move(numeric), std::move(categorical));
}

Matrix Embedder::Embed(const TabularDataset& data) const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(data.num_rows()), dimension_);
  for (size_t f = 0; f < numeric_.size(); ++f) {
    const auto& nf = numeric_[f];
    if (nf.stddev == 0.0) continue;
    const auto& v = data.column(nf.column).numeric;
    for (size_t r = 0; r < v.size(); ++r) out(r, f) = (v[r] - nf.mean) / nf.stddev;
  }
  for (const auto& cf : categorical_) {
    const auto& cells = data.column(cf.column).categorical;
    for (size_t r = 0; r < cells.size(); ++r) {
      const auto it = std::lower_bound(cf.categories.begin(), cf.categories.end(), cells[r]);
      if (it != cf.categories.end() && *it == cells[r]) {
        out(r, cf.offset + (it - cf.categories.begin())) = 1.0;
      }
    }
  }
  return out;
}

LoadedEmbedding LoadEmbeddingCsv(const std::filesystem::path& path,
                                 const std::string& id_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open embedding file: " + path.string());
  const auto records = ReadCsvRecords(in);
  if (records.size() < 2) throw ConfigError("embedding file has no data rows");
  const auto& header = records.front();
  const auto id_it = std::find(header.begin(), header.end(), id_column);
  if (id_it == header.end()) throw ConfigError("embedding file lacks id column " + id_column);
  const size_t id_pos = static_cast<size_t>(id_it - header.begin());
  LoadedEmbedding out;
  out.features.resize(static_cast<Eigen::Index>(records.size() - 1),
                      static_cast<Eigen::Index>(header.size() - 1));
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw ConfigError(fmt::format("embedding row {} has {} fields, expected {}", r, rec.size(),
                                    header.size()));
    }
    Eigen::Index col = 0;
    for (size_t c = 0; c < rec.size(); ++c) {
      if (c == id_pos) {
        out.row_ids.push_back(rec[c]);
        continue;
      }
      try {
        size_t used = 0;
        out.features(r - 1, col++) = std::stod(rec[c], &used);
        if (used != rec[c].size()) throw std::invalid_argument(rec[c]);
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("embedding row {} has a non-numeric cell '{}'", r, rec[c]));
      }
    }
  }
  return out;
}

double MedianHeuristicBandwidth(const Matrix& x, size_t subsample, uint64_t seed) {
  if (x.rows() < 2) throw ConfigError("median heuristic needs at least two rows");
  const size_t n = static_cast<size_t>(x.rows());
  std::vector<double> dists;
  if (subsample >= n) {
    dists = kernels::PairwiseDistances(x);
  } else {
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(std::max<size_t>(subsample, 2));
    std::sort(order.begin(), order.end());
    dists = kernels::PairwiseDistances(x(order, Eigen::all));
  }
  const size_t m = dists.size();
  std::nth_element(dists.begin(), dists.begin() + m / 2, dists.end());
  double median = dists[m / 2];
  if (m % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + m / 2);
    median = 0.5 * (median + lower);
  }
  return std::max(median, 1e-12);
}

RffMap::RffMap(Matrix frequencies, Vector phases, double bandwidth, uint64_t seed)
    : frequencies_(std::move(frequencies)),
      phases_(std::move(phases)),
      bandwidth_(bandwidth),
      seed_(seed) {
  if (phases_.size() != frequencies_.cols()) throw ConfigError("RFF phase count mismatch");
  if (frequencies_.cols() < 1) throw ConfigError("RFF map needs at least one feature");
}

RffMap RffMap::Sample(int input_dim, int features, double bandwidth, uint64_t seed) {
  if (features < 1) throw ConfigError("RFF map needs at least one feature");
  if (!(bandwidth > 0)) throw ConfigError("RFF bandwidth must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / bandwidth);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Matrix w(input_dim, features);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = normal(rng);
  }
  Vector b(features);
  for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = phase(rng);
  return RffMap(std::move(w), std::move(b), bandwidth, seed);
}

Matrix RffMap::Transform(const Matrix& x) const {
  return kernels::RandomFourierTransform(x, frequencies_, phases_);
}

std::vector<double> AnovaFStatistics(const Matrix& x, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw ConfigError("label count does not match feature rows");
  }
  std::map<int, std::vector<Eigen::Index>> groups;
  for (size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  if (groups.size() < 2) throw ConfigError("ANOVA F selection needs at least two classes");
  const double n = static_cast<double>(x.rows());
  const double g = static_cast<double>(groups.size());
  std::vector<double> f(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double grand = x.col(j).mean();
    double between = 0.0, within = 0.0;
    for (const auto& [label, rows] : groups) {
      double mean = 0.0;
      for (auto r : rows) mean += x(r, j);
      mean /= static_cast<double>(rows.size());
      between += static_cast<double>(rows.size()) * (mean - grand) * (mean - grand);
      for (auto r : rows) within += (x(r, j) - mean) * (x(r, j) - mean);
    }
    const double df_between = g - 1.0;
    const double df_within = n - g;
    if (within <= 0.0 || df_within <= 0.0) {
      f[j] = between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      f[j] = (between / df_between) / (within / df_within);
    }
  }
  return f;
}

std::vector<int> AnovaFSelect(const Matrix& x, std::span<const int> labels, int k) {
  if (k < 1) throw ConfigError("feature selection needs k >= 1");
  const auto f = AnovaFStatistics(x, labels);
  std::vector<int> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] > f[b]; });
  order.resize(std::min<size_t>(static_cast<size_t>(k), order.size()));
  return order;
}

}  // namespace trustaudit
