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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixture.h"
#include "trustaudit/embedding.h"

namespace trustaudit {
namespace {

TabularDataset TwoByTwo(size_t n, uint64_t seed) {
  DatasetSchema s;
  s.columns = {{"a", ColumnKind::kContinuous}, {"b", ColumnKind::kContinuous},
               {"c", ColumnKind::kCategorical}, {"d", ColumnKind::kCategorical},
               {"y", ColumnKind::kCategorical}};
  s.target = "y";
  s.protected_column = "d";
  s.privileged_value = "u";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(3.0, 2.0);
  std::vector<Column> cols(5);
  for (size_t i = 0; i < n; ++i) {
    cols[0].numeric.push_back(normal(rng));
    cols[1].numeric.push_back(7.0);  // constant
    cols[2].categorical.push_back(rng() % 2 ? "p" : "q");
    cols[3].categorical.push_back(rng() % 2 ? "u" : "v");
    cols[4].categorical.push_back(rng() % 2 ? "yes" : "no");
  }
  return TabularDataset(s, std::move(cols));
}

TEST(Embedder, DimensionArithmetic) {
  const auto d = TwoByTwo(200, 1);
  const auto e = FitEmbedder(d);
  EXPECT_EQ(e.dimension(), 2 + 2 + 2);
  EXPECT_EQ(e.Embed(d).cols(), 6);
}

TEST(Embedder, StandardizesAndZeroesConstants) {
  const auto d = TwoByTwo(500, 2);
  const auto e = FitEmbedder(d);
  const Matrix x = e.Embed(d);
  const double mean = x.col(0).mean();
  const double var = (x.col(0).array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 1e-9);
  EXPECT_NEAR(var, 1.0, 1e-2);
  EXPECT_EQ(x.col(1).cwiseAbs().maxCoeff(), 0.0);
  for (int r = 0; r < x.rows(); ++r) {
    EXPECT_DOUBLE_EQ(x(r, 2) + x(r, 3), 1.0);
    EXPECT_DOUBLE_EQ(x(r, 4) + x(r, 5), 1.0);
  }
}

TEST(Embedder, ExcludesTargetAndIds) {
  const auto d = testing::MakeFixture(300, 5);
  const auto e = FitEmbedder(d);
  const int id = d.schema().IndexOf("id");
  const int target = d.schema().IndexOf("label");
  for (const auto& f : e.numeric()) EXPECT_NE(f.column, id);
  for (const auto& f : e.categorical()) EXPECT_NE(f.column, target);
}

TEST(Bandwidth, TwoPoints) {
  Matrix x(2, 1);
  x << 0, 3;
  EXPECT_DOUBLE_EQ(MedianHeuristicBandwidth(x, 1000, 0), 3.0);
}

TEST(Bandwidth, IdenticalPointsClamp) {
  const Matrix x = Matrix::Ones(10, 3);
  EXPECT_DOUBLE_EQ(MedianHeuristicBandwidth(x, 1000, 0), 1e-12);
}

TEST(Bandwidth, ExactMedianWhenSubsampleCoversAll) {
  Matrix x(4, 1);
  x << 0, 1, 3, 7;
  // pairwise: 1 3 7 2 6 4 -> sorted 1 2 3 4 6 7; median (3+4)/2
  EXPECT_DOUBLE_EQ(MedianHeuristicBandwidth(x, 10, 0), 3.5);
}

TEST(Rff, ZeroFrequency) {
  const RffMap map(Matrix::Zero(1, 1), Vector::Zero(1), 1.0);
  Matrix x(3, 1);
  x << -1, 0, 5;
  const Matrix z = map.Transform(x);
  for (int r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(z(r, 0), std::sqrt(2.0));
}

TEST(Rff, SeededAndApproximatesKernel) {
  const auto a = RffMap::Sample(3, 4096, 1.5, 17);
  const auto b = RffMap::Sample(3, 4096, 1.5, 17);
  EXPECT_EQ(a.frequencies(), b.frequencies());
  EXPECT_EQ(a.phases(), b.phases());
  Matrix x(2, 3);
  x << 0, 0, 0, 1, 0.5, -0.5;
  const Matrix z = a.Transform(x);
  const double approx = z.row(0).dot(z.row(1));
  const double exact = std::exp(-(1 + 0.25 + 0.25) / (2 * 1.5 * 1.5));
  EXPECT_NEAR(approx, exact, 0.05);
}

TEST(Anova, OrderingAndDegenerateCases) {
  Matrix x(6, 3);
  // f0 = label, f1 same across classes, f2 noisy signal
  x << 0, 5, 1.0,
       0, 6, 2.0,
       0, 7, 1.5,
       1, 5, 3.0,
       1, 6, 2.5,
       1, 7, 4.0;
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const auto f = AnovaFStatistics(x, y);
  EXPECT_TRUE(std::isinf(f[0]));
  EXPECT_DOUBLE_EQ(f[1], 0.0);
  // means 1.5 vs 3.1667, grand 2.3333; SSB = 6 * 0.8333^2 = 4.1667,
  // SSW = 0.5 + 1.1667 = 1.6667; F = 4.1667 / (1.6667 / 4) = 10
  EXPECT_NEAR(f[2], 10.0, 1e-9);
  EXPECT_EQ(AnovaFSelect(x, y, 3), (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(AnovaFSelect(x, y, 10).size(), 3u);
  const std::vector<int> one(6, 1);
  EXPECT_THROW(AnovaFSelect(x, one, 2), ConfigError);
}

}  // namespace
}  // namespace trustaudit
