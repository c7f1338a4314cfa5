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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fixture.h"
#include "oracles.h"
#include "trustaudit/synthgen.h"

namespace trustaudit::synthgen {
namespace {

DatasetSchema ThreeColumns() {
  DatasetSchema s;
  s.columns = {{"a", ColumnKind::kContinuous}, {"b", ColumnKind::kContinuous},
               {"g", ColumnKind::kCategorical}, {"y", ColumnKind::kCategorical}};
  s.target = "y";
  s.protected_column = "g";
  s.privileged_value = "p";
  return s;
}

TabularDataset Uniforms(size_t n, bool comonotone, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u;
  std::vector<Column> cols(4);
  for (size_t i = 0; i < n; ++i) {
    const double a = u(rng);
    cols[0].numeric.push_back(a);
    cols[1].numeric.push_back(comonotone ? std::exp(3 * a) : u(rng));
    cols[2].categorical.push_back(u(rng) < 0.3 ? "p" : "q");
    cols[3].categorical.push_back(u(rng) < 0.5 ? "no" : "yes");
  }
  return TabularDataset(ThreeColumns(), std::move(cols));
}

double KsStatistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

TEST(Copula, IndependentColumnsHaveSmallCorrelation) {
  const auto model = FitGaussianCopula(Uniforms(5000, false, 1), 2);
  const auto& r = model.correlation();
  for (int i = 0; i < r.rows(); ++i) {
    EXPECT_EQ(r(i, i), 1.0);
    for (int j = 0; j < r.cols(); ++j) {
      EXPECT_EQ(r(i, j), r(j, i));
      if (i != j) EXPECT_LE(std::abs(r(i, j)), 0.08);
    }
  }
}

TEST(Copula, ComonotonePair) {
  const auto model = FitGaussianCopula(Uniforms(2000, true, 3), 4);
  EXPECT_GE(model.correlation()(0, 1), 0.95);
}

TEST(Copula, SamplingIsSeededAndMatchesMarginal) {
  const auto train = Uniforms(5000, true, 5);
  const auto model = FitGaussianCopula(train, 6);
  const auto a = SampleGaussianCopula(model, 5000, 7);
  const auto b = SampleGaussianCopula(model, 5000, 7);
  std::ostringstream sa, sb;
  WriteCsv(a, sa);
  WriteCsv(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
  // Two-sided KS at level 0.01: c(alpha) = 1.628.
  const double n = 5000;
  const double critical = 1.628 * std::sqrt((n + n) / (n * n));
  EXPECT_LT(KsStatistic(train.column(1).numeric, a.column(1).numeric), critical);
  EXPECT_LT(KsStatistic(train.column(0).numeric, a.column(0).numeric), critical);
}

TEST(Copula, PreservesCategorySupportAndConstants) {
  auto train = testing::MakeFixture(500, 8);
  auto cols = train.columns();
  const int hours = train.schema().IndexOf("hours");
  std::fill(cols[hours].numeric.begin(), cols[hours].numeric.end(), 40.0);
  const TabularDataset data(train.schema(), cols);
  const auto model = FitGaussianCopula(data, 9);
  ASSERT_TRUE(model.marginals()[hours]->constant);
  const auto s = SampleGaussianCopula(model, 2000, 10);
  for (size_t r = 0; r < s.num_rows(); ++r) EXPECT_EQ(s.numeric(r, hours), 40.0);
  for (size_t c = 0; c < data.num_columns(); ++c) {
    if (data.schema().columns[c].kind != ColumnKind::kCategorical) continue;
    const std::set<std::string> support(cols[c].categorical.begin(), cols[c].categorical.end());
    for (const auto& v : s.column(c).categorical) EXPECT_TRUE(support.count(v)) << v;
  }
}

TEST(Copula, ModelJsonRoundTrip) {
  const auto model = FitGaussianCopula(testing::MakeFixture(200, 11), 12);
  const auto back = GaussianCopulaModel::FromJson(model.ToJson());
  EXPECT_EQ(back.ToJson(), model.ToJson());
  std::ostringstream a, b;
  WriteCsv(SampleGaussianCopula(model, 50, 1), a);
  WriteCsv(SampleGaussianCopula(back, 50, 1), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Simplex, Examples) {
  const std::vector<double> on = {0.2, 0.3, 0.5};
  EXPECT_EQ(ProjectToSimplex(on), on);
  const auto p = ProjectToSimplex(std::vector<double>{1.2, -0.1, 0.3});
  EXPECT_NEAR(p[0], 0.95, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
  EXPECT_NEAR(p[2], 0.05, 1e-12);
}

TEST(Simplex, MatchesExhaustiveCharacterization) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.2, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(1 + trial % 10);
    for (auto& x : v) x = n(rng);
    const auto got = ProjectToSimplex(v);
    const auto want = oracle::SimplexProjection(v);
    double total = 0;
    for (size_t i = 0; i < v.size(); ++i) {
      EXPECT_NEAR(got[i], want[i], 1e-12);
      EXPECT_GE(got[i], 0.0);
      total += got[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(PrivatePerturb, InjectedNoiseAndLargeEpsilon) {
  const std::vector<double> probs = {0.5, 0.5};
  const std::vector<double> noise = {0.4, -0.4};
  const auto p = PrivateSamplePerturb(probs, noise);
  EXPECT_NEAR(p[0], 0.9, 1e-15);
  EXPECT_NEAR(p[1], 0.1, 1e-15);
  PrivateSamplerConfig cfg{.epsilon = 1e300, .total_length = 3};
  const std::vector<double> q = {0.2, 0.7, 0.1};
  const auto out = PrivateSamplePerturb(q, cfg, 1);
  for (size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(out[i], q[i], 1e-12);
  EXPECT_THROW((PrivateSamplerConfig{.epsilon = 0.0}.Validate()), ConfigError);
  EXPECT_DOUBLE_EQ((PrivateSamplerConfig{.epsilon = 0.5, .total_length = 4}.NoiseScale(8)), 2.0);
}

TEST(PrivatePerturb, TotalVariationMatchesLaplaceOracle) {
  // For two entries the projected output moves by min(|D|, 1) / 2 in total
  // variation, D the difference of two Laplace(b) draws, whose tail is
  // P(|D| > t) = (1 + t / (2b)) exp(-t / b).
  const PrivateSamplerConfig cfg{.epsilon = 0.1, .total_length = 10};
  const double b = cfg.NoiseScale(2);
  ASSERT_DOUBLE_EQ(b, 100.0);
  const std::vector<double> probs = {0.5, 0.5};
  double mc = 0;
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    const auto p = PrivateSamplePerturb(probs, cfg, DeriveSeed(17, {static_cast<uint64_t>(s)}));
    mc += 0.5 * (std::abs(p[0] - 0.5) + std::abs(p[1] - 0.5));
  }
  mc /= draws;
  double analytic = 0;
  const int steps = 100000;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) / steps;
    analytic += (1 + t / (2 * b)) * std::exp(-t / b) / steps;
  }
  analytic *= 0.5;
  EXPECT_GT(mc, 0.0);
  EXPECT_NEAR(mc, analytic, 0.005);
}

TEST(IndependentSampler, ProbabilitiesAndSupport) {
  const auto train = testing::MakeFixture(600, 14);
  const IndependentCategoricalSampler sampler(train, 10);
  for (const auto& p : sampler.probabilities()) {
    double total = 0;
    for (double x : p) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  PrivateSamplerConfig cfg{.epsilon = 1.0,
                           .total_length = static_cast<int>(sampler.quantizer().num_fields())};
  const auto s = sampler.Sample(300, 15, cfg);
  EXPECT_EQ(s.num_rows(), 300u);
  const auto tokens = sampler.quantizer().Quantize(s);
  for (size_t f = 0; f < sampler.quantizer().num_fields(); ++f) {
    const auto& fq = sampler.quantizer().field(f);
    if (fq.kind != ColumnKind::kCategorical) continue;
    for (int r = 0; r < tokens.rows(); ++r) EXPECT_NE(tokens(r, f), fq.unseen_token());
  }
}

TEST(Retrain, SingleGenerationIsOrdinaryFit) {
  const auto train = testing::MakeFixture(300, 16);
  const auto run = IterativeRetrain(train, 1, 200, 17);
  ASSERT_EQ(run.generations.size(), 1u);
  const auto model = FitGaussianCopula(train, DeriveSeed(17, {0, 0}));
  std::ostringstream a, b;
  WriteCsv(run.generations[0], a);
  WriteCsv(SampleGaussianCopula(model, 200, DeriveSeed(17, {0, 1})), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Retrain, ReproducibleChain) {
  const auto train = testing::MakeFixture(300, 18);
  const auto a = IterativeRetrain(train, 3, 150, 19);
  const auto b = IterativeRetrain(train, 3, 150, 19);
  ASSERT_EQ(a.generations.size(), 3u);
  for (int g = 0; g < 3; ++g) {
    std::ostringstream x, y;
    WriteCsv(a.generations[g], x);
    WriteCsv(b.generations[g], y);
    EXPECT_EQ(x.str(), y.str());
  }
  EXPECT_THROW(IterativeRetrain(train, 0, 10, 1), ConfigError);
}

}  // namespace
}  // namespace trustaudit::synthgen
