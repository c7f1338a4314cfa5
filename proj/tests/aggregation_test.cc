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
#include <sstream>

#include <gtest/gtest.h>

#include "trustaudit/aggregation.h"

namespace trustaudit {
namespace {

MetricRecord Rec(std::string metric, double v, std::string model, int fold, int checkpoint,
                 Split split) {
  MetricRecord r;
  r.metric = std::move(metric);
  const auto info = ClassifyMetric(r.metric);
  if (info) {
    r.dimension = info->dimension;
    r.polarity = info->polarity;
  }
  r.value = v;
  r.context.dataset_id = model;
  r.context.model_id = std::move(model);
  r.context.fold_id = fold;
  r.context.checkpoint_id = checkpoint;
  r.split = split;
  return r;
}

TEST(Polarity, Alignment) {
  auto fid = Rec("FID", 2.0, "m", 0, 0, Split::kNone);
  EXPECT_EQ(AlignPolarity(fid), -2.0);
  auto acc = Rec("CC_MLP_accuracy", 0.9, "m", 0, 0, Split::kTest);
  EXPECT_EQ(AlignPolarity(acc), 0.9);
  acc.value.reset();
  EXPECT_FALSE(AlignPolarity(acc).has_value());
}

TEST(Registry, KnownNames) {
  EXPECT_EQ(ClassifyMetric("FID")->dimension, Dimension::kFidelity);
  EXPECT_EQ(ClassifyMetric("ReplicatedRows")->polarity, -1);
  EXPECT_EQ(ClassifyMetric("CC_LR_EOD")->dimension, Dimension::kFairness);
  EXPECT_FALSE(ClassifyMetric("no_such_metric").has_value());
}

TEST(Ecdf, CountingAndClamp) {
  const std::vector<double> pool = {0.1, 0.2, 0.3};
  EXPECT_DOUBLE_EQ(EcdfEval(pool, 0.2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(EcdfEval(pool, 0.0), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(EcdfEval(pool, 0.3), 1.0);
}

TEST(Pool, EvaluateNeedsFreeze) {
  MetricPool p;
  p.Add("m", 3);
  p.Add("m", 1);
  p.Add("m", 2);
  p.Freeze();
  EXPECT_TRUE(p.Has("m"));
  EXPECT_DOUBLE_EQ(p.Evaluate("m", 2), 2.0 / 3.0);
  EXPECT_EQ(p.values().at("m"), (std::vector<double>{1, 2, 3}));
}

TEST(DimensionIndex, GeometricMean) {
  const std::vector<double> half = {0.5, 0.5, 0.5};
  EXPECT_NEAR(DimensionIndex(half), 0.5, 1e-15);
  const std::vector<double> u = {0.25, 1.0}, beta = {0.5, 0.5};
  EXPECT_NEAR(DimensionIndex(u, beta), 0.5, 1e-15);
  EXPECT_THROW(DimensionIndex(std::vector<double>{}), std::exception);
}

TEST(Trust, OneHotAndUniform) {
  const auto u = PresetProfile("U");
  DimensionValues pi{};
  pi[static_cast<int>(Dimension::kUtility)] = 0.6;
  EXPECT_NEAR(TrustworthinessIndex(pi, u), 0.6, 1e-15);
  const auto all = PresetProfile("all");
  const DimensionValues q = {0.25, 1.0, 1.0, 1.0, 1.0};
  EXPECT_NEAR(TrustworthinessIndex(q, all), std::pow(0.25, 0.2), 1e-12);
  EXPECT_NEAR(TrustworthinessIndex(q, all), 0.7579, 1e-4);
}

TEST(Profiles, ParsingAndNotation) {
  const auto p = TrustProfile::Parse("x", "(50,100,100,50,50)/350");
  EXPECT_EQ(p.RawNotation(), "(50,100,100,50,50)/350");
  EXPECT_NEAR(p.weight(Dimension::kPrivacy), 100.0 / 350.0, 1e-15);
  const auto q = TrustProfile::Parse("y", nlohmann::json::array({1, 1, 0, 0, 0}));
  EXPECT_DOUBLE_EQ(q.weight(Dimension::kFidelity), 0.5);
  EXPECT_THROW(TrustProfile::Parse("z", "(1,2,3)"), ConfigError);
  EXPECT_THROW(TrustProfile::Parse("z", "(0,0,0,0,0)"), ConfigError);
  EXPECT_EQ(PresetProfiles().size(), 10u);
  EXPECT_THROW(PresetProfile("nope"), ConfigError);
  const auto ordered = ProfilesFromJson(nlohmann::ordered_json::parse(
      R"js({"b": [0,0,1,0,0], "a": "(1,0,0,0,0)"})js"));
  ASSERT_EQ(ordered.size(), 2u);
  EXPECT_EQ(ordered[0].name, "b");
}

TEST(GeoMeanDev, Examples) {
  const std::vector<double> same = {0.4, 0.4, 0.4};
  const auto a = GeoMeanDeviation(same);
  EXPECT_NEAR(a.mean, 0.4, 1e-15);
  EXPECT_NEAR(a.deviation, 0.0, 1e-15);
  const std::vector<double> v = {0.25, 1.0};
  const auto b = GeoMeanDeviation(v);
  EXPECT_NEAR(b.mean, 0.5, 1e-15);
  EXPECT_NEAR(b.deviation, 0.15625, 1e-15);
}

TEST(Rank, UncertaintyScore) {
  const std::vector<RankInput> one = {{"m", 0.5, 0.0}};
  EXPECT_NEAR(RankWithUncertainty(one, 0.0)[0].score, std::log(0.5), 1e-15);
  const std::vector<RankInput> two = {{"m", 0.5, 0.01}};
  EXPECT_NEAR(RankWithUncertainty(two, 0.1)[0].score, -0.2326, 1e-4);
  const std::vector<RankInput> tie = {{"b", 0.5, 0.01}, {"a", 0.5, 0.01}, {"c", 0.9, 0.5}};
  const auto r = RankWithUncertainty(tie, 0.0);
  EXPECT_EQ(r[0].model_id, "c");
  EXPECT_EQ(r[1].model_id, "a");
  EXPECT_EQ(r[2].model_id, "b");
}

TEST(Checkpoint, ArgmaxEarliestTie) {
  EXPECT_EQ(SelectCheckpoint(std::vector<double>{0.3}), 0);
  EXPECT_EQ(SelectCheckpoint(std::vector<double>{0.3, 0.7, 0.7, 0.1}), 1);
}

TEST(Overlap, Examples) {
  const std::vector<std::string> a = {"a", "b", "c"}, b = {"a", "c", "d"}, c = {"x", "y", "z"};
  EXPECT_DOUBLE_EQ(OverlapAtK(a, a, 3), 1.0);
  EXPECT_DOUBLE_EQ(OverlapAtK(a, a, 1), 1.0);
  EXPECT_DOUBLE_EQ(OverlapAtK(a, b, 3), 0.5);
  EXPECT_DOUBLE_EQ(OverlapAtK(a, c, 3), 0.0);
}

TEST(Records, JsonlRoundTripKeepsMissing) {
  std::vector<MetricRecord> recs = {Rec("FID", 1.5, "m", 2, 1, Split::kNone),
                                    Rec("CC_MLP_accuracy_0", 0.8, "n", 0, 0, Split::kVal)};
  recs[1].value.reset();
  recs[1].context.classifier_seed = 3;
  std::stringstream buf;
  WriteRecordsJsonl(recs, buf);
  const auto back = ReadRecordsJsonl(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].metric, "FID");
  EXPECT_EQ(back[0].value, 1.5);
  EXPECT_EQ(back[0].context.fold_id, 2);
  EXPECT_EQ(back[0].context.checkpoint_id, 1);
  EXPECT_FALSE(back[1].value.has_value());
  EXPECT_EQ(back[1].split, Split::kVal);
  EXPECT_EQ(back[1].context.classifier_seed, 3);
  std::istringstream bad("{\"metric\": 3}\n");
  EXPECT_THROW(ReadRecordsJsonl(bad), ConfigError);
}

TEST(Checkpoints, DominantCheckpointWinsForEveryProfile) {
  std::vector<MetricRecord> recs;
  for (int fold = 0; fold < 2; ++fold) {
    for (int ckpt = 0; ckpt < 2; ++ckpt) {
      const double good = ckpt == 1 ? 1.0 : 0.0;
      recs.push_back(Rec("FID", 5 - good, "m", fold, ckpt, Split::kNone));
      recs.push_back(Rec("ReplicatedRows", 10 - good, "m", fold, ckpt, Split::kNone));
      recs.push_back(Rec("CC_LR_accuracy", 0.5 + good * 0.1, "m", fold, ckpt, Split::kVal));
      recs.push_back(Rec("CC_LR_EOD", 0.3 - good * 0.1, "m", fold, ckpt, Split::kVal));
      recs.push_back(Rec("CC_LR_delta_accuracy", 0.2 - good * 0.1, "m", fold, ckpt, Split::kVal));
    }
  }
  for (const auto& p : PresetProfiles()) {
    const auto choice = SelectCheckpoints(recs, p);
    ASSERT_EQ(choice.size(), 2u);
    for (const auto& c : choice) EXPECT_EQ(c.checkpoint_id, 1) << p.name;
  }
}

TEST(RankRecords, BetterModelRanksFirst) {
  std::vector<MetricRecord> recs;
  for (int fold = 0; fold < 3; ++fold) {
    for (const auto& [model, q] : {std::pair{"good", 1.0}, std::pair{"bad", 0.0}}) {
      recs.push_back(Rec("FID", 3 - q - 0.1 * fold, model, fold, 0, Split::kNone));
      recs.push_back(Rec("CC_LR_accuracy", 0.6 + 0.2 * q + 0.01 * fold, model, fold, 0, Split::kTest));
    }
  }
  const std::vector<TrustProfile> profiles = {PresetProfile("U"),
                                              TrustProfile::FromRaw("F", {100, 0, 0, 0, 0})};
  const auto ranked = RankRecords(recs, profiles, 0.0);
  ASSERT_EQ(ranked.size(), 2u);
  for (const auto& r : ranked) {
    ASSERT_EQ(r.entries.size(), 2u);
    EXPECT_EQ(r.entries[0].model_id, "good");
    EXPECT_EQ(r.entries[0].tau_per_fold.size(), 3u);
    EXPECT_GT(r.entries[0].tau_mean, r.entries[1].tau_mean);
    EXPECT_LE(r.entries[0].tau_mean, 1.0);
  }
}

TEST(RankRecords, MissingRequiredDimensionIsAnError) {
  std::vector<MetricRecord> recs = {Rec("FID", 1.0, "m", 0, 0, Split::kNone)};
  const std::vector<TrustProfile> profiles = {PresetProfile("U")};
  EXPECT_ANY_THROW(RankRecords(recs, profiles, 0.0));
}

}  // namespace
}  // namespace trustaudit
