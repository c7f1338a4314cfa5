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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <gtest/gtest.h>

#include "fixture.h"
#include "trustaudit/report.h"

namespace trustaudit::report {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ReportTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("trustaudit_report_test_" + std::to_string(getpid()));
    fs::create_directories(dir_);
    testing::WriteFixtureFiles(dir_, 600, 31);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static json BaseConfig() {
    return json::parse(R"({
      "data": {
        "real": "real.csv",
        "schema": "schema.json",
        "synthetic": [
          {"id": "copy", "generator": "copy"},
          {"id": "cop-0", "model": "copula", "checkpoint": 0, "generator": "gaussian_copula"},
          {"id": "cop-1", "model": "copula", "checkpoint": 1, "generator": "column_shuffle"}
        ]
      },
      "folds": {"count": 2},
      "metrics": {
        "rff_features": 64, "mmd_permutations": 20, "classifiers": ["LR", "MLP"],
        "mlp_seeds": 1, "mlp": {"max_epochs": 4}, "privacy_k": [1, 3]
      },
      "profiles": ["all", "U", "PU"],
      "seeds": {"base": 5}
    })");
  }

  static AuditReport RunWith(json j, int workers) {
    j["workers"] = workers;
    return RunAudit(AuditConfig::FromJson(j, dir_));
  }

  static inline fs::path dir_;
};

TEST_F(ReportTest, DeterministicAcrossWorkerCounts) {
  const auto a = RunWith(BaseConfig(), 1);
  const auto b = RunWith(BaseConfig(), 3);
  auto ja = ReportToJson(a);
  auto jb = ReportToJson(b);
  // The worker count itself is reported, and is part of the config.
  for (auto* j : {&ja, &jb}) {
    for (const char* key : {"workers", "config_digest", "config"}) (*j)["metadata"].erase(key);
  }
  EXPECT_EQ(ja.dump(), jb.dump());
  auto ma = RenderMarkdown(a), mb = RenderMarkdown(b);
  EXPECT_EQ(ma.substr(ma.find("## Profiles")), mb.substr(mb.find("## Profiles")));
}

TEST_F(ReportTest, StructureAndWarnings) {
  const auto rep = RunWith(BaseConfig(), 0);
  const auto j = ReportToJson(rep);
  for (const char* key : {"format_version", "metadata", "profiles", "rankings", "breakdown", "warnings"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_FALSE(j["metadata"].contains("generated_at"));
  ASSERT_EQ(rep.rankings.size(), 3u);
  for (const auto& r : rep.rankings) {
    ASSERT_EQ(r.entries.size(), 2u);
    for (const auto& e : r.entries) {
      EXPECT_GT(e.tau_mean, 0.0);
      EXPECT_LE(e.tau_mean, 1.0);
      if (e.model_id == "copula") EXPECT_EQ(e.checkpoints.size(), 2u);
    }
  }
  bool replicated = false;
  for (const auto& w : rep.warnings) replicated |= w.code == "replicated-rows" && w.model_id == "copy";
  EXPECT_TRUE(replicated);
  const auto md = RenderMarkdown(rep);
  for (const char* h : {"## Metadata", "## Profiles", "## Ranked Lists", "## Dimension Index Tables",
                        "## Metric Breakdown", "## Warnings", "## Design-Decision Disclosure"})
    EXPECT_NE(md.find(h), std::string::npos) << h;
}

TEST_F(ReportTest, RecordsReproduceRanking) {
  const auto rep = RunWith(BaseConfig(), 0);
  std::stringstream buf;
  WriteRecordsJsonl(rep.records, buf);
  const auto again = ReportFromRecords(ReadRecordsJsonl(buf), rep.profiles, rep.alpha);
  ASSERT_EQ(again.rankings.size(), rep.rankings.size());
  for (size_t p = 0; p < rep.rankings.size(); ++p) {
    ASSERT_EQ(again.rankings[p].entries.size(), rep.rankings[p].entries.size());
    for (size_t i = 0; i < rep.rankings[p].entries.size(); ++i) {
      EXPECT_EQ(again.rankings[p].entries[i].model_id, rep.rankings[p].entries[i].model_id);
      EXPECT_DOUBLE_EQ(again.rankings[p].entries[i].tau_mean, rep.rankings[p].entries[i].tau_mean);
    }
  }
}

TEST_F(ReportTest, ConfigErrors) {
  auto expect_error = [](json j) { EXPECT_THROW(AuditConfig::FromJson(j, dir_), ConfigError) << j.dump(); };
  auto j = BaseConfig();
  j["bogus"] = 1;
  expect_error(j);
  j = BaseConfig();
  j["data"]["synthetic"][0]["path"] = "real.csv";
  expect_error(j);
  j = BaseConfig();
  j["data"]["synthetic"][0]["generator"] = "private_independent";
  expect_error(j);
  j = BaseConfig();
  j["data"]["synthetic"][2]["checkpoint"] = 0;
  expect_error(j);
  j = BaseConfig();
  j["data"]["synthetic"][0]["generator"] = "gan";
  expect_error(j);
  j = BaseConfig();
  j["ranking"] = {{"alpha", -1}};
  expect_error(j);
  j = BaseConfig();
  j["metrics"]["mlp"]["unknown"] = 3;
  expect_error(j);
  EXPECT_NO_THROW(AuditConfig::FromJson(BaseConfig(), dir_));
}

TEST_F(ReportTest, PrivateSamplerIsDisclosed) {
  auto j = BaseConfig();
  j["data"]["synthetic"] = json::array({{{"id", "dp"}, {"generator", "private_independent"}, {"dp_epsilon", 1.0}}});
  j["metrics"]["classifiers"] = json::array({"LR"});
  j["metrics"]["attack_classifiers"] = json::array({"LR"});
  j["profiles"] = json::array({"all"});
  const auto rep = RunWith(j, 0);
  EXPECT_TRUE(rep.metadata.contains("private_sampler"));
  EXPECT_EQ(rep.rankings[0].entries.size(), 1u);
}

TEST(Formatting, IndexAndRounding) {
  EXPECT_EQ(FormatIndex(0.4213, 0.0891), "0.42 (0.09)");
  EXPECT_EQ(FormatIndex(-0.0001, 0.0), "0.00 (0.00)");
  EXPECT_DOUBLE_EQ(Round4(0.123456), 0.1235);
}

TEST(Spearman, PerfectTiedAndConstant) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> down = {9, 7, 5, 3, 1};
  EXPECT_DOUBLE_EQ(SpearmanCorrelation(x, down), -1.0);
  EXPECT_DOUBLE_EQ(SpearmanCorrelation(x, x), 1.0);
  const std::vector<double> tied = {1, 1, 2, 2, 3};
  EXPECT_GT(SpearmanCorrelation(x, tied), 0.9);
  const std::vector<double> flat = {2, 2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(SpearmanCorrelation(x, flat), 0.0);
}

}  // namespace
}  // namespace trustaudit::report
