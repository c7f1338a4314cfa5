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
#include <string>
#include <unistd.h>
#include <vector>

#include <gtest/gtest.h>

#include "cli.h"
#include "fixture.h"
#include "trustaudit/aggregation.h"

namespace trustaudit::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "trustaudit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = CliMain(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("trustaudit_cli_test_" + std::to_string(getpid()));
    fs::create_directories(dir_);
    testing::WriteFixtureFiles(dir_, 400, 41);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string P(const std::string& name) { return (dir_ / name).string(); }
  static void Write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
  }

  static inline fs::path dir_;
};

TEST_F(CliTest, UsageErrorsAndHelp) {
  EXPECT_EQ(Invoke({}).code, 1);
  EXPECT_EQ(Invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(Invoke({"rank", "--records", "x"}).code, 1);
  const auto help = Invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("audit"), std::string::npos);
}

TEST_F(CliTest, MissingConfigIsExitOne) {
  const auto r = Invoke({"audit", "--config", P("nope.json"), "--out", P("out")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("config error"), std::string::npos);
}

TEST_F(CliTest, UnwritableOutputIsExitTwo) {
  const auto r = Invoke({"generate", "--real", P("real.csv"), "--schema", P("schema.json"), "--rows",
                      "10", "--seed", "1", "--out", P("missing_dir/x.csv")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, GenerateIsSeeded) {
  const std::vector<std::string> args = {"generate", "--real", P("real.csv"), "--schema",
                                         P("schema.json"), "--rows", "25", "--seed", "9"};
  const auto a = Invoke(args);
  const auto b = Invoke(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  std::istringstream in(a.out);
  const auto data = ParseCsv(in, LoadSchema(P("schema.json")));
  EXPECT_EQ(data.num_rows(), 25u);
  auto dp = args;
  dp.insert(dp.end(), {"--dp-epsilon", "2", "--out", P("dp.csv")});
  ASSERT_EQ(Invoke(dp).code, 0);
  EXPECT_EQ(LoadCsv(P("dp.csv"), LoadSchema(P("schema.json"))).num_rows(), 25u);
  auto model = args;
  model.insert(model.end(), {"--save-model", P("model.json"), "--out", P("g.csv")});
  ASSERT_EQ(Invoke(model).code, 0);
  EXPECT_TRUE(fs::exists(P("model.json")));
}

TEST_F(CliTest, RankMatchesLibrary) {
  std::vector<MetricRecord> recs;
  auto add = [&](const std::string& metric, Dimension d, int pol, double v, const std::string& m,
                 int fold, Split split) {
    MetricRecord r;
    r.metric = metric;
    r.dimension = d;
    r.polarity = pol;
    r.value = v;
    r.context = {m, m, fold, 0, 0};
    r.split = split;
    recs.push_back(r);
  };
  for (int f = 0; f < 3; ++f) {
    add("CC_LR_accuracy", Dimension::kUtility, 1, 0.7 + 0.01 * f, "alpha", f, Split::kTest);
    add("CC_LR_accuracy", Dimension::kUtility, 1, 0.8 - 0.02 * f, "beta", f, Split::kTest);
    add("CC_LR_accuracy", Dimension::kUtility, 1, 0.6, "gamma", f, Split::kTest);
    add("FID", Dimension::kFidelity, -1, 1.0 + f, "alpha", f, Split::kNone);
    add("FID", Dimension::kFidelity, -1, 2.0, "beta", f, Split::kNone);
    add("FID", Dimension::kFidelity, -1, 0.5, "gamma", f, Split::kNone);
  }
  {
    std::ofstream f(dir_ / "records.jsonl");
    WriteRecordsJsonl(recs, f);
  }
  Write("profiles.json", R"({"U": [0,0,1,0,0], "FU": "(1,0,1,0,0)/2"})");
  const auto r = Invoke({"rank", "--records", P("records.jsonl"), "--profiles", P("profiles.json"),
                      "--alpha", "0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto expected = RankRecords(recs, LoadProfiles(P("profiles.json")), 0.1);
  size_t pos = 0;
  for (const auto& pr : expected) {
    for (const auto& e : pr.entries) {
      const auto next = r.out.find(" " + e.model_id + " ", pos);
      ASSERT_NE(next, std::string::npos) << pr.profile.name << " " << e.model_id;
      pos = next;
    }
  }
  EXPECT_EQ(Invoke({"rank", "--records", P("records.jsonl"), "--profiles", P("profiles.json"),
                 "--alpha", "-1"}).code, 1);
}

TEST_F(CliTest, SelectUsesPresetOrFile) {
  std::vector<MetricRecord> recs;
  for (int c = 0; c < 3; ++c) {
    MetricRecord r;
    r.metric = "CC_LR_accuracy";
    r.dimension = Dimension::kUtility;
    r.value = c == 1 ? 0.9 : 0.5;
    r.context = {"m", "m", 0, c, 0};
    r.split = Split::kVal;
    recs.push_back(r);
  }
  {
    std::ofstream f(dir_ / "val.jsonl");
    WriteRecordsJsonl(recs, f);
  }
  const auto r = Invoke({"select", "--records", P("val.jsonl"), "--profile", "U"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("m fold 0 checkpoint 1"), std::string::npos) << r.out;
  EXPECT_EQ(Invoke({"select", "--records", P("val.jsonl"), "--profile", "nope"}).code, 1);
}

TEST_F(CliTest, AuditWritesReports) {
  Write("audit.json", R"({
    "data": {"real": "real.csv", "schema": "schema.json",
             "synthetic": [{"id": "cop", "generator": "gaussian_copula"},
                           {"id": "shuf", "generator": "column_shuffle"}]},
    "folds": {"count": 2},
    "metrics": {"classifiers": ["LR"], "attack_classifiers": ["LR"], "rff_features": 32,
                "mmd_permutations": 10},
    "profiles": ["all", "U"]
  })");
  const auto r = Invoke({"audit", "--config", P("audit.json"), "--out", P("audit_out")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"report.json", "report.md", "records.jsonl"})
    EXPECT_TRUE(fs::exists(dir_ / "audit_out" / f)) << f;
  EXPECT_NE(r.out.find("profile U"), std::string::npos);
}

TEST_F(CliTest, CollapsePrintsTrend) {
  const auto r = Invoke({"collapse", "--real", P("real.csv"), "--schema", P("schema.json"),
                      "--generations", "2", "--seed", "3", "--out", P("collapse.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("spearman(fidelity, generation)"), std::string::npos);
  EXPECT_TRUE(fs::exists(P("collapse.json")));
}

}  // namespace
}  // namespace trustaudit::cli
