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
#include <numeric>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fixture.h"
#include "trustaudit/core_data.h"

namespace trustaudit {
namespace {

DatasetSchema SmallSchema() {
  DatasetSchema s;
  s.columns = {{"id", ColumnKind::kContinuous},
               {"x", ColumnKind::kContinuous},
               {"g", ColumnKind::kCategorical},
               {"y", ColumnKind::kCategorical}};
  s.target = "y";
  s.protected_column = "g";
  s.privileged_value = "a";
  s.id_columns = {"id"};
  return s;
}

TabularDataset Parse(const std::string& text, const DatasetSchema& schema) {
  std::istringstream in(text);
  return ParseCsv(in, schema);
}

TEST(Csv, ThreeValidRows) {
  const auto d = Parse("id,x,g,y\n1,0.5,a,no\n2,1.5,b,yes\n3,2,a,yes\n", SmallSchema());
  EXPECT_EQ(d.num_rows(), 3u);
  EXPECT_EQ(d.dropped_rows(), 0u);
  EXPECT_DOUBLE_EQ(d.numeric(1, 1), 1.5);
  EXPECT_EQ(d.category(2, 3), "yes");
}

TEST(Csv, QuotedFieldsAndCrlf) {
  std::istringstream in("a,b\r\n\"x,\"\"y\"\"\",\"line\nbreak\"\r\n");
  const auto rec = ReadCsvRecords(in);
  ASSERT_EQ(rec.size(), 2u);
  EXPECT_EQ(rec[1][0], "x,\"y\"");
  EXPECT_EQ(rec[1][1], "line\nbreak");
}

TEST(Csv, MissingCellsAreDropped) {
  const auto d = Parse("id,x,g,y\n1,?,a,no\n2,1.5,b,yes\n3,2,,yes\n4,abc,a,no\n", SmallSchema());
  EXPECT_EQ(d.num_rows(), 1u);
  EXPECT_EQ(d.dropped_rows(), 3u);
}

TEST(Csv, EveryRowMissingTargetIsAnError) {
  try {
    Parse("id,x,g,y\n1,1,a,\n2,2,b,NA\n", SmallSchema());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("zero surviving rows"), std::string::npos);
  }
}

TEST(Csv, HeaderMismatch) {
  EXPECT_THROW(Parse("id,x,y,g\n1,1,a,b\n", SmallSchema()), ConfigError);
  EXPECT_THROW(Parse("id,x,g\n1,1,a\n", SmallSchema()), ConfigError);
}

TEST(Csv, WriteThenParseRoundTrips) {
  const auto a = testing::MakeFixture(50, 3);
  std::stringstream buf;
  WriteCsv(a, buf);
  const auto b = ParseCsv(buf, a.schema());
  ASSERT_EQ(a.num_rows(), b.num_rows());
  for (size_t r = 0; r < a.num_rows(); ++r) EXPECT_EQ(CanonicalRow(a, r), CanonicalRow(b, r));
}

TEST(Schema, ValidateRejectsBadRoles) {
  auto s = SmallSchema();
  s.target = "x";  // continuous target
  EXPECT_THROW(s.Validate(), ConfigError);
  s = SmallSchema();
  s.columns.push_back({"x", ColumnKind::kCategorical});
  EXPECT_THROW(s.Validate(), ConfigError);
  s = SmallSchema();
  s.protected_column = "nope";
  EXPECT_THROW(s.Validate(), ConfigError);
}

TEST(Schema, JsonRoundTrip) {
  const auto s = testing::FixtureSchema();
  const auto t = DatasetSchema::FromJson(s.ToJson());
  EXPECT_EQ(t.ToJson(), s.ToJson());
  EXPECT_EQ(t.IndexOf("label"), s.IndexOf("label"));
  EXPECT_EQ(t.IndexOf("missing"), -1);
}

TEST(Labels, PositiveLabelAndIndicator) {
  const auto d = Parse("id,x,g,y\n1,0,a,no\n2,1,b,yes\n3,2,a,yes\n", SmallSchema());
  EXPECT_EQ(ResolvePositiveLabel(d), "yes");
  EXPECT_EQ(BinaryLabels(d, "yes"), (std::vector<int>{0, 1, 1}));
  EXPECT_EQ(ProtectedIndicator(d), (std::vector<int>{1, 0, 1}));
  EXPECT_NO_THROW(CheckLabelDiversity(d));
  const auto one = Parse("id,x,g,y\n1,0,a,no\n2,1,b,no\n", SmallSchema());
  EXPECT_THROW(CheckLabelDiversity(one), ConfigError);
}

TEST(Folds, SizesAndDisjointness) {
  const auto folds = SplitFolds(100, SplitRatios{}, 1, 42);
  ASSERT_EQ(folds.size(), 1u);
  const auto& f = folds[0];
  EXPECT_EQ(f.train.size(), 80u);
  EXPECT_EQ(f.val.size(), 10u);
  EXPECT_EQ(f.test.size(), 10u);
  std::set<size_t> all(f.train.begin(), f.train.end());
  all.insert(f.val.begin(), f.val.end());
  all.insert(f.test.begin(), f.test.end());
  EXPECT_EQ(all.size(), 100u);
}

TEST(Folds, Deterministic) {
  const auto a = SplitFolds(1000, SplitRatios{}, 3, 9);
  const auto b = SplitFolds(1000, SplitRatios{}, 3, 9);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a[i].train, b[i].train);
    EXPECT_EQ(a[i].val, b[i].val);
    EXPECT_EQ(a[i].test, b[i].test);
  }
  EXPECT_NE(a[0].test, a[1].test);
}

TEST(Folds, TooFewRows) { EXPECT_THROW(SplitFolds(5, SplitRatios{}, 1, 0), ConfigError); }

TabularDataset OneNumericColumn(std::vector<double> values) {
  DatasetSchema s;
  s.columns = {{"v", ColumnKind::kContinuous}, {"g", ColumnKind::kCategorical},
               {"y", ColumnKind::kCategorical}};
  s.target = "y";
  s.protected_column = "g";
  s.privileged_value = "a";
  const size_t n = values.size();
  std::vector<Column> cols(3);
  cols[0].numeric = std::move(values);
  for (size_t i = 0; i < n; ++i) {
    cols[1].categorical.push_back(i % 2 ? "a" : "b");
    cols[2].categorical.push_back(i % 3 ? "p" : "q");
  }
  return TabularDataset(s, std::move(cols));
}

TEST(Quantizer, EqualFrequencyBins) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  const auto d = OneNumericColumn(v);
  const auto q = FitQuantizer(d, 10);
  ASSERT_EQ(q.field(0).vocab_size(), 10);
  const auto tokens = q.Quantize(d);
  std::vector<int> counts(10, 0);
  for (int r = 0; r < tokens.rows(); ++r) ++counts[tokens(r, 0)];
  for (int c : counts) EXPECT_EQ(c, 10);
  EXPECT_TRUE(q.warnings().empty());
}

TEST(Quantizer, InteriorEdgeGoesRight) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  const auto q = FitQuantizer(OneNumericColumn(v), 10);
  const auto& f = q.field(0);
  EXPECT_EQ(f.Encode(f.edges[3]), 3);
  EXPECT_EQ(f.Encode(f.edges[3] - 1e-9), 2);
  EXPECT_EQ(f.Encode(-1e9), 0);
  EXPECT_EQ(f.Encode(1e9), 9);
}

TEST(Quantizer, ConstantColumnWarns) {
  const auto q = FitQuantizer(OneNumericColumn(std::vector<double>(20, 4.0)), 10);
  EXPECT_EQ(q.field(0).vocab_size(), 1);
  ASSERT_EQ(q.warnings().size(), 1u);
  EXPECT_NE(q.warnings()[0].find("constant"), std::string::npos);
}

TEST(Quantizer, UnseenCategoryAndRoundTrip) {
  const auto d = OneNumericColumn({1, 2, 3, 4, 5, 6});
  const auto q = FitQuantizer(d, 2);
  const auto& g = q.field(q.FieldIndex("g"));
  EXPECT_EQ(g.Encode("a"), 0);
  EXPECT_EQ(g.Encode("b"), 1);
  EXPECT_EQ(g.Encode("c"), g.unseen_token());
  EXPECT_EQ(g.Category(g.Encode("b")), "b");
  const auto tokens = q.Quantize(d);
  for (size_t f = 0; f < q.num_fields(); ++f) {
    if (q.field(f).kind != ColumnKind::kCategorical) continue;
    for (int r = 0; r < tokens.rows(); ++r) EXPECT_NE(tokens(r, f), q.field(f).unseen_token());
  }
}

TEST(Quantizer, SkipsIdColumns) {
  const auto d = testing::MakeFixture(200, 1);
  const auto q = FitQuantizer(d, 10);
  EXPECT_EQ(q.num_fields(), 14u);
  EXPECT_EQ(q.FieldIndex("id"), -1);
}

TEST(CanonicalRow, Digests) {
  // Rows 0 and 6 share their categorical cells.
  const auto d = OneNumericColumn({1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 1.0000000000001});
  EXPECT_EQ(CanonicalRow(d, 0), CanonicalRow(d, 6));
  EXPECT_EQ(CanonicalRowHash(d, 0), CanonicalRowHash(d, 6));
  const auto e = OneNumericColumn({1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 1.5});
  EXPECT_NE(CanonicalRowHash(e, 0), CanonicalRowHash(e, 6));
  EXPECT_NE(CanonicalRowHash(e, 0), CanonicalRowHash(e, 1));
}

TEST(Dataset, SubsetAndValidation) {
  const auto d = testing::MakeFixture(30, 2);
  const std::vector<size_t> rows = {3, 7};
  const auto s = d.Subset(rows);
  EXPECT_EQ(s.num_rows(), 2u);
  EXPECT_EQ(CanonicalRow(s, 1), CanonicalRow(d, 7));
  std::vector<Column> bad(d.num_columns());
  EXPECT_THROW(TabularDataset(d.schema(), bad), ConfigError);
}

}  // namespace
}  // namespace trustaudit
