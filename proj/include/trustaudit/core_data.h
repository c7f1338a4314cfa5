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

#ifndef TRUSTAUDIT_CORE_DATA_H_
#define TRUSTAUDIT_CORE_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trustaudit/common.h"

namespace trustaudit {

enum class ColumnKind { kCategorical, kContinuous };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kCategorical;
};

// Column layout plus the roles the audit needs: which column is the
// classification target, which one carries the protected attribute, and
// which columns are identifiers that never enter a metric.
struct DatasetSchema {
  std::vector<ColumnSpec> columns;
  std::string target;
  std::string protected_column;
  std::string privileged_value;
  std::vector<std::string> id_columns;
  // Value of the target treated as label 1. Empty means "lexicographically
  // last observed category".
  std::string positive_label;

  // Throws ConfigError on duplicate names or missing/non-categorical roles.
  void Validate() const;
  int IndexOf(std::string_view name) const;  // -1 when absent
  bool IsIdColumn(int column) const;

  static DatasetSchema FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

DatasetSchema LoadSchema(const std::filesystem::path& path);

struct DatasetOrigin {
  bool synthetic = false;
  std::string model_id;
  int fold_id = -1;
  int checkpoint_id = -1;
};

// One column of cells. Exactly one of the two vectors is populated,
// according to the schema kind.
struct Column {
  std::vector<double> numeric;
  std::vector<std::string> categorical;
};

class TabularDataset {
 public:
  // Throws ConfigError if column count, kinds or lengths disagree with the
  // schema, or if there are no rows.
  TabularDataset(DatasetSchema schema, std::vector<Column> columns,
                 DatasetOrigin origin = {});

  const DatasetSchema& schema() const { return schema_; }
  const DatasetOrigin& origin() const { return origin_; }
  void set_origin(DatasetOrigin origin) { origin_ = std::move(origin); }
  size_t num_rows() const { return num_rows_; }
  size_t num_columns() const { return columns_.size(); }
  const Column& column(size_t c) const { return columns_[c]; }
  const std::vector<Column>& columns() const { return columns_; }

  double numeric(size_t row, size_t col) const { return columns_[col].numeric[row]; }
  const std::string& category(size_t row, size_t col) const {
    return columns_[col].categorical[row];
  }

  TabularDataset Subset(std::span<const size_t> rows) const;

  // Rows removed during ingestion because of missing or unparseable cells.
  size_t dropped_rows() const { return dropped_rows_; }
  void set_dropped_rows(size_t n) { dropped_rows_ = n; }

 private:
  DatasetSchema schema_;
  std::vector<Column> columns_;
  DatasetOrigin origin_;
  size_t num_rows_ = 0;
  size_t dropped_rows_ = 0;
};

// RFC-4180 reader: quoted fields, doubled quotes, embedded separators and
// line breaks. Returns every record including the header.
std::vector<std::vector<std::string>> ReadCsvRecords(std::istream& in);

TabularDataset LoadCsv(const std::filesystem::path& path, const DatasetSchema& schema);
TabularDataset ParseCsv(std::istream& in, const DatasetSchema& schema);
void WriteCsv(const TabularDataset& data, std::ostream& out);

// Throws ConfigError unless the target and protected columns each show at
// least two distinct values. Only meaningful for real data.
void CheckLabelDiversity(const TabularDataset& data);

// Label 1 for the positive target class, 0 otherwise. Throws ConfigError if
// the target is not binary in `reference` (normally the real training set).
std::string ResolvePositiveLabel(const TabularDataset& reference);
std::vector<int> BinaryLabels(const TabularDataset& data, const std::string& positive_label);
// 1 for rows whose protected column equals the privileged value.
std::vector<int> ProtectedIndicator(const TabularDataset& data);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct FoldSplit {
  int fold_id = 0;
  uint64_t seed = 0;
  std::vector<size_t> train;
  std::vector<size_t> val;
  std::vector<size_t> test;
};

// Each fold is an independent seeded shuffle partitioned by the ratios;
// validation and test sizes are floor(N * ratio), training takes the rest.
std::vector<FoldSplit> SplitFolds(size_t num_rows, const SplitRatios& ratios, int num_folds,
                                  uint64_t base_seed);
std::vector<FoldSplit> SplitFolds(const TabularDataset& data, const SplitRatios& ratios,
                                  int num_folds, uint64_t base_seed);

// Tokenizer for one non-identifier column.
struct FieldQuantizer {
  std::string name;
  int column = -1;  // index into the schema
  ColumnKind kind = ColumnKind::kCategorical;
  // Continuous: strictly increasing edges, size = bins + 1.
  std::vector<double> edges;
  std::vector<double> centers;
  // Categorical: sorted observed categories; token id = position, and
  // token categories.size() is the reserved unseen token.
  std::vector<std::string> categories;

  int vocab_size() const;
  int unseen_token() const;  // -1 for continuous fields
  int Encode(double value) const;
  int Encode(const std::string& value) const;
  double Center(int token) const;
  const std::string& Category(int token) const;
};

class Quantizer {
 public:
  Quantizer() = default;
  Quantizer(std::vector<FieldQuantizer> fields, std::vector<std::string> warnings);

  const std::vector<FieldQuantizer>& fields() const { return fields_; }
  const FieldQuantizer& field(size_t f) const { return fields_[f]; }
  size_t num_fields() const { return fields_.size(); }
  int FieldIndex(std::string_view name) const;  // -1 when absent
  const std::vector<std::string>& warnings() const { return warnings_; }

  // N x num_fields token ids. Total on any schema-conforming dataset.
  TokenMatrix Quantize(const TabularDataset& data) const;

 private:
  std::vector<FieldQuantizer> fields_;
  std::vector<std::string> warnings_;
};

// Equal-frequency bins per continuous column, category maps per
// categorical column, both fit on real training rows only.
Quantizer FitQuantizer(const TabularDataset& real_train, int bins);

// Canonical rendering of one row: identifiers skipped, continuous values
// at 12 significant digits.
std::string CanonicalRow(const TabularDataset& data, size_t row);
uint64_t CanonicalRowHash(const TabularDataset& data, size_t row);

}  // namespace trustaudit

#endif  // TRUSTAUDIT_CORE_DATA_H_
