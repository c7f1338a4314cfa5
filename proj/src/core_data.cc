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

#include "trustaudit/core_data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

namespace trustaudit {
namespace {

const char* KindName(ColumnKind kind) {
  return kind == ColumnKind::kCategorical ? "categorical" : "continuous";
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool IsMissingToken(std::string_view s) {
  return s.empty() || s == "NA" || s == "N/A" || s == "NaN" || s == "nan" || s == "?" ||
         s == "null";
}

bool ParseDouble(std::string_view s, double* out) {
  // std::from_chars rejects a leading '+'.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), *out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(*out);
}

bool NeedsQuoting(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void WriteCsvField(std::ostream& out, std::string_view s) {
  if (!NeedsQuoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

void DatasetSchema::Validate() const {
  if (columns.empty()) throw ConfigError("schema has no columns");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ConfigError("schema column with empty name");
    if (!seen.insert(c.name).second) throw ConfigError("duplicate column name: " + c.name);
  }
  auto require_categorical = [&](const std::string& name, const char* role) {
    const int idx = IndexOf(name);
    if (idx < 0) throw ConfigError(fmt::format("{} column '{}' not in schema", role, name));
    if (columns[idx].kind != ColumnKind::kCategorical) {
      throw ConfigError(fmt::format("{} column '{}' must be categorical", role, name));
    }
  };
  require_categorical(target, "target");
  require_categorical(protected_column, "protected");
  if (target == protected_column) throw ConfigError("target and protected column coincide");
  for (const auto& id : id_columns) {
    if (IndexOf(id) < 0) throw ConfigError("id column '" + id + "' not in schema");
    if (id == target || id == protected_column) {
      throw ConfigError("id column '" + id + "' cannot be the target or protected column");
    }
  }
}

int DatasetSchema::IndexOf(std::string_view name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

bool DatasetSchema::IsIdColumn(int column) const {
  const auto& name = columns[column].name;
  return std::find(id_columns.begin(), id_columns.end(), name) != id_columns.end();
}

DatasetSchema DatasetSchema::FromJson(const nlohmann::json& j) {
  DatasetSchema s;
  try {
    for (const auto& c : j.at("columns")) {
      ColumnSpec spec;
      spec.name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "categorical") {
        spec.kind = ColumnKind::kCategorical;
      } else if (kind == "continuous") {
        spec.kind = ColumnKind::kContinuous;
      } else {
        throw ConfigError("unknown column kind '" + kind + "' for " + spec.name);
      }
      s.columns.push_back(std::move(spec));
    }
    s.target = j.at("target").get<std::string>();
    const auto& prot = j.at("protected");
    s.protected_column = prot.at("column").get<std::string>();
    const auto& priv = prot.at("privileged_value");
    s.privileged_value = priv.is_string() ? priv.get<std::string>() : priv.dump();
    if (j.contains("id_columns")) {
      s.id_columns = j.at("id_columns").get<std::vector<std::string>>();
    }
    if (j.contains("positive_label")) {
      const auto& pos = j.at("positive_label");
      s.positive_label = pos.is_string() ? pos.get<std::string>() : pos.dump();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
  s.Validate();
  return s;
}

nlohmann::json DatasetSchema::ToJson() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) cols.push_back({{"name", c.name}, {"kind", KindName(c.kind)}});
  nlohmann::json j = {{"columns", cols},
                      {"target", target},
                      {"protected", {{"column", protected_column},
                                     {"privileged_value", privileged_value}}},
                      {"id_columns", id_columns}};
  if (!positive_label.empty()) j["positive_label"] = positive_label;
  return j;
}

DatasetSchema LoadSchema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema file " + path.string() + " is not valid JSON: " + e.what());
  }
  return DatasetSchema::FromJson(j);
}

TabularDataset::TabularDataset(DatasetSchema schema, std::vector<Column> columns,
                               DatasetOrigin origin)
    : schema_(std::move(schema)), columns_(std::move(columns)), origin_(std::move(origin)) {
  if (columns_.size() != schema_.columns.size()) {
    throw ConfigError(fmt::format("dataset has {} columns, schema declares {}", columns_.size(),
                                  schema_.columns.size()));
  }
  for (size_t c = 0; c < columns_.size(); ++c) {
    const bool numeric = schema_.columns[c].kind == ColumnKind::kContinuous;
    const size_t n = numeric ? columns_[c].numeric.size() : columns_[c].categorical.size();
    const size_t other = numeric ? columns_[c].categorical.size() : columns_[c].numeric.size();
    if (other != 0) {
      throw ConfigError("column '" + schema_.columns[c].name + "' holds cells of the wrong kind");
    }
    if (c == 0) num_rows_ = n;
    if (n != num_rows_) throw ConfigError("ragged columns in dataset");
    if (numeric) {
      for (double v : columns_[c].numeric) {
        if (!std::isfinite(v)) {
          throw ConfigError("non-finite value in column '" + schema_.columns[c].name + "'");
        }
      }
    }
  }
  if (num_rows_ == 0) throw ConfigError("dataset has zero rows");
}

TabularDataset TabularDataset::Subset(std::span<const size_t> rows) const {
  std::vector<Column> cols(columns_.size());
  for (size_t c = 0; c < columns_.size(); ++c) {
    if (schema_.columns[c].kind == ColumnKind::kContinuous) {
      cols[c].numeric.reserve(rows.size());
      for (size_t r : rows) cols[c].numeric.push_back(columns_[c].numeric.at(r));
    } else {
      cols[c].categorical.reserve(rows.size());
      for (size_t r : rows) cols[c].categorical.push_back(columns_[c].categorical.at(r));
    }
  }
  TabularDataset out(schema_, std::move(cols), origin_);
  return out;
}

std::vector<std::vector<std::string>> ReadCsvRecords(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A bare line break produces a single empty field; skip blank lines.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (in.peek() == '\n') in.get(c);
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ConfigError("unterminated quoted field in CSV");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

TabularDataset ParseCsv(std::istream& in, const DatasetSchema& schema) {
  schema.Validate();
  auto records = ReadCsvRecords(in);
  if (records.empty()) throw ConfigError("CSV has no header row");
  const auto& header = records.front();
  if (header.size() != schema.columns.size()) {
    throw ConfigError(fmt::format("CSV header has {} columns, schema declares {}",
                                  header.size(), schema.columns.size()));
  }
  for (size_t c = 0; c < header.size(); ++c) {
    if (Trim(header[c]) != schema.columns[c].name) {
      throw ConfigError(fmt::format("CSV header mismatch at column {}: '{}' vs schema '{}'", c,
                                    header[c], schema.columns[c].name));
    }
  }
  std::vector<Column> cols(schema.columns.size());
  size_t dropped = 0;
  std::vector<double> numbers(schema.columns.size());
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    bool ok = rec.size() == schema.columns.size();
    for (size_t c = 0; ok && c < rec.size(); ++c) {
      const auto cell = Trim(rec[c]);
      if (IsMissingToken(cell)) {
        ok = false;
      } else if (schema.columns[c].kind == ColumnKind::kContinuous) {
        ok = ParseDouble(cell, &numbers[c]);
      }
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    for (size_t c = 0; c < rec.size(); ++c) {
      if (schema.columns[c].kind == ColumnKind::kContinuous) {
        cols[c].numeric.push_back(numbers[c]);
      } else {
        cols[c].categorical.emplace_back(Trim(rec[c]));
      }
    }
  }
  const size_t kept = schema.columns[0].kind == ColumnKind::kContinuous
                          ? cols[0].numeric.size()
                          : cols[0].categorical.size();
  if (kept == 0) throw ConfigError("zero surviving rows after dropping missing cells");
  TabularDataset data(schema, std::move(cols));
  data.set_dropped_rows(dropped);
  return data;
}

TabularDataset LoadCsv(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV file: " + path.string());
  return ParseCsv(in, schema);
}

void WriteCsv(const TabularDataset& data, std::ostream& out) {
  const auto& schema = data.schema();
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    if (c) out << ',';
    WriteCsvField(out, schema.columns[c].name);
  }
  out << '\n';
  for (size_t r = 0; r < data.num_rows(); ++r) {
    for (size_t c = 0; c < schema.columns.size(); ++c) {
      if (c) out << ',';
      if (schema.columns[c].kind == ColumnKind::kContinuous) {
        out << fmt::format("{}", data.numeric(r, c));
      } else {
        WriteCsvField(out, data.category(r, c));
      }
    }
    out << '\n';
  }
}

void CheckLabelDiversity(const TabularDataset& data) {
  const auto& schema = data.schema();
  for (const auto* name : {&schema.target, &schema.protected_column}) {
    const int c = schema.IndexOf(*name);
    const auto& cells = data.column(c).categorical;
    std::set<std::string_view> distinct(cells.begin(), cells.end());
    if (distinct.size() < 2) {
      throw ConfigError("column '" + *name + "' needs at least two observed values");
    }
  }
}

std::string ResolvePositiveLabel(const TabularDataset& reference) {
  const auto& schema = reference.schema();
  const auto& cells = reference.column(schema.IndexOf(schema.target)).categorical;
  std::set<std::string> distinct(cells.begin(), cells.end());
  if (distinct.size() > 2) {
    throw ConfigError(fmt::format("target '{}' has {} classes; only binary tasks are supported",
                                  schema.target, distinct.size()));
  }
  if (!schema.positive_label.empty()) return schema.positive_label;
  if (distinct.empty()) throw ConfigError("target column is empty");
  return *distinct.rbegin();
}

std::vector<int> BinaryLabels(const TabularDataset& data, const std::string& positive_label) {
  const auto& schema = data.schema();
  const auto& cells = data.column(schema.IndexOf(schema.target)).categorical;
  std::vector<int> labels(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) labels[i] = cells[i] == positive_label ? 1 : 0;
  return labels;
}

std::vector<int> ProtectedIndicator(const TabularDataset& data) {
  const auto& schema = data.schema();
  const auto& cells = data.column(schema.IndexOf(schema.protected_column)).categorical;
  std::vector<int> rho(cells.size());
  for (size_t i = 0; i < cells.size(); ++i) rho[i] = cells[i] == schema.privileged_value ? 1 : 0;
  return rho;
}

std::vector<FoldSplit> SplitFolds(size_t num_rows, const SplitRatios& ratios, int num_folds,
                                  uint64_t base_seed) {
  if (num_folds < 1) throw ConfigError("num_folds must be >= 1");
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0)) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  const double n = static_cast<double>(num_rows);
  // The small slack absorbs representation error such as 100 * 0.7.
  const size_t n_val = static_cast<size_t>(std::floor(n * ratios.val + 1e-9));
  const size_t n_test = static_cast<size_t>(std::floor(n * ratios.test + 1e-9));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= num_rows) {
    throw ConfigError(fmt::format("split of {} rows with ratios ({}, {}, {}) leaves an empty part",
                                  num_rows, ratios.train, ratios.val, ratios.test));
  }
  std::vector<FoldSplit> folds;
  folds.reserve(num_folds);
  for (int f = 0; f < num_folds; ++f) {
    FoldSplit split;
    split.fold_id = f;
    split.seed = DeriveSeed(base_seed, {static_cast<uint64_t>(f)});
    std::vector<size_t> order(num_rows);
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 rng(split.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const size_t n_train = num_rows - n_val - n_test;
    split.train.assign(order.begin(), order.begin() + n_train);
    split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    split.test.assign(order.begin() + n_train + n_val, order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

std::vector<FoldSplit> SplitFolds(const TabularDataset& data, const SplitRatios& ratios,
                                  int num_folds, uint64_t base_seed) {
  return SplitFolds(data.num_rows(), ratios, num_folds, base_seed);
}

int FieldQuantizer::vocab_size() const {
  if (kind == ColumnKind::kContinuous) return static_cast<int>(centers.size());
  return static_cast<int>(categories.size()) + 1;
}

int FieldQuantizer::unseen_token() const {
  return kind == ColumnKind::kCategorical ? static_cast<int>(categories.size()) : -1;
}

int FieldQuantizer::Encode(double value) const {
  const int bins = static_cast<int>(edges.size()) - 1;
  // Half-open [e_i, e_{i+1}); values outside the fitted range clamp to the
  // end bins, the last bin is closed.
  const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, value);
  return std::min(static_cast<int>(it - (edges.begin() + 1)), bins - 1);
}

int FieldQuantizer::Encode(const std::string& value) const {
  const auto it = std::lower_bound(categories.begin(), categories.end(), value);
  if (it != categories.end() && *it == value) return static_cast<int>(it - categories.begin());
  return unseen_token();
}

double FieldQuantizer::Center(int token) const { return centers.at(token); }

const std::string& FieldQuantizer::Category(int token) const {
  static const std::string kUnseen = "<unseen>";
  if (token == unseen_token()) return kUnseen;
  return categories.at(token);
}

Quantizer::Quantizer(std::vector<FieldQuantizer> fields, std::vector<std::string> warnings)
    : fields_(std::move(fields)), warnings_(std::move(warnings)) {}

int Quantizer::FieldIndex(std::string_view name) const {
  for (size_t f = 0; f < fields_.size(); ++f) {
    if (fields_[f].name == name) return static_cast<int>(f);
  }
  return -1;
}

TokenMatrix Quantizer::Quantize(const TabularDataset& data) const {
  TokenMatrix tokens(static_cast<Eigen::Index>(data.num_rows()),
                     static_cast<Eigen::Index>(fields_.size()));
  for (size_t f = 0; f < fields_.size(); ++f) {
    const auto& fq = fields_[f];
    const int c = data.schema().IndexOf(fq.name);
    if (c < 0 || data.schema().columns[c].kind != fq.kind) {
      throw ConfigError("dataset does not match quantizer field '" + fq.name + "'");
    }
    const auto& col = data.column(c);
    for (size_t r = 0; r < data.num_rows(); ++r) {
      tokens(r, f) = fq.kind == ColumnKind::kContinuous ? fq.Encode(col.numeric[r])
                                                        : fq.Encode(col.categorical[r]);
    }
  }
  return tokens;
}

Quantizer FitQuantizer(const TabularDataset& real_train, int bins) {
  if (bins < 2) throw ConfigError("quantizer needs bins >= 2");
  const auto& schema = real_train.schema();
  std::vector<FieldQuantizer> fields;
  std::vector<std::string> warnings;
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.IsIdColumn(static_cast<int>(c))) continue;
    FieldQuantizer fq;
    fq.name = schema.columns[c].name;
    fq.column = static_cast<int>(c);
    fq.kind = schema.columns[c].kind;
    if (fq.kind == ColumnKind::kCategorical) {
      const auto& cells = real_train.column(c).categorical;
      std::set<std::string> distinct(cells.begin(), cells.end());
      fq.categories.assign(distinct.begin(), distinct.end());
    } else {
      std::vector<double> sorted = real_train.column(c).numeric;
      std::sort(sorted.begin(), sorted.end());
      const size_t n = sorted.size();
      std::vector<double> edges{sorted.front()};
      for (int b = 1; b < bins; ++b) {
        const double e = sorted[static_cast<size_t>(b) * n / static_cast<size_t>(bins)];
        // Heavy ties collapse bins; keep edges strictly increasing.
        if (e > edges.back()) edges.push_back(e);
      }
      if (edges.size() == 1 && sorted.back() == edges.back()) {
        warnings.push_back("column '" + fq.name + "' is constant; quantized to a single bin");
      }
      // When the last interior edge equals the maximum the final bin is the
      // closed point interval [max, max].
      edges.push_back(sorted.back());
      fq.edges = std::move(edges);
      for (size_t b = 0; b + 1 < fq.edges.size(); ++b) {
        fq.centers.push_back(0.5 * (fq.edges[b] + fq.edges[b + 1]));
      }
    }
    fields.push_back(std::move(fq));
  }
  return Quantizer(std::move(fields), std::move(warnings));
}

std::string CanonicalRow(const TabularDataset& data, size_t row) {
  const auto& schema = data.schema();
  std::string out;
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.IsIdColumn(static_cast<int>(c))) continue;
    if (schema.columns[c].kind == ColumnKind::kContinuous) {
      double v = data.numeric(row, c);
      if (v == 0.0) v = 0.0;  // fold -0 into +0
      out += fmt::format("n{:.12g}", v);
    } else {
      const auto& s = data.category(row, c);
      out += fmt::format("c{}:", s.size());
      out += s;
    }
    out.push_back('\x1f');
  }
  return out;
}

uint64_t CanonicalRowHash(const TabularDataset& data, size_t row) {
  return static_cast<uint64_t>(std::hash<std::string>{}(CanonicalRow(data, row)));
}

}  // namespace trustaudit
