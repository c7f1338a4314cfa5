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

#include "trustaudit/synthgen.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "trustaudit/kernels.h"

namespace trustaudit::synthgen {
namespace {

constexpr size_t kBlockRows = 1024;
constexpr double kUnitClamp = 1e-12;

const boost::math::normal_distribution<double> kStdNormal;

double NormalQuantile(double p) {
  return boost::math::quantile(kStdNormal, std::clamp(p, kUnitClamp, 1.0 - kUnitClamp));
}

double NormalCdf(double z) { return boost::math::cdf(kStdNormal, z); }

// Average 1-based ranks, ties share the mean rank.
std::vector<double> AverageRanks(const std::vector<double>& v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

double InverseEmpirical(const std::vector<double>& sorted, double u) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

size_t SampleIndex(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::vector<double> Cumulative(std::span<const double> p) {
  std::vector<double> c(p.size());
  std::partial_sum(p.begin(), p.end(), c.begin());
  return c;
}

void FillIdColumn(const ColumnSpec& spec, size_t rows, Column* col) {
  if (spec.kind == ColumnKind::kContinuous) {
    col->numeric.resize(rows);
    for (size_t r = 0; r < rows; ++r) col->numeric[r] = static_cast<double>(r);
  } else {
    col->categorical.resize(rows);
    for (size_t r = 0; r < rows; ++r) col->categorical[r] = fmt::format("syn{}", r);
  }
}

Eigen::MatrixXd CorrelationFactor(const Eigen::MatrixXd& r) {
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Shrinkage keeps R positive definite in practice; fall back to a clipped
  // eigendecomposition anyway.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal();
}

}  // namespace

GaussianCopulaModel::GaussianCopulaModel(DatasetSchema schema,
                                         std::vector<CopulaMarginal> marginals,
                                         Eigen::MatrixXd correlation, uint64_t seed)
    : schema_(std::move(schema)), correlation_(std::move(correlation)), seed_(seed) {
  schema_.Validate();
  size_t m = 0;
  marginals_.resize(schema_.columns.size());
  for (size_t c = 0; c < schema_.columns.size(); ++c) {
    if (schema_.IsIdColumn(static_cast<int>(c))) continue;
    if (m >= marginals.size()) throw ConfigError("copula model lacks a marginal");
    auto& mg = marginals[m++];
    if (mg.name != schema_.columns[c].name || mg.kind != schema_.columns[c].kind) {
      throw ConfigError(fmt::format("copula marginal {} does not match the schema", mg.name));
    }
    if (mg.kind == ColumnKind::kContinuous ? mg.sorted_values.empty() : mg.categories.empty()) {
      throw ConfigError(fmt::format("copula marginal {} is empty", mg.name));
    }
    if (mg.kind == ColumnKind::kCategorical && mg.probabilities.size() != mg.categories.size()) {
      throw ConfigError(fmt::format("copula marginal {} has mismatched probabilities", mg.name));
    }
    marginals_[c] = std::move(mg);
  }
  if (m != marginals.size()) throw ConfigError("copula model has extra marginals");
  if (correlation_.rows() != static_cast<Eigen::Index>(m) || correlation_.cols() != correlation_.rows()) {
    throw ConfigError("copula correlation has the wrong size");
  }
}

nlohmann::json GaussianCopulaModel::ToJson() const {
  nlohmann::json j;
  j["kind"] = "gaussian_copula";
  j["seed"] = seed_;
  j["schema"] = schema_.ToJson();
  j["marginals"] = nlohmann::json::array();
  for (const auto& mg : marginals_) {
    if (!mg) continue;
    nlohmann::json m{{"name", mg->name}, {"constant", mg->constant}};
    if (mg->kind == ColumnKind::kContinuous) {
      m["kind"] = "continuous";
      m["values"] = mg->sorted_values;
    } else {
      m["kind"] = "categorical";
      m["categories"] = mg->categories;
      m["probabilities"] = mg->probabilities;
    }
    j["marginals"].push_back(std::move(m));
  }
  j["correlation"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < correlation_.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < correlation_.cols(); ++c) row.push_back(correlation_(r, c));
    j["correlation"].push_back(std::move(row));
  }
  return j;
}

GaussianCopulaModel GaussianCopulaModel::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("kind").get<std::string>() != "gaussian_copula") {
      throw ConfigError("not a gaussian_copula model");
    }
    auto schema = DatasetSchema::FromJson(j.at("schema"));
    std::vector<CopulaMarginal> marginals;
    for (const auto& m : j.at("marginals")) {
      CopulaMarginal mg;
      mg.name = m.at("name").get<std::string>();
      mg.constant = m.value("constant", false);
      const auto kind = m.at("kind").get<std::string>();
      if (kind == "continuous") {
        mg.kind = ColumnKind::kContinuous;
        mg.sorted_values = m.at("values").get<std::vector<double>>();
        if (!std::is_sorted(mg.sorted_values.begin(), mg.sorted_values.end())) {
          throw ConfigError(fmt::format("marginal {} values are not sorted", mg.name));
        }
      } else if (kind == "categorical") {
        mg.kind = ColumnKind::kCategorical;
        mg.categories = m.at("categories").get<std::vector<std::string>>();
        mg.probabilities = m.at("probabilities").get<std::vector<double>>();
      } else {
        throw ConfigError(fmt::format("marginal {} has unknown kind {}", mg.name, kind));
      }
      marginals.push_back(std::move(mg));
    }
    const auto rows = j.at("correlation");
    Eigen::MatrixXd r(rows.size(), rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw ConfigError("correlation matrix is not square");
      for (size_t k = 0; k < rows.size(); ++k) r(i, k) = rows[i][k].get<double>();
    }
    return GaussianCopulaModel(std::move(schema), std::move(marginals), std::move(r),
                               j.at("seed").get<uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad copula model: {}", e.what()));
  }
}

GaussianCopulaModel FitGaussianCopula(const TabularDataset& train, uint64_t seed) {
  const auto& schema = train.schema();
  const size_t n = train.num_rows();
  if (n < 10) throw ConfigError("Gaussian copula needs at least 10 training rows");
  std::vector<CopulaMarginal> marginals;
  std::vector<Vector> scores;
  std::mt19937_64 rng(DeriveSeed(seed, {0}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.IsIdColumn(static_cast<int>(c))) continue;
    CopulaMarginal mg;
    mg.name = schema.columns[c].name;
    mg.kind = schema.columns[c].kind;
    Vector z(n);
    if (mg.kind == ColumnKind::kContinuous) {
      const auto& v = train.column(c).numeric;
      mg.sorted_values = v;
      std::sort(mg.sorted_values.begin(), mg.sorted_values.end());
      mg.constant = mg.sorted_values.front() == mg.sorted_values.back();
      const auto rank = AverageRanks(v);
      for (size_t r = 0; r < n; ++r) z[r] = NormalQuantile((rank[r] - 0.5) / static_cast<double>(n));
    } else {
      const auto& v = train.column(c).categorical;
      mg.categories = v;
      std::sort(mg.categories.begin(), mg.categories.end());
      mg.categories.erase(std::unique(mg.categories.begin(), mg.categories.end()),
                          mg.categories.end());
      std::vector<double> counts(mg.categories.size(), 0.0);
      std::vector<size_t> token(n);
      for (size_t r = 0; r < n; ++r) {
        token[r] = std::lower_bound(mg.categories.begin(), mg.categories.end(), v[r]) -
                   mg.categories.begin();
        counts[token[r]] += 1.0;
      }
      for (auto& p : counts) p /= static_cast<double>(n);
      mg.probabilities = counts;
      mg.constant = mg.categories.size() == 1;
      const auto cum = Cumulative(counts);
      // Jitter uniformly within the category's slice of probability mass.
      for (size_t r = 0; r < n; ++r) {
        const double lo = token[r] == 0 ? 0.0 : cum[token[r] - 1];
        z[r] = NormalQuantile(lo + unif(rng) * counts[token[r]]);
      }
    }
    if (mg.constant) z.setZero();
    marginals.push_back(std::move(mg));
    scores.push_back(std::move(z));
  }

  const auto m = static_cast<Eigen::Index>(scores.size());
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(m, m);
  std::vector<Vector> centered(m);
  std::vector<double> norms(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    centered[i] = scores[i].array() - scores[i].mean();
    norms[i] = centered[i].norm();
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = i + 1; k < m; ++k) {
      if (norms[i] == 0.0 || norms[k] == 0.0) continue;
      const double r = centered[i].dot(centered[k]) / (norms[i] * norms[k]);
      corr(i, k) = corr(k, i) = (1.0 - kCorrelationShrinkage) * r;
    }
  }
  return GaussianCopulaModel(schema, std::move(marginals), std::move(corr), seed);
}

TabularDataset SampleGaussianCopula(const GaussianCopulaModel& model, size_t rows, uint64_t seed) {
  if (rows < 1) throw ConfigError("row count must be >= 1");
  const auto& schema = model.schema();
  const Eigen::MatrixXd factor = CorrelationFactor(model.correlation());
  const auto m = factor.rows();
  // Latent uniforms, one row per sample.
  Matrix u(static_cast<Eigen::Index>(rows), m);
  const size_t blocks = (rows + kBlockRows - 1) / kBlockRows;
#pragma omp parallel for schedule(dynamic) num_threads(kernels::WorkerCount())
  for (size_t b = 0; b < blocks; ++b) {
    std::mt19937_64 rng(DeriveSeed(seed, {b}));
    std::normal_distribution<double> normal;
    Vector g(m);
    const size_t end = std::min(rows, (b + 1) * kBlockRows);
    for (size_t r = b * kBlockRows; r < end; ++r) {
      for (Eigen::Index i = 0; i < m; ++i) g[i] = normal(rng);
      const Vector z = factor * g;
      for (Eigen::Index i = 0; i < m; ++i) u(r, i) = NormalCdf(z[i]);
    }
  }

  std::vector<Column> columns(schema.columns.size());
  Eigen::Index latent = 0;
  for (size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& mg = model.marginals()[c];
    if (!mg) {
      FillIdColumn(schema.columns[c], rows, &columns[c]);
      continue;
    }
    if (mg->kind == ColumnKind::kContinuous) {
      columns[c].numeric.resize(rows);
      for (size_t r = 0; r < rows; ++r) {
        columns[c].numeric[r] = mg->constant ? mg->sorted_values.front()
                                             : InverseEmpirical(mg->sorted_values, u(r, latent));
      }
    } else {
      const auto cum = Cumulative(mg->probabilities);
      columns[c].categorical.resize(rows);
      for (size_t r = 0; r < rows; ++r) {
        columns[c].categorical[r] = mg->categories[mg->constant ? 0 : SampleIndex(cum, u(r, latent))];
      }
    }
    ++latent;
  }
  return TabularDataset(schema, std::move(columns));
}

std::vector<double> ProjectToSimplex(std::span<const double> v) {
  if (v.empty()) throw ConfigError("cannot project an empty vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError("simplex projection needs finite entries");
  }
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  double running = 0.0, theta = 0.0;
  for (size_t j = 0; j < s.size(); ++j) {
    running += s[j];
    const double t = (running - 1.0) / static_cast<double>(j + 1);
    if (s[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

void PrivateSamplerConfig::Validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("privacy budget epsilon must be > 0");
  if (total_length < 1) throw ConfigError("sequence length T must be >= 1");
}

double PrivateSamplerConfig::NoiseScale(int vocab_size) const {
  if (vocab_size < 1) throw ConfigError("empty local vocabulary");
  if (std::isinf(epsilon)) return 0.0;
  return 2.0 * total_length / (epsilon * vocab_size);
}

std::vector<double> PrivateSamplePerturb(std::span<const double> probs,
                                         std::span<const double> noise) {
  if (probs.size() != noise.size()) throw ConfigError("noise and probabilities differ in length");
  std::vector<double> v(probs.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = probs[i] + noise[i];
  return ProjectToSimplex(v);
}

std::vector<double> PrivateSamplePerturb(std::span<const double> probs,
                                         const PrivateSamplerConfig& cfg, uint64_t seed) {
  cfg.Validate();
  const double scale = cfg.NoiseScale(static_cast<int>(probs.size()));
  std::vector<double> noise(probs.size(), 0.0);
  if (scale > 0.0) {
    // Difference of two exponentials with mean b is Laplace(0, b).
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0 / scale);
    for (auto& x : noise) x = expo(rng) - expo(rng);
  }
  return PrivateSamplePerturb(probs, noise);
}

IndependentCategoricalSampler::IndependentCategoricalSampler(const TabularDataset& train, int bins)
    : schema_(train.schema()), quantizer_(FitQuantizer(train, bins)) {
  const TokenMatrix tokens = quantizer_.Quantize(train);
  for (size_t f = 0; f < quantizer_.num_fields(); ++f) {
    const auto& fq = quantizer_.field(f);
    const int observed = fq.kind == ColumnKind::kCategorical ? fq.unseen_token() : fq.vocab_size();
    std::vector<double> p(observed, 0.0);
    for (Eigen::Index r = 0; r < tokens.rows(); ++r) p[tokens(r, f)] += 1.0;
    for (auto& x : p) x /= static_cast<double>(tokens.rows());
    probs_.push_back(std::move(p));
  }
}

TabularDataset IndependentCategoricalSampler::Sample(
    size_t rows, uint64_t seed, const std::optional<PrivateSamplerConfig>& privacy) const {
  if (rows < 1) throw ConfigError("row count must be >= 1");
  if (privacy) privacy->Validate();
  const size_t nf = quantizer_.num_fields();
  TokenMatrix tokens(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(nf));
  const size_t blocks = (rows + kBlockRows - 1) / kBlockRows;
  std::vector<std::vector<double>> cum(nf);
  for (size_t f = 0; f < nf; ++f) cum[f] = Cumulative(probs_[f]);
#pragma omp parallel for schedule(dynamic) num_threads(kernels::WorkerCount())
  for (size_t b = 0; b < blocks; ++b) {
    std::mt19937_64 rng(DeriveSeed(seed, {b}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const size_t end = std::min(rows, (b + 1) * kBlockRows);
    for (size_t r = b * kBlockRows; r < end; ++r) {
      for (size_t f = 0; f < nf; ++f) {
        if (privacy) {
          const auto p = PrivateSamplePerturb(probs_[f], *privacy, rng());
          tokens(r, f) = static_cast<int32_t>(SampleIndex(Cumulative(p), unif(rng)));
        } else {
          tokens(r, f) = static_cast<int32_t>(SampleIndex(cum[f], unif(rng)));
        }
      }
    }
  }
  std::vector<Column> columns(schema_.columns.size());
  for (size_t c = 0; c < schema_.columns.size(); ++c) {
    if (schema_.IsIdColumn(static_cast<int>(c))) FillIdColumn(schema_.columns[c], rows, &columns[c]);
  }
  for (size_t f = 0; f < nf; ++f) {
    const auto& fq = quantizer_.field(f);
    auto& col = columns[fq.column];
    if (fq.kind == ColumnKind::kContinuous) {
      col.numeric.resize(rows);
      for (size_t r = 0; r < rows; ++r) col.numeric[r] = fq.Center(tokens(r, f));
    } else {
      col.categorical.resize(rows);
      for (size_t r = 0; r < rows; ++r) col.categorical[r] = fq.Category(tokens(r, f));
    }
  }
  return TabularDataset(schema_, std::move(columns));
}

CollapseRun IterativeRetrain(const TabularDataset& real_train, int generations, size_t rows_per_gen,
                             uint64_t seed) {
  if (generations < 1) throw ConfigError("generations must be >= 1");
  CollapseRun run;
  run.generations.reserve(generations);
  const TabularDataset* parent = &real_train;
  for (int g = 0; g < generations; ++g) {
    const auto model = FitGaussianCopula(*parent, DeriveSeed(seed, {static_cast<uint64_t>(g), 0}));
    auto data = SampleGaussianCopula(model, rows_per_gen, DeriveSeed(seed, {static_cast<uint64_t>(g), 1}));
    data.set_origin({true, fmt::format("generation-{}", g + 1), -1, -1});
    bool all_constant = true;
    for (const auto& mg : model.marginals()) {
      if (mg && !mg->constant) all_constant = false;
    }
    run.generations.push_back(std::move(data));
    parent = &run.generations.back();
    if (all_constant) {
      run.notes.push_back(fmt::format("generation {} collapsed to constant columns; chain stopped", g + 1));
      break;
    }
  }
  return run;
}

}  // namespace trustaudit::synthgen
