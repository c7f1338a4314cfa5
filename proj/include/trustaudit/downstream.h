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

#ifndef TRUSTAUDIT_DOWNSTREAM_H_
#define TRUSTAUDIT_DOWNSTREAM_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trustaudit/common.h"
#include "trustaudit/core_data.h"
#include "trustaudit/embedding.h"

namespace trustaudit::downstream {

enum class ClassifierKind { kLogisticRegression, kKnn, kMlp };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::kMlp;
  // Logistic regression.
  double l2 = 1e-4;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  int selected_features = 100;
  // Nearest neighbour.
  int k = 1;
  // MLP.
  double learning_rate = 3e-4;
  int hidden = 64;
  int batch_size = 64;
  int max_epochs = 60;
  int patience = 3;
  double bn_momentum = 0.9;
  uint64_t seed = 0;

  void Validate() const;
};

// Binary classifier over embedded feature rows.
class Classifier {
 public:
  virtual ~Classifier() = default;
  // Probability of label 1 per row.
  virtual Vector PredictProba(const Matrix& x) const = 0;
  std::vector<int> Predict(const Matrix& x) const;
};

// Always answers the same probability; used when the training labels hold a
// single class.
class ConstantClassifier : public Classifier {
 public:
  explicit ConstantClassifier(double p) : p_(p) {}
  Vector PredictProba(const Matrix& x) const override;

 private:
  double p_;
};

class LogisticRegression : public Classifier {
 public:
  LogisticRegression(std::vector<int> features, Vector center, Vector scale, Vector weights,
                     double bias, int iterations);
  Vector PredictProba(const Matrix& x) const override;

  const std::vector<int>& features() const { return features_; }
  const Vector& weights() const { return weights_; }
  double bias() const { return bias_; }
  int iterations() const { return iterations_; }

 private:
  std::vector<int> features_;
  Vector center_;
  Vector scale_;
  Vector weights_;
  double bias_;
  int iterations_;
};

// Top-k ANOVA selection, per-feature standardization, then L2-regularized
// logistic regression by full-batch gradient descent with backtracking.
LogisticRegression TrainLogisticRegression(const Matrix& x, std::span<const int> labels,
                                           const ClassifierSpec& spec);

// 1-NN in Euclidean distance; distance ties go to the lowest training index.
std::vector<int> KnnClassify(const Matrix& train, std::span<const int> labels, const Matrix& query);

class NearestNeighborClassifier : public Classifier {
 public:
  NearestNeighborClassifier(Matrix train, std::vector<int> labels);
  Vector PredictProba(const Matrix& x) const override;

 private:
  Matrix train_;
  std::vector<int> labels_;
};

// input -> hidden (batch norm, ReLU) -> single logit.
class Mlp : public Classifier {
 public:
  Mlp(int inputs, int hidden, uint64_t seed);

  Vector PredictProba(const Matrix& x) const override;

  int num_parameters() const;
  Vector parameters() const;
  void set_parameters(const Vector& flat);

  // Mean binary cross-entropy on (x, y) using batch statistics, and its
  // gradient in the layout of parameters().
  double LossAndGradient(const Matrix& x, std::span<const int> labels, Vector* gradient) const;
  // Batch-statistics loss only, for finite differences.
  double Loss(const Matrix& x, std::span<const int> labels) const;

  // Blends batch statistics of x into the running estimates.
  void UpdateRunningStats(const Matrix& x, double momentum);

 private:
  struct Forward;
  Forward Run(const Matrix& x, bool batch_stats) const;

  int inputs_;
  int hidden_;
  Eigen::MatrixXd w1_;  // inputs x hidden
  Vector gamma_;
  Vector beta_;
  Vector w2_;
  double b2_ = 0.0;
  Vector running_mean_;
  Vector running_var_;
};

struct MlpTrainingLog {
  std::vector<double> val_f1;  // one per completed epoch
  int best_epoch = -1;         // 0-based
  int stopped_epoch = -1;
};

// Adam with early stopping on validation F1. Returns the parameters of the
// best validation epoch.
Mlp TrainMlp(const Matrix& x, std::span<const int> labels, const Matrix& x_val,
             std::span<const int> val_labels, const ClassifierSpec& spec,
             MlpTrainingLog* log = nullptr);

// Trains the classifier named by spec.kind. A single-class training set
// yields a ConstantClassifier.
std::unique_ptr<Classifier> TrainClassifier(const Matrix& x, std::span<const int> labels,
                                            const Matrix& x_val, std::span<const int> val_labels,
                                            const ClassifierSpec& spec);

struct PredictionSet {
  std::vector<int> predicted;
  std::vector<double> score;
  std::vector<int> truth;
  std::vector<int> privileged;  // 1 for the privileged group

  void Validate() const;
};

PredictionSet MakePredictionSet(const Classifier& clf, const Matrix& x, std::vector<int> truth,
                                std::vector<int> privileged);

struct ClassificationScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Positive class is label 1; precision, recall and F1 are 0 when their
// denominator is 0.
ClassificationScores ScoreClassification(const PredictionSet& pred);
double F1Score(std::span<const int> predicted, std::span<const int> truth);

struct FairnessScores {
  double eod = 0.0;      // |dTPR|
  double aod = 0.0;      // |(dTPR + dFPR) / 2|
  double eq_odds = 0.0;  // max(|dTPR|, |dFPR|)
};

// Empty when either group lacks a positive or a negative ground-truth row.
std::optional<FairnessScores> ScoreFairness(const PredictionSet& pred);

// Maps token rows straight to embedded feature rows: numeric tokens decode to
// their bin centre, categorical tokens to their category (unseen -> zeros).
class TokenFeatureMap {
 public:
  TokenFeatureMap(const Quantizer& quantizer, const Embedder& embedder);
  int dimension() const { return dimension_; }
  Matrix Features(const TokenMatrix& tokens) const;
  void Features(std::span<const int32_t> tokens, double* out) const;

 private:
  struct Entry {
    int feature;
    double value;
  };
  // contributions_[field][token]
  std::vector<std::vector<std::vector<Entry>>> contributions_;
  int dimension_ = 0;
};

// Per-field token vectors for candidate search. Categorical tokens carry
// their co-occurrence profile with every other field's tokens; numeric
// tokens carry their bin centre.
struct TokenEmbeddings {
  std::vector<Eigen::MatrixXd> fields;  // vocab x dim
};
TokenEmbeddings BuildTokenEmbeddings(const Quantizer& quantizer, const TokenMatrix& real_train);

// The n same-field tokens nearest to `token`: highest cosine similarity for
// categorical fields, closest bin centre for numeric fields; ties go to the
// lower token id. The token itself and the unseen token are never offered.
std::vector<int> CandidateTokens(const Quantizer& quantizer, const TokenEmbeddings& embeddings,
                                 int field, int token, int n);

struct AttackConfig {
  int candidates = 5;
  double budget = 0.3;
  uint64_t seed = 0;

  void Validate() const;
};

// P(label 1) for one full token row.
using TokenScorer = std::function<double(std::span<const int32_t>)>;

double CrossEntropy(double p_positive, int label);

struct AttackResult {
  std::vector<int32_t> tokens;
  int substitutions = 0;
};

// Greedy substitution attack. Fields in `attackable` are visited in a seeded
// random order; for each, the best candidate is kept if it strictly raises
// the cross-entropy of the true label. Stops before more than
// floor(budget * |attackable|) fields would be substituted.
AttackResult GreedySubstitutionAttack(const TokenScorer& scorer, std::span<const int32_t> sample,
                                      int label, std::span<const int> attackable,
                                      const Quantizer& quantizer,
                                      const TokenEmbeddings& embeddings, const AttackConfig& cfg,
                                      uint64_t sample_seed);

struct RobustnessScores {
  ClassificationScores adversarial;
  ClassificationScores delta;  // |clean - adversarial| per score
};

RobustnessScores ScoreRobustness(const PredictionSet& clean, const PredictionSet& adversarial);

}  // namespace trustaudit::downstream

#endif  // TRUSTAUDIT_DOWNSTREAM_H_
