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

#include "trustaudit/downstream.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "trustaudit/kernels.h"

namespace trustaudit::downstream {
namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void CheckLabels(const Matrix& x, std::span<const int> labels) {
  if (static_cast<size_t>(x.rows()) != labels.size()) {
    throw ConfigError("feature rows and labels differ in count");
  }
  if (labels.empty()) throw ConfigError("classifier needs at least one training row");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("labels must be 0 or 1");
  }
}

bool SingleClass(std::span<const int> labels) {
  return std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels[0]; });
}

struct LrProblem {
  const Matrix& x;  // standardized, selected
  std::span<const int> y;
  double l2;

  double Loss(const Vector& w, double b) const {
    const Vector z = (x * w).array() + b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) s += Softplus(z[i]) - y[i] * z[i];
    return s / static_cast<double>(z.size()) + 0.5 * l2 * w.squaredNorm();
  }

  void Gradient(const Vector& w, double b, Vector* gw, double* gb) const {
    const Vector z = (x * w).array() + b;
    Vector r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = Sigmoid(z[i]) - y[i];
    const double n = static_cast<double>(z.size());
    *gw = x.transpose() * r / n + l2 * w;
    *gb = r.sum() / n;
  }
};

void CountGroup(const PredictionSet& p, int group, double* tpr, double* fpr, bool* ok) {
  double tp = 0, fn = 0, fp = 0, tn = 0;
  for (size_t i = 0; i < p.truth.size(); ++i) {
    if (p.privileged[i] != group) continue;
    if (p.truth[i] == 1) {
      (p.predicted[i] == 1 ? tp : fn) += 1;
    } else {
      (p.predicted[i] == 1 ? fp : tn) += 1;
    }
  }
  *ok = (tp + fn) > 0 && (fp + tn) > 0;
  if (*ok) {
    *tpr = tp / (tp + fn);
    *fpr = fp / (fp + tn);
  }
}

}  // namespace

void ClassifierSpec::Validate() const {
  switch (kind) {
    case ClassifierKind::kLogisticRegression:
      if (l2 < 0) throw ConfigError("l2 must be >= 0");
      if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
      if (selected_features < 1) throw ConfigError("selected_features must be >= 1");
      break;
    case ClassifierKind::kKnn:
      if (k != 1) throw ConfigError("only the 1-NN classifier is supported");
      break;
    case ClassifierKind::kMlp:
      if (learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
      if (hidden < 1 || batch_size < 2) throw ConfigError("bad MLP shape");
      if (max_epochs < 1 || patience < 1) throw ConfigError("bad MLP schedule");
      if (bn_momentum < 0 || bn_momentum > 1) throw ConfigError("bn_momentum outside [0,1]");
      break;
  }
}

std::vector<int> Classifier::Predict(const Matrix& x) const {
  const Vector p = PredictProba(x);
  std::vector<int> out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) out[i] = p[i] > 0.5 ? 1 : 0;
  return out;
}

Vector ConstantClassifier::PredictProba(const Matrix& x) const {
  return Vector::Constant(x.rows(), p_);
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegression::LogisticRegression(std::vector<int> features, Vector center, Vector scale,
                                       Vector weights, double bias, int iterations)
    : features_(std::move(features)),
      center_(std::move(center)),
      scale_(std::move(scale)),
      weights_(std::move(weights)),
      bias_(bias),
      iterations_(iterations) {}

Vector LogisticRegression::PredictProba(const Matrix& x) const {
  Matrix sel = x(Eigen::all, features_);
  sel = (sel.rowwise() - center_.transpose()).array().rowwise() / scale_.transpose().array();
  const Vector z = (sel * weights_).array() + bias_;
  return z.unaryExpr([](double v) { return Sigmoid(v); });
}

LogisticRegression TrainLogisticRegression(const Matrix& x, std::span<const int> labels,
                                           const ClassifierSpec& spec) {
  CheckLabels(x, labels);
  auto features = AnovaFSelect(x, labels, spec.selected_features);
  Matrix sel = x(Eigen::all, features);
  const Vector center = sel.colwise().mean().transpose();
  sel.rowwise() -= center.transpose();
  Vector scale = (sel.colwise().squaredNorm() / static_cast<double>(sel.rows())).cwiseSqrt().transpose();
  for (auto& s : scale) {
    if (s <= 0) s = 1.0;
  }
  sel = sel.array().rowwise() / scale.transpose().array();

  const LrProblem problem{sel, labels, spec.l2};
  Vector w = Vector::Zero(sel.cols());
  double b = 0.0;
  double loss = problem.Loss(w, b);
  double step = 1.0;
  int it = 0;
  Vector gw;
  double gb = 0.0;
  for (; it < spec.max_iterations; ++it) {
    problem.Gradient(w, b, &gw, &gb);
    const double g2 = gw.squaredNorm() + gb * gb;
    if (std::sqrt(g2) < spec.gradient_tolerance) break;
    // Armijo backtracking from twice the last accepted step.
    step = std::min(step * 2.0, 64.0);
    for (int tries = 0; tries < 60; ++tries) {
      const Vector w_new = w - step * gw;
      const double b_new = b - step * gb;
      const double l_new = problem.Loss(w_new, b_new);
      if (l_new <= loss - 0.5 * step * g2) {
        w = w_new;
        b = b_new;
        loss = l_new;
        break;
      }
      step *= 0.5;
    }
  }
  return LogisticRegression(std::move(features), center, scale, w, b, it);
}

// ---------------------------------------------------------------------------
// Nearest neighbour

std::vector<int> KnnClassify(const Matrix& train, std::span<const int> labels, const Matrix& query) {
  CheckLabels(train, labels);
  const auto knn = kernels::KnnEuclidean(train, query, 1);
  std::vector<int> out(query.rows());
  for (Eigen::Index q = 0; q < query.rows(); ++q) out[q] = labels[knn.indices(q, 0)];
  return out;
}

NearestNeighborClassifier::NearestNeighborClassifier(Matrix train, std::vector<int> labels)
    : train_(std::move(train)), labels_(std::move(labels)) {
  CheckLabels(train_, labels_);
}

Vector NearestNeighborClassifier::PredictProba(const Matrix& x) const {
  const auto pred = KnnClassify(train_, labels_, x);
  Vector p(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) p[i] = pred[i];
  return p;
}

// ---------------------------------------------------------------------------
// MLP

struct Mlp::Forward {
  Eigen::MatrixXd zhat;
  Eigen::MatrixXd h;
  Eigen::MatrixXd a;
  Vector logit;
  Vector inv_std;
};

Mlp::Mlp(int inputs, int hidden, uint64_t seed)
    : inputs_(inputs),
      hidden_(hidden),
      w1_(inputs, hidden),
      gamma_(Vector::Ones(hidden)),
      beta_(Vector::Zero(hidden)),
      w2_(hidden),
      running_mean_(Vector::Zero(hidden)),
      running_var_(Vector::Ones(hidden)) {
  if (inputs < 1 || hidden < 1) throw ConfigError("MLP needs positive layer sizes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u1(-1.0 / std::sqrt(inputs), 1.0 / std::sqrt(inputs));
  for (Eigen::Index i = 0; i < w1_.size(); ++i) w1_.data()[i] = u1(rng);
  std::uniform_real_distribution<double> u2(-1.0 / std::sqrt(hidden), 1.0 / std::sqrt(hidden));
  for (auto& v : w2_) v = u2(rng);
}

int Mlp::num_parameters() const { return inputs_ * hidden_ + 3 * hidden_ + 1; }

Vector Mlp::parameters() const {
  Vector p(num_parameters());
  Eigen::Index o = 0;
  p.segment(o, w1_.size()) = Eigen::Map<const Vector>(w1_.data(), w1_.size());
  o += w1_.size();
  p.segment(o, hidden_) = gamma_;
  o += hidden_;
  p.segment(o, hidden_) = beta_;
  o += hidden_;
  p.segment(o, hidden_) = w2_;
  o += hidden_;
  p[o] = b2_;
  return p;
}

void Mlp::set_parameters(const Vector& flat) {
  if (flat.size() != num_parameters()) throw ConfigError("parameter vector has the wrong size");
  Eigen::Index o = 0;
  Eigen::Map<Vector>(w1_.data(), w1_.size()) = flat.segment(o, w1_.size());
  o += w1_.size();
  gamma_ = flat.segment(o, hidden_);
  o += hidden_;
  beta_ = flat.segment(o, hidden_);
  o += hidden_;
  w2_ = flat.segment(o, hidden_);
  o += hidden_;
  b2_ = flat[o];
}

Mlp::Forward Mlp::Run(const Matrix& x, bool batch_stats) const {
  if (x.cols() != inputs_) throw ConfigError("MLP input dimension mismatch");
  Forward f;
  Eigen::MatrixXd z = x * w1_;
  Vector mean, var;
  if (batch_stats) {
    mean = z.colwise().mean().transpose();
    var = (z.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() /
          static_cast<double>(z.rows());
  } else {
    mean = running_mean_;
    var = running_var_;
  }
  f.inv_std = (var.array() + kBnEpsilon).rsqrt();
  f.zhat = (z.rowwise() - mean.transpose()).array().rowwise() * f.inv_std.transpose().array();
  f.h = (f.zhat.array().rowwise() * gamma_.transpose().array()).rowwise() +
        beta_.transpose().array();
  f.a = f.h.cwiseMax(0.0);
  f.logit = (f.a * w2_).array() + b2_;
  return f;
}

Vector Mlp::PredictProba(const Matrix& x) const {
  return Run(x, false).logit.unaryExpr([](double v) { return Sigmoid(v); });
}

double Mlp::Loss(const Matrix& x, std::span<const int> labels) const {
  CheckLabels(x, labels);
  const auto f = Run(x, true);
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.logit.size(); ++i) s += Softplus(f.logit[i]) - labels[i] * f.logit[i];
  return s / static_cast<double>(f.logit.size());
}

double Mlp::LossAndGradient(const Matrix& x, std::span<const int> labels, Vector* gradient) const {
  CheckLabels(x, labels);
  const auto f = Run(x, true);
  const double n = static_cast<double>(x.rows());
  double loss = 0.0;
  Vector dlogit(f.logit.size());
  for (Eigen::Index i = 0; i < f.logit.size(); ++i) {
    loss += Softplus(f.logit[i]) - labels[i] * f.logit[i];
    dlogit[i] = (Sigmoid(f.logit[i]) - labels[i]) / n;
  }
  loss /= n;

  const Vector dw2 = f.a.transpose() * dlogit;
  const double db2 = dlogit.sum();
  Eigen::MatrixXd dh = dlogit * w2_.transpose();
  dh = (f.h.array() > 0.0).select(dh, 0.0);
  const Vector dgamma = (dh.array() * f.zhat.array()).colwise().sum().transpose();
  const Vector dbeta = dh.colwise().sum().transpose();
  const Eigen::MatrixXd dzhat = dh.array().rowwise() * gamma_.transpose().array();
  const Eigen::RowVectorXd sum_dzhat = dzhat.colwise().sum();
  const Eigen::RowVectorXd sum_dzhat_zhat = (dzhat.array() * f.zhat.array()).colwise().sum();
  Eigen::MatrixXd dz = (n * dzhat).rowwise() - sum_dzhat;
  dz -= (f.zhat.array().rowwise() * sum_dzhat_zhat.array()).matrix();
  dz = (dz.array().rowwise() * (f.inv_std.transpose().array() / n)).matrix();
  const Eigen::MatrixXd dw1 = x.transpose() * dz;

  gradient->resize(num_parameters());
  Eigen::Index o = 0;
  gradient->segment(o, dw1.size()) = Eigen::Map<const Vector>(dw1.data(), dw1.size());
  o += dw1.size();
  gradient->segment(o, hidden_) = dgamma;
  o += hidden_;
  gradient->segment(o, hidden_) = dbeta;
  o += hidden_;
  gradient->segment(o, hidden_) = dw2;
  o += hidden_;
  (*gradient)[o] = db2;
  return loss;
}

void Mlp::UpdateRunningStats(const Matrix& x, double momentum) {
  const Eigen::MatrixXd z = x * w1_;
  const Vector mean = z.colwise().mean().transpose();
  const double denom = z.rows() > 1 ? static_cast<double>(z.rows() - 1) : 1.0;
  const Vector var = (z.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() / denom;
  running_mean_ = momentum * running_mean_ + (1.0 - momentum) * mean;
  running_var_ = momentum * running_var_ + (1.0 - momentum) * var;
}

Mlp TrainMlp(const Matrix& x, std::span<const int> labels, const Matrix& x_val,
             std::span<const int> val_labels, const ClassifierSpec& spec, MlpTrainingLog* log) {
  spec.Validate();
  CheckLabels(x, labels);
  CheckLabels(x_val, val_labels);
  if (x.rows() < 2) throw ConfigError("MLP needs at least two training rows");

  Mlp model(static_cast<int>(x.cols()), spec.hidden, DeriveSeed(spec.seed, {0}));
  Mlp best = model;
  const Eigen::Index np = model.num_parameters();
  Vector m = Vector::Zero(np), v = Vector::Zero(np), grad;
  std::mt19937_64 rng(DeriveSeed(spec.seed, {1}));
  std::vector<Eigen::Index> order(x.rows());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<int> batch_labels;
  long step = 0;
  double best_f1 = -1.0;
  int since_best = 0;
  MlpTrainingLog local;

  for (int epoch = 0; epoch < spec.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += spec.batch_size) {
      const size_t end = std::min(order.size(), start + spec.batch_size);
      // Batch norm cannot use a single-row batch.
      if (end - start < 2) continue;
      const std::span<const Eigen::Index> idx(order.data() + start, end - start);
      const Matrix xb = x(idx, Eigen::all);
      batch_labels.assign(end - start, 0);
      for (size_t i = 0; i < idx.size(); ++i) batch_labels[i] = labels[idx[i]];
      model.LossAndGradient(xb, batch_labels, &grad);
      model.UpdateRunningStats(xb, spec.bn_momentum);
      ++step;
      m = kAdamBeta1 * m + (1 - kAdamBeta1) * grad;
      v = kAdamBeta2 * v + (1 - kAdamBeta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(kAdamBeta1, step);
      const double c2 = 1.0 - std::pow(kAdamBeta2, step);
      const Vector update =
          (m / c1).array() / ((v / c2).array().sqrt() + kAdamEpsilon) * spec.learning_rate;
      model.set_parameters(model.parameters() - update);
    }
    const double f1 = F1Score(model.Predict(x_val), val_labels);
    local.val_f1.push_back(f1);
    local.stopped_epoch = epoch;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = model;
      local.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= spec.patience) {
      break;
    }
  }
  if (log) *log = std::move(local);
  return best;
}

std::unique_ptr<Classifier> TrainClassifier(const Matrix& x, std::span<const int> labels,
                                            const Matrix& x_val, std::span<const int> val_labels,
                                            const ClassifierSpec& spec) {
  spec.Validate();
  CheckLabels(x, labels);
  if (SingleClass(labels)) return std::make_unique<ConstantClassifier>(labels[0]);
  switch (spec.kind) {
    case ClassifierKind::kLogisticRegression:
      return std::make_unique<LogisticRegression>(TrainLogisticRegression(x, labels, spec));
    case ClassifierKind::kKnn:
      return std::make_unique<NearestNeighborClassifier>(
          x, std::vector<int>(labels.begin(), labels.end()));
    case ClassifierKind::kMlp:
      return std::make_unique<Mlp>(TrainMlp(x, labels, x_val, val_labels, spec));
  }
  throw ConfigError("unknown classifier kind");
}

// ---------------------------------------------------------------------------
// Scores

void PredictionSet::Validate() const {
  const size_t n = truth.size();
  if (predicted.size() != n || privileged.size() != n || (!score.empty() && score.size() != n)) {
    throw ConfigError("prediction set vectors differ in length");
  }
  if (n == 0) throw ConfigError("empty prediction set");
}

PredictionSet MakePredictionSet(const Classifier& clf, const Matrix& x, std::vector<int> truth,
                                std::vector<int> privileged) {
  PredictionSet p;
  const Vector proba = clf.PredictProba(x);
  p.score.assign(proba.data(), proba.data() + proba.size());
  p.predicted.resize(p.score.size());
  for (size_t i = 0; i < p.score.size(); ++i) p.predicted[i] = p.score[i] > 0.5 ? 1 : 0;
  p.truth = std::move(truth);
  p.privileged = std::move(privileged);
  p.Validate();
  return p;
}

ClassificationScores ScoreClassification(const PredictionSet& pred) {
  pred.Validate();
  double tp = 0, fp = 0, fn = 0, correct = 0;
  for (size_t i = 0; i < pred.truth.size(); ++i) {
    const int p = pred.predicted[i], t = pred.truth[i];
    correct += p == t;
    tp += p == 1 && t == 1;
    fp += p == 1 && t == 0;
    fn += p == 0 && t == 1;
  }
  ClassificationScores s;
  s.accuracy = correct / static_cast<double>(pred.truth.size());
  s.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double F1Score(std::span<const int> predicted, std::span<const int> truth) {
  PredictionSet p;
  p.predicted.assign(predicted.begin(), predicted.end());
  p.truth.assign(truth.begin(), truth.end());
  p.privileged.assign(truth.size(), 0);
  return ScoreClassification(p).f1;
}

std::optional<FairnessScores> ScoreFairness(const PredictionSet& pred) {
  pred.Validate();
  double tpr_p = 0, fpr_p = 0, tpr_u = 0, fpr_u = 0;
  bool ok_p = false, ok_u = false;
  CountGroup(pred, 1, &tpr_p, &fpr_p, &ok_p);
  CountGroup(pred, 0, &tpr_u, &fpr_u, &ok_u);
  if (!ok_p || !ok_u) return std::nullopt;
  const double dtpr = tpr_u - tpr_p;
  const double dfpr = fpr_u - fpr_p;
  FairnessScores s;
  s.eod = std::abs(dtpr);
  s.aod = std::abs(0.5 * (dtpr + dfpr));
  s.eq_odds = std::max(std::abs(dtpr), std::abs(dfpr));
  return s;
}

// ---------------------------------------------------------------------------
// Token space

TokenFeatureMap::TokenFeatureMap(const Quantizer& quantizer, const Embedder& embedder)
    : dimension_(embedder.dimension()) {
  contributions_.resize(quantizer.num_fields());
  for (size_t f = 0; f < quantizer.num_fields(); ++f) {
    const auto& fq = quantizer.field(f);
    auto& per_token = contributions_[f];
    per_token.resize(fq.vocab_size());
    for (size_t i = 0; i < embedder.numeric().size(); ++i) {
      const auto& nf = embedder.numeric()[i];
      if (nf.column != fq.column) continue;
      for (int t = 0; t < fq.vocab_size(); ++t) {
        const double value = nf.stddev > 0 ? (fq.Center(t) - nf.mean) / nf.stddev : 0.0;
        per_token[t].push_back({static_cast<int>(i), value});
      }
    }
    for (const auto& cf : embedder.categorical()) {
      if (cf.column != fq.column) continue;
      for (int t = 0; t < fq.vocab_size(); ++t) {
        if (t == fq.unseen_token()) continue;
        const auto it = std::lower_bound(cf.categories.begin(), cf.categories.end(),
                                         fq.Category(t));
        if (it != cf.categories.end() && *it == fq.Category(t)) {
          per_token[t].push_back({cf.offset + static_cast<int>(it - cf.categories.begin()), 1.0});
        }
      }
    }
  }
}

void TokenFeatureMap::Features(std::span<const int32_t> tokens, double* out) const {
  if (tokens.size() != contributions_.size()) throw ConfigError("token row has the wrong width");
  std::fill(out, out + dimension_, 0.0);
  for (size_t f = 0; f < tokens.size(); ++f) {
    const int t = tokens[f];
    if (t < 0 || t >= static_cast<int>(contributions_[f].size())) {
      throw ConfigError("token outside the field vocabulary");
    }
    for (const auto& e : contributions_[f][t]) out[e.feature] += e.value;
  }
}

Matrix TokenFeatureMap::Features(const TokenMatrix& tokens) const {
  Matrix out(tokens.rows(), dimension_);
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    Features(std::span<const int32_t>(tokens.row(r).data(), tokens.cols()), out.row(r).data());
  }
  return out;
}

TokenEmbeddings BuildTokenEmbeddings(const Quantizer& quantizer, const TokenMatrix& real_train) {
  const int nf = static_cast<int>(quantizer.num_fields());
  if (real_train.cols() != nf) throw ConfigError("token matrix does not match the quantizer");
  std::vector<int> offset(nf + 1, 0);
  for (int f = 0; f < nf; ++f) offset[f + 1] = offset[f] + quantizer.field(f).vocab_size();
  TokenEmbeddings out;
  out.fields.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const auto& fq = quantizer.field(f);
    if (fq.kind == ColumnKind::kContinuous) {
      out.fields[f].resize(fq.vocab_size(), 1);
      for (int t = 0; t < fq.vocab_size(); ++t) out.fields[f](t, 0) = fq.Center(t);
      continue;
    }
    Eigen::MatrixXd profile = Eigen::MatrixXd::Zero(fq.vocab_size(), offset[nf]);
    Vector counts = Vector::Zero(fq.vocab_size());
    for (Eigen::Index r = 0; r < real_train.rows(); ++r) {
      const int t = real_train(r, f);
      counts[t] += 1.0;
      for (int g = 0; g < nf; ++g) {
        if (g != f) profile(t, offset[g] + real_train(r, g)) += 1.0;
      }
    }
    for (int t = 0; t < fq.vocab_size(); ++t) {
      if (counts[t] > 0) profile.row(t) /= counts[t];
    }
    out.fields[f] = std::move(profile);
  }
  return out;
}

std::vector<int> CandidateTokens(const Quantizer& quantizer, const TokenEmbeddings& embeddings,
                                 int field, int token, int n) {
  const auto& fq = quantizer.field(field);
  const auto& emb = embeddings.fields.at(field);
  struct Scored {
    double key;  // smaller is nearer
    int token;
  };
  std::vector<Scored> scored;
  for (int t = 0; t < fq.vocab_size(); ++t) {
    if (t == token || t == fq.unseen_token()) continue;
    double key;
    if (fq.kind == ColumnKind::kContinuous) {
      key = std::abs(emb(t, 0) - emb(token, 0));
    } else {
      const double na = emb.row(token).norm(), nb = emb.row(t).norm();
      const double cos = na > 0 && nb > 0 ? emb.row(token).dot(emb.row(t)) / (na * nb) : 0.0;
      key = -cos;
    }
    scored.push_back({key, t});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.key < b.key; });
  std::vector<int> out;
  for (size_t i = 0; i < scored.size() && static_cast<int>(i) < n; ++i) out.push_back(scored[i].token);
  return out;
}

void AttackConfig::Validate() const {
  if (candidates < 1) throw ConfigError("attack candidates must be >= 1");
  if (budget < 0 || budget > 1) throw ConfigError("attack budget outside [0,1]");
}

double CrossEntropy(double p_positive, int label) {
  const double p = std::clamp(p_positive, 1e-12, 1.0 - 1e-12);
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

AttackResult GreedySubstitutionAttack(const TokenScorer& scorer, std::span<const int32_t> sample,
                                      int label, std::span<const int> attackable,
                                      const Quantizer& quantizer,
                                      const TokenEmbeddings& embeddings, const AttackConfig& cfg,
                                      uint64_t sample_seed) {
  cfg.Validate();
  AttackResult out;
  out.tokens.assign(sample.begin(), sample.end());
  const int max_subs =
      static_cast<int>(std::floor(cfg.budget * static_cast<double>(attackable.size()) + 1e-9));
  if (max_subs == 0) return out;
  std::vector<int> order(attackable.begin(), attackable.end());
  std::mt19937_64 rng(DeriveSeed(cfg.seed, {sample_seed}));
  std::shuffle(order.begin(), order.end(), rng);

  double loss = CrossEntropy(scorer(out.tokens), label);
  for (int f : order) {
    if (out.substitutions >= max_subs) break;
    const int original = out.tokens[f];
    int best = -1;
    double best_loss = loss;
    for (int cand : CandidateTokens(quantizer, embeddings, f, original, cfg.candidates)) {
      out.tokens[f] = cand;
      const double l = CrossEntropy(scorer(out.tokens), label);
      if (l > best_loss) {
        best_loss = l;
        best = cand;
      }
    }
    out.tokens[f] = original;
    if (best >= 0) {
      out.tokens[f] = best;
      loss = best_loss;
      ++out.substitutions;
    }
  }
  return out;
}

RobustnessScores ScoreRobustness(const PredictionSet& clean, const PredictionSet& adversarial) {
  const auto c = ScoreClassification(clean);
  const auto a = ScoreClassification(adversarial);
  RobustnessScores r;
  r.adversarial = a;
  r.delta.accuracy = std::abs(c.accuracy - a.accuracy);
  r.delta.precision = std::abs(c.precision - a.precision);
  r.delta.recall = std::abs(c.recall - a.recall);
  r.delta.f1 = std::abs(c.f1 - a.f1);
  return r;
}

}  // namespace trustaudit::downstream
