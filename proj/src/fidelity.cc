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

#include "trustaudit/fidelity.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "trustaudit/kernels.h"

namespace trustaudit::fidelity {
namespace {

constexpr double kCovarianceRidge = 1e-6;

Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd SampleCovariance(const Matrix& x, const Vector& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double SampleVariance(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

std::vector<double> Project(const Matrix& features, const Vector& w) {
  const Vector p = features * w;
  return {p.data(), p.data() + p.size()};
}

}  // namespace

double ChiSquaredDistance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("histograms differ in length");
  if (a.empty()) throw ConfigError("empty field vocabulary");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = a[i] + b[i];
    if (denom > 0.0) s += (a[i] - b[i]) * (a[i] - b[i]) / denom;
  }
  return 0.5 * s;
}

std::vector<double> FieldFrequencies(const TokenMatrix& tokens, int field, int vocab_size) {
  if (vocab_size < 1) throw ConfigError("empty field vocabulary");
  std::vector<double> freq(vocab_size, 0.0);
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    const int t = tokens(r, field);
    if (t < 0 || t >= vocab_size) throw ConfigError("token outside the field vocabulary");
    freq[t] += 1.0;
  }
  const double n = static_cast<double>(tokens.rows());
  for (auto& f : freq) f /= n;
  return freq;
}

double ChiSquaredPerField(const TokenMatrix& real, const TokenMatrix& synth, int field,
                          int vocab_size) {
  return ChiSquaredDistance(FieldFrequencies(real, field, vocab_size),
                            FieldFrequencies(synth, field, vocab_size));
}

Matrix MutualInformationMatrix(const TokenMatrix& tokens) {
  if (tokens.rows() < 1) throw ConfigError("mutual information needs at least one row");
  const Eigen::Index f = tokens.cols();
  const double n = static_cast<double>(tokens.rows());
  std::vector<int> sizes(f);
  for (Eigen::Index j = 0; j < f; ++j) sizes[j] = tokens.col(j).maxCoeff() + 1;
  std::vector<std::vector<int64_t>> marginals(f);
  for (Eigen::Index j = 0; j < f; ++j) {
    marginals[j].assign(sizes[j], 0);
    for (Eigen::Index r = 0; r < tokens.rows(); ++r) ++marginals[j][tokens(r, j)];
  }
  Matrix mi = Matrix::Zero(f, f);
  for (Eigen::Index i = 0; i < f; ++i) {
    for (Eigen::Index j = i; j < f; ++j) {
      std::vector<int64_t> joint(static_cast<size_t>(sizes[i]) * sizes[j], 0);
      for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
        ++joint[static_cast<size_t>(tokens(r, i)) * sizes[j] + tokens(r, j)];
      }
      double s = 0.0;
      for (int a = 0; a < sizes[i]; ++a) {
        for (int b = 0; b < sizes[j]; ++b) {
          const int64_t c = joint[static_cast<size_t>(a) * sizes[j] + b];
          if (c == 0) continue;
          const double p = static_cast<double>(c) / n;
          const double pa = static_cast<double>(marginals[i][a]) / n;
          const double pb = static_cast<double>(marginals[j][b]) / n;
          s += p * std::log(p / (pa * pb));
        }
      }
      mi(i, j) = s;
      mi(j, i) = s;
    }
  }
  return mi;
}

double MiL2Difference(const TokenMatrix& real, const TokenMatrix& synth) {
  if (real.cols() != synth.cols()) throw ConfigError("token matrices differ in field count");
  return (MutualInformationMatrix(real) - MutualInformationMatrix(synth)).norm();
}

double WitnessSnr(std::span<const double> a, std::span<const double> b) {
  const double ma = Mean(a), mb = Mean(b);
  const double pooled = std::sqrt(0.5 * (SampleVariance(a, ma) + SampleVariance(b, mb)));
  return std::abs(ma - mb) / std::max(pooled, 1e-12);
}

WitnessResult MmdWitnessSnr(const Matrix& real, const Matrix& synth, const RffMap& rff,
                            uint64_t split_seed) {
  if (real.rows() < 8 || synth.rows() < 8) {
    throw ConfigError("MMD witness needs at least 8 rows per set");
  }
  auto halves = [](Eigen::Index n, uint64_t seed) {
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto mid = order.begin() + n / 2;
    std::vector<Eigen::Index> train(order.begin(), mid), test(mid, order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return std::pair{train, test};
  };
  // One stream for both sets, so swapping the roles only flips the sign.
  const auto [real_train, real_test] = halves(real.rows(), DeriveSeed(split_seed, {0}));
  const auto [synth_train, synth_test] = halves(synth.rows(), DeriveSeed(split_seed, {0}));

  const Matrix fr_train = rff.Transform(real(real_train, Eigen::all));
  const Matrix fs_train = rff.Transform(synth(synth_train, Eigen::all));
  const Matrix fr_test = rff.Transform(real(real_test, Eigen::all));
  const Matrix fs_test = rff.Transform(synth(synth_test, Eigen::all));

  const Vector mu_r = fr_train.colwise().mean().transpose();
  const Vector mu_s = fs_train.colwise().mean().transpose();
  const Eigen::MatrixXd cr = fr_train.rowwise() - mu_r.transpose();
  const Eigen::MatrixXd cs = fs_train.rowwise() - mu_s.transpose();
  Eigen::MatrixXd pooled(cr.cols(), cr.cols());
  pooled.setZero();
  pooled.selfadjointView<Eigen::Lower>().rankUpdate(cr.transpose());
  pooled.selfadjointView<Eigen::Lower>().rankUpdate(cs.transpose());
  pooled = pooled.selfadjointView<Eigen::Lower>();
  pooled /= static_cast<double>(cr.rows() + cs.rows() - 2);
  pooled.diagonal().array() += kCovarianceRidge;

  WitnessResult out;
  out.weights = pooled.ldlt().solve(mu_r - mu_s);
  out.train_snr = WitnessSnr(Project(fr_train, out.weights), Project(fs_train, out.weights));
  out.test_real = Project(fr_test, out.weights);
  out.test_synth = Project(fs_test, out.weights);
  out.test_snr = WitnessSnr(out.test_real, out.test_synth);
  return out;
}

double MmdPermutationPValue(std::span<const double> test_real, std::span<const double> test_synth,
                            int permutations, uint64_t seed) {
  if (permutations < 1) throw ConfigError("permutation count must be >= 1");
  if (test_real.empty() || test_synth.empty()) throw ConfigError("empty witness values");
  const double observed = WitnessSnr(test_real, test_synth);
  std::vector<double> pooled(test_real.begin(), test_real.end());
  pooled.insert(pooled.end(), test_synth.begin(), test_synth.end());
  const size_t n_real = test_real.size();
  std::mt19937_64 rng(seed);
  int at_least = 0;
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(pooled.begin(), pooled.end(), rng);
    const std::span<const double> all(pooled);
    if (WitnessSnr(all.first(n_real), all.subspan(n_real)) >= observed) ++at_least;
  }
  return (1.0 + at_least) / (1.0 + permutations);
}

double FrechetDistanceGaussian(const Vector& mean_a, const Eigen::MatrixXd& cov_a,
                               const Vector& mean_b, const Eigen::MatrixXd& cov_b) {
  const Eigen::Index d = mean_a.size();
  if (mean_b.size() != d || cov_a.rows() != d || cov_b.rows() != d) {
    throw ConfigError("Frechet distance dimension mismatch");
  }
  const Eigen::MatrixXd ridge = kCovarianceRidge * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd sa = cov_a + ridge;
  const Eigen::MatrixXd sb = cov_b + ridge;
  const Eigen::MatrixXd root_a = SymmetricSqrt(sa);
  const Eigen::MatrixXd cross = SymmetricSqrt(root_a * sb * root_a);
  const double d2 = (mean_a - mean_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * cross.trace();
  return std::max(d2, 0.0);
}

double FrechetDistance(const Matrix& a, const Matrix& b) {
  if (a.rows() < 2 || b.rows() < 2) throw ConfigError("Frechet distance needs at least 2 rows");
  if (a.cols() != b.cols()) throw ConfigError("Frechet distance dimension mismatch");
  const Vector ma = a.colwise().mean().transpose();
  const Vector mb = b.colwise().mean().transpose();
  return FrechetDistanceGaussian(ma, SampleCovariance(a, ma), mb, SampleCovariance(b, mb));
}

PrecisionRecall KnnPrecisionRecall(const Matrix& real, const Matrix& synth, int k) {
  if (real.rows() <= k || synth.rows() <= k) {
    throw ConfigError(fmt::format("precision/recall needs more than k={} rows per set", k));
  }
  auto radii = [k](const Matrix& set) {
    const auto knn = kernels::KnnEuclidean(set, set, k, /*exclude_self=*/true);
    std::vector<double> r(set.rows());
    for (Eigen::Index i = 0; i < set.rows(); ++i) r[i] = knn.distances(i, k - 1);
    return r;
  };
  const auto real_radii = radii(real);
  const auto synth_radii = radii(synth);
  const auto precise = kernels::CoveredByBalls(real, real_radii, synth);
  const auto recalled = kernels::CoveredByBalls(synth, synth_radii, real);
  PrecisionRecall out;
  out.precision = std::accumulate(precise.begin(), precise.end(), 0.0) / synth.rows();
  out.recall = std::accumulate(recalled.begin(), recalled.end(), 0.0) / real.rows();
  return out;
}

}  // namespace trustaudit::fidelity
