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

#ifndef TRUSTAUDIT_FIDELITY_H_
#define TRUSTAUDIT_FIDELITY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "trustaudit/common.h"
#include "trustaudit/embedding.h"

namespace trustaudit::fidelity {

// 0.5 * sum (a_i - b_i)^2 / (a_i + b_i) over two frequency vectors; terms
// with a_i + b_i = 0 contribute nothing.
double ChiSquaredDistance(std::span<const double> a, std::span<const double> b);

// Token frequencies of one field, normalized to sum 1.
std::vector<double> FieldFrequencies(const TokenMatrix& tokens, int field, int vocab_size);

// Chi-squared distance between the real and synthetic token frequencies of
// one field. Both matrices must come from the same quantizer.
double ChiSquaredPerField(const TokenMatrix& real, const TokenMatrix& synth, int field,
                          int vocab_size);

// Plug-in mutual information (natural log) between every pair of token
// columns. The diagonal holds the empirical entropy.
Matrix MutualInformationMatrix(const TokenMatrix& tokens);

// Frobenius norm of the difference of the two mutual-information matrices.
double MiL2Difference(const TokenMatrix& real, const TokenMatrix& synth);

// |mean(a) - mean(b)| / sqrt((var(a) + var(b)) / 2), sample variances.
double WitnessSnr(std::span<const double> a, std::span<const double> b);

struct WitnessResult {
  double train_snr = 0.0;
  double test_snr = 0.0;
  Vector weights;  // Fisher discriminant direction in RFF space
  // Frozen-witness values on the held-out halves, consumed by the
  // permutation test.
  std::vector<double> test_real;
  std::vector<double> test_synth;
};

// Splits both sets in half (seeded), fits a Fisher discriminant in RFF space
// on the training halves with 1e-6 ridge on the pooled covariance, and
// reports the witness signal-to-noise ratio on both halves.
WitnessResult MmdWitnessSnr(const Matrix& real, const Matrix& synth, const RffMap& rff,
                            uint64_t split_seed);

// (1 + #{permuted SNR >= observed}) / (1 + permutations), labels reshuffled
// across the two held-out halves.
double MmdPermutationPValue(std::span<const double> test_real, std::span<const double> test_synth,
                            int permutations, uint64_t seed);

// Frechet distance between two Gaussians. Covariances get 1e-6 * I; matrix
// square roots use a symmetric eigendecomposition with negative eigenvalues
// clipped to 0.
double FrechetDistanceGaussian(const Vector& mean_a, const Eigen::MatrixXd& cov_a,
                               const Vector& mean_b, const Eigen::MatrixXd& cov_b);

// Frechet distance between Gaussians fit (sample mean, unbiased covariance)
// to the two point sets.
double FrechetDistance(const Matrix& a, const Matrix& b);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// k-NN manifold precision and recall. Radii are the distance to the k-th
// nearest other member of the same set.
PrecisionRecall KnnPrecisionRecall(const Matrix& real, const Matrix& synth, int k);

}  // namespace trustaudit::fidelity

#endif  // TRUSTAUDIT_FIDELITY_H_
