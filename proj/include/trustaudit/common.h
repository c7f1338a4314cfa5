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

#ifndef TRUSTAUDIT_COMMON_H_
#define TRUSTAUDIT_COMMON_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace trustaudit {

// Point sets are stored one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using TokenMatrix =
    Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Raised for bad inputs: malformed files, schema mismatches, invalid
// configuration. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a computation cannot proceed on otherwise valid inputs.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mixes a base seed with stream identifiers (fold, block, classifier seed)
// so that every unit of parallel work draws from its own reproducible stream.
inline uint64_t DeriveSeed(uint64_t base, std::initializer_list<uint64_t> streams) {
  std::vector<uint32_t> words;
  words.reserve(2 + 2 * streams.size());
  words.push_back(static_cast<uint32_t>(base));
  words.push_back(static_cast<uint32_t>(base >> 32));
  for (uint64_t s : streams) {
    words.push_back(static_cast<uint32_t>(s));
    words.push_back(static_cast<uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace trustaudit

#endif  // TRUSTAUDIT_COMMON_H_
