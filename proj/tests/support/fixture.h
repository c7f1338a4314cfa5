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

#ifndef TRUSTAUDIT_TESTS_FIXTURE_H_
#define TRUSTAUDIT_TESTS_FIXTURE_H_

#include <cstdint>
#include <filesystem>

#include "trustaudit/core_data.h"

namespace trustaudit::testing {

// Census-like table with 15 columns: a row id, 7 continuous and 7
// categorical columns. `label` (no/yes) depends on income, education,
// hours, score_a and sex; sex=M is privileged.
DatasetSchema FixtureSchema();
TabularDataset MakeFixture(size_t rows, uint64_t seed);

// Writes <dir>/real.csv and <dir>/schema.json.
void WriteFixtureFiles(const std::filesystem::path& dir, size_t rows, uint64_t seed);

}  // namespace trustaudit::testing

#endif  // TRUSTAUDIT_TESTS_FIXTURE_H_
