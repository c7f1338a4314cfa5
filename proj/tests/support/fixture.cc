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

#include "fixture.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace trustaudit::testing {

DatasetSchema FixtureSchema() {
  DatasetSchema s;
  const auto cont = ColumnKind::kContinuous;
  const auto cat = ColumnKind::kCategorical;
  s.columns = {{"id", cont},        {"age", cont},        {"hours", cont},     {"income", cont},
               {"capital", cont},   {"score_a", cont},    {"score_b", cont},   {"tenure", cont},
               {"sex", cat},        {"education", cat},   {"region", cat},     {"occupation", cat},
               {"marital", cat},    {"contract", cat},    {"label", cat}};
  s.target = "label";
  s.protected_column = "sex";
  s.privileged_value = "M";
  s.id_columns = {"id"};
  s.Validate();
  return s;
}

TabularDataset MakeFixture(size_t rows, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](std::initializer_list<double> w) {
    std::discrete_distribution<int> d(w);
    return d(rng);
  };
  static const char* kEdu[] = {"primary", "secondary", "bachelor", "master", "doctorate"};
  static const char* kRegion[] = {"north", "south", "east", "west"};
  static const char* kOcc[] = {"manual", "service", "clerical", "technical", "professional", "manager"};
  static const char* kMarital[] = {"single", "married", "divorced"};
  static const char* kContract[] = {"none", "fixed", "permanent"};

  std::vector<Column> cols(15);
  for (size_t r = 0; r < rows; ++r) {
    const double age = std::clamp(40.0 + 12.0 * z(rng), 18.0, 80.0);
    const bool male = u(rng) < 0.55;
    const int edu = pick({0.15, 0.35, 0.3, 0.15, 0.05});
    const double hours = std::clamp(38.0 + 8.0 * z(rng) + (male ? 3.0 : 0.0), 5.0, 80.0);
    const double income =
        std::exp(9.6 + 0.22 * edu + 0.012 * (age - 40.0) + 0.008 * (hours - 38.0) + 0.35 * z(rng));
    const double capital = u(rng) < 0.8 ? 0.0 : std::round(std::exp(7.0 + 1.2 * z(rng)));
    const double a = z(rng);
    const double score_a = a;
    const double score_b = 0.7 * a + std::sqrt(1 - 0.49) * z(rng);
    const double tenure = std::max(0.0, std::round((age - 18.0) * 0.4 * u(rng) * 10.0) / 10.0);
    const int region = pick({0.3, 0.25, 0.25, 0.2});
    const int occ = std::clamp(edu + pick({0.2, 0.3, 0.3, 0.2}) - 1, 0, 5);
    const int marital = age < 28 ? pick({0.7, 0.25, 0.05}) : pick({0.25, 0.55, 0.2});
    const int contract = pick({0.2, 0.3, 0.5});
    const double logit = -1.2 + 1.1 * (std::log(income) - 10.2) + 0.35 * (edu - 1.5) +
                         0.03 * (hours - 38.0) + 0.6 * score_a + (male ? 0.4 : 0.0) +
                         (contract == 2 ? 0.3 : 0.0);
    const bool yes = u(rng) < 1.0 / (1.0 + std::exp(-logit));

    cols[0].numeric.push_back(static_cast<double>(r));
    cols[1].numeric.push_back(std::round(age));
    cols[2].numeric.push_back(std::round(hours));
    cols[3].numeric.push_back(std::round(income));
    cols[4].numeric.push_back(capital);
    cols[5].numeric.push_back(std::round(score_a * 1000.0) / 1000.0);
    cols[6].numeric.push_back(std::round(score_b * 1000.0) / 1000.0);
    cols[7].numeric.push_back(tenure);
    cols[8].categorical.push_back(male ? "M" : "F");
    cols[9].categorical.push_back(kEdu[edu]);
    cols[10].categorical.push_back(kRegion[region]);
    cols[11].categorical.push_back(kOcc[occ]);
    cols[12].categorical.push_back(kMarital[marital]);
    cols[13].categorical.push_back(kContract[contract]);
    cols[14].categorical.push_back(yes ? "yes" : "no");
  }
  return TabularDataset(FixtureSchema(), std::move(cols));
}

void WriteFixtureFiles(const std::filesystem::path& dir, size_t rows, uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "real.csv", std::ios::binary);
  WriteCsv(MakeFixture(rows, seed), csv);
  std::ofstream schema(dir / "schema.json", std::ios::binary);
  schema << FixtureSchema().ToJson().dump(2) << "\n";
}

}  // namespace trustaudit::testing
