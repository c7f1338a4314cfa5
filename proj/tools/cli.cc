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

#include "cli.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "trustaudit/aggregation.h"
#include "trustaudit/core_data.h"
#include "trustaudit/report.h"
#include "trustaudit/synthgen.h"

namespace trustaudit::cli {
namespace {

namespace fs = std::filesystem;

std::string UtcTimestamp() {
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure(fmt::format("cannot write {}", path.string()));
  f << content;
  if (!f) throw RuntimeFailure(fmt::format("failed writing {}", path.string()));
}

void PrintRanking(const ProfileRanking& ranking, std::ostream& out) {
  out << fmt::format("profile {} {}\n", ranking.profile.name, ranking.profile.RawNotation());
  int rank = 0;
  for (const auto& e : ranking.entries) {
    out << fmt::format("{:>3}  {:<24} tau={}  R={:.4f}\n", ++rank, e.model_id,
                       report::FormatIndex(e.tau_mean, e.tau_deviation), e.score);
  }
}

struct Options {
  // audit
  std::string config, out_dir;
  // rank / select
  std::string records, profiles, profile;
  double alpha = 0.0;
  // generate / collapse
  std::string real, schema, out, save_model;
  size_t rows = 0;
  uint64_t seed = 0;
  std::optional<double> dp_epsilon;
  int generations = 5;
  int folds = 1;
};

int RunAuditCommand(const Options& o, std::ostream& out) {
  const auto config = report::LoadAuditConfig(o.config);
  const auto rep = report::RunAudit(config, UtcTimestamp());
  fs::create_directories(o.out_dir);
  WriteFile(fs::path(o.out_dir) / "report.json", report::RenderJson(rep));
  WriteFile(fs::path(o.out_dir) / "report.md", report::RenderMarkdown(rep));
  {
    std::ofstream f(fs::path(o.out_dir) / "records.jsonl", std::ios::binary);
    if (!f) throw RuntimeFailure("cannot write records.jsonl");
    WriteRecordsJsonl(rep.records, f);
  }
  for (const auto& r : rep.rankings) PrintRanking(r, out);
  out << fmt::format("wrote {}/report.json, report.md, records.jsonl\n", o.out_dir);
  return 0;
}

int RunRankCommand(const Options& o, std::ostream& out) {
  const auto records = ReadRecordsJsonl(fs::path(o.records));
  const auto profiles = LoadProfiles(o.profiles);
  if (!(o.alpha >= 0)) throw ConfigError("--alpha must be >= 0");
  for (const auto& r : RankRecords(records, profiles, o.alpha)) PrintRanking(r, out);
  return 0;
}

int RunSelectCommand(const Options& o, std::ostream& out) {
  const auto records = ReadRecordsJsonl(fs::path(o.records));
  std::optional<TrustProfile> profile;
  if (!o.profiles.empty()) {
    for (const auto& p : LoadProfiles(o.profiles)) {
      if (p.name == o.profile) profile = p;
    }
    if (!profile) throw ConfigError(fmt::format("profile '{}' not found in {}", o.profile, o.profiles));
  } else {
    profile = PresetProfile(o.profile);
  }
  out << fmt::format("profile {} {}\n", profile->name, profile->RawNotation());
  for (const auto& c : SelectCheckpoints(records, *profile)) {
    out << fmt::format("{} fold {} checkpoint {} tau_val={:.4f}\n", c.model_id, c.fold_id,
                       c.checkpoint_id, c.validation_tau);
  }
  return 0;
}

int RunGenerateCommand(const Options& o, std::ostream& out) {
  const auto schema = LoadSchema(o.schema);
  const auto real = LoadCsv(o.real, schema);
  const size_t rows = o.rows > 0 ? o.rows : real.num_rows();
  std::optional<TabularDataset> synth;
  if (o.dp_epsilon) {
    const synthgen::IndependentCategoricalSampler sampler(real, 10);
    synthgen::PrivateSamplerConfig cfg;
    cfg.epsilon = *o.dp_epsilon;
    cfg.total_length = static_cast<int>(sampler.quantizer().num_fields());
    cfg.Validate();
    synth.emplace(sampler.Sample(rows, o.seed, cfg));
  } else {
    const auto model = synthgen::FitGaussianCopula(real, DeriveSeed(o.seed, {0}));
    if (!o.save_model.empty()) WriteFile(o.save_model, model.ToJson().dump(2) + "\n");
    synth.emplace(synthgen::SampleGaussianCopula(model, rows, DeriveSeed(o.seed, {1})));
  }
  if (o.out.empty()) {
    WriteCsv(*synth, out);
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw RuntimeFailure(fmt::format("cannot write {}", o.out));
    WriteCsv(*synth, f);
  }
  return 0;
}

int RunCollapseCommand(const Options& o, std::ostream& out) {
  const auto schema = LoadSchema(o.schema);
  const auto real = LoadCsv(o.real, schema);
  const auto summary = report::RunCollapse(real, o.generations, o.rows, o.folds, o.seed, {});
  std::vector<double> gen(summary.generations.size());
  for (size_t g = 0; g < gen.size(); ++g) gen[g] = static_cast<double>(g + 1);
  out << "generation  fidelity  privacy\n";
  for (size_t g = 0; g < gen.size(); ++g) {
    out << fmt::format("{:>10}  {:.4f}    {:.4f}\n", g + 1, summary.fidelity[g], summary.privacy[g]);
  }
  if (gen.size() >= 2) {
    out << fmt::format("spearman(fidelity, generation) = {:.4f}\n",
                       report::SpearmanCorrelation(gen, summary.fidelity));
    out << fmt::format("spearman(privacy, generation) = {:.4f}\n",
                       report::SpearmanCorrelation(gen, summary.privacy));
  }
  for (const auto& w : summary.report.warnings) out << fmt::format("{}: {}\n", w.severity, w.text);
  if (!o.out.empty()) WriteFile(o.out, report::RenderJson(summary.report));
  return 0;
}

}  // namespace

int CliMain(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trust audit for synthetic tabular data", "trustaudit"};
  app.require_subcommand(1);
  Options o;

  auto* audit = app.add_subcommand("audit", "Run a full audit from a JSON config");
  audit->add_option("--config", o.config, "Audit config (JSON)")->required();
  audit->add_option("--out", o.out_dir, "Output directory")->required();

  auto* rank = app.add_subcommand("rank", "Rank models from metric records");
  rank->add_option("--records", o.records, "Metric records (JSONL)")->required();
  rank->add_option("--profiles", o.profiles, "Trust profiles (JSON)")->required();
  rank->add_option("--alpha", o.alpha, "Uncertainty penalty")->required();

  auto* select = app.add_subcommand("select", "Select checkpoints from validation records");
  select->add_option("--records", o.records, "Metric records (JSONL)")->required();
  select->add_option("--profile", o.profile, "Profile name")->required();
  select->add_option("--profiles", o.profiles, "Profile file to look the name up in (default: presets)");

  auto* generate = app.add_subcommand("generate", "Fit the baseline generator and sample");
  generate->add_option("--real", o.real, "Real data (CSV)")->required();
  generate->add_option("--schema", o.schema, "Schema (JSON)")->required();
  generate->add_option("--rows", o.rows, "Rows to sample")->required();
  generate->add_option("--seed", o.seed, "Seed")->required();
  generate->add_option("--dp-epsilon", o.dp_epsilon, "Use the private categorical sampler");
  generate->add_option("--out", o.out, "Output CSV (default: stdout)");
  generate->add_option("--save-model", o.save_model, "Write the fitted copula model (JSON)");

  auto* collapse = app.add_subcommand("collapse", "Iterative retraining experiment");
  collapse->add_option("--real", o.real, "Real data (CSV)")->required();
  collapse->add_option("--schema", o.schema, "Schema (JSON)")->required();
  collapse->add_option("--generations", o.generations, "Generations")->required();
  collapse->add_option("--rows", o.rows, "Rows per generation (default: training size)");
  collapse->add_option("--seed", o.seed, "Seed");
  collapse->add_option("--folds", o.folds, "Folds");
  collapse->add_option("--out", o.out, "Write the collapse report (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*audit) return RunAuditCommand(o, out);
    if (*rank) return RunRankCommand(o, out);
    if (*select) return RunSelectCommand(o, out);
    if (*generate) return RunGenerateCommand(o, out);
    if (*collapse) return RunCollapseCommand(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace trustaudit::cli
