#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fbharness/dataset.hpp"
#include "fbharness/evaluator.hpp"
#include "fbharness/metrics.hpp"
#include "fbharness/prompting.hpp"

namespace fbh {

namespace fs = std::filesystem;

/// A whole experiment matrix: datasets x conditions x models.
struct RunConfig {
  std::uint64_t seed = 0;
  fs::path output_dir = "runs/default";
  std::vector<DatasetSpec> datasets;   // one per (domain, kind, policy)
  std::vector<ConditionSet> conditions = {ConditionSet{}};
  std::vector<json> models = {json{{"type", "oracle"}}};
  int concurrency = 4;

  /// Dataset entries may list "kinds" (or "domains") to expand into one
  /// spec each; a missing "seed" inherits the global one. Unknown keys
  /// are rejected and every model descriptor is checked.
  static RunConfig from_json(const json& j);
  static RunConfig load(const fs::path& path);
  json to_json() const;
};

struct SolveSummary {
  std::string domain;
  std::size_t states = 0;
  std::size_t terminal = 0;
  std::size_t solvable_nonterminal = 0;
  int max_distance = 0;
  json to_json() const;
};

/// Solves a domain; with `out_dir`, writes <domain>.tables.jsonl and
/// <domain>.summary.json there.
SolveSummary cmd_solve(const std::string& domain,
                       const std::optional<fs::path>& out_dir = std::nullopt);

/// Builds every dataset of the config into output_dir/datasets and writes
/// output_dir/manifest.json. Returns the manifest.
json cmd_gen(const RunConfig& config);

struct EvalOptions {
  std::optional<int> concurrency;
  std::size_t stop_after = std::numeric_limits<std::size_t>::max();
  std::vector<std::string> only_models;  // model ids; empty = all
};

struct EvalRun {
  std::string dataset;
  std::string condition;
  std::string model;
  fs::path records;
  EvalSummary summary;
  std::string skipped;  // reason, when the combination cannot be rendered
};

/// Evaluates every (dataset, condition, model) of the config against the
/// datasets listed in the manifest. Resumes interrupted runs.
std::vector<EvalRun> cmd_eval(const RunConfig& config,
                              const EvalOptions& options = {});

/// Aggregates all record files below output_dir/records and writes
/// output_dir/reports/{report.json,report.txt,report.csv} plus diffs of
/// every condition against `baseline`. Cell sizes are checked against
/// the manifest when one is present.
Report cmd_report(const fs::path& output_dir,
                  const std::string& baseline = "baseline");
/// Aggregates explicit record files into `reports_dir`.
Report cmd_report_files(const std::vector<fs::path>& record_files,
                        const fs::path& reports_dir,
                        const std::string& baseline = "baseline");

/// The exact prompt text for one snapshot of a dataset file.
std::string cmd_verbalize(const fs::path& dataset_file,
                          const std::string& snapshot_id,
                          const ConditionSet& condition);

/// Reads a whole file; throws ConfigError when it cannot be opened.
std::string read_file(const fs::path& path);
/// Writes via a temporary file and rename.
void write_file(const fs::path& path, const std::string& content);

}  // namespace fbh
