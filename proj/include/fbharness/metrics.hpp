#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbharness/mdp.hpp"
#include "fbharness/response.hpp"
#include "fbharness/snapshot.hpp"

namespace fbh {

/// One scored model answer: the atom of every metric.
struct EvalRecord {
  std::string snapshot_id;
  std::string dataset;          // DatasetSpec::stem()
  std::string dataset_version;  // content hash of the dataset file
  std::string domain;
  FeedbackKind kind = FeedbackKind::Binary;
  SamplingPolicyKind policy = SamplingPolicyKind::Exhaustive;
  std::string condition;
  std::string model;
  json parsed;                  // null when `error` is set
  std::optional<ErrorClass> error;
  bool correct = false;
  // Ground truth needed by the metrics without reopening the dataset.
  std::optional<bool> positive;             // binary: action is optimal
  std::optional<std::string> gt_position;   // preference: "first" | "second"
  std::optional<std::int64_t> pair_id;
  std::string transcript;       // transcript file holding the raw response

  std::string key() const;      // snapshot id, condition, model
  bool operator==(const EvalRecord&) const = default;
};

json to_json(const EvalRecord& r);
/// Throws SchemaError naming `line` and the field.
EvalRecord record_from_json(const json& j, std::size_t line = 0);

/// Reads a record file. A final line without a newline (an interrupted
/// write) is ignored; any other bad line is a SchemaError.
std::vector<EvalRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path,
                   const std::vector<EvalRecord>& records);

struct Interval {
  double lo = 0, hi = 0;
};
/// Wilson score interval; z = 1.96 gives 95%.
Interval wilson(std::size_t successes, std::size_t n, double z = 1.96);

struct CellKey {
  std::string domain;
  FeedbackKind kind = FeedbackKind::Binary;
  SamplingPolicyKind policy = SamplingPolicyKind::Exhaustive;
  std::string condition;
  std::string model;
  auto operator<=>(const CellKey&) const = default;
};

struct BinaryStats {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

struct PositionStats {
  std::size_t n_first = 0, correct_first = 0;
  std::size_t n_second = 0, correct_second = 0;
  double acc_first = 0, acc_second = 0;
  double gap = 0;  // acc_first - acc_second
};

struct Cell {
  CellKey key;
  std::string dataset;
  std::size_t n = 0, correct = 0;
  double accuracy = 0;
  Interval ci;  // Wilson 95%, an extra not found in the usual tables
  std::size_t format_errors = 0, illegal_values = 0;
  std::optional<BinaryStats> binary;
  std::optional<PositionStats> position;
};

struct Report {
  std::map<std::string, std::string> dataset_versions;  // dataset -> version
  std::vector<Cell> cells;  // sorted by key

  json to_json() const;
  static Report from_json(const json& j);
  /// Aligned columns, one row per cell.
  std::string text_table() const;
  std::string csv() const;
  const Cell* find(const CellKey& key) const;
};

/// Throws ConfigError on an empty record set, duplicate records or a
/// dataset appearing under two versions.
Report aggregate(const std::vector<EvalRecord>& records);

struct CellDelta {
  CellKey base;     // condition = baseline condition
  std::string variant_condition;
  double base_accuracy = 0, variant_accuracy = 0, delta = 0;
  std::string arrow() const;  // "↑", "↓" or "="
};
/// Aligns cells on (domain, kind, policy, model). Each side must hold one
/// cell per aligned key and both sides the same keys.
std::vector<CellDelta> diff_reports(const Report& base, const Report& variant);
/// The sub-report of one condition label.
Report select_condition(const Report& report, const std::string& condition);
std::string diff_table(const std::vector<CellDelta>& deltas);
json to_json(const std::vector<CellDelta>& deltas);

}  // namespace fbh
