#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbharness/mdp.hpp"
#include "fbharness/types.hpp"

namespace fbh {

/// Ground-truth answer for one snapshot. Only the fields of `kind` are used.
struct Label {
  FeedbackKind kind = FeedbackKind::Binary;
  int sign = 0;                                   // binary, preference
  std::vector<std::string> optimal;               // action
  std::vector<std::pair<int, int>> optimal_next;  // goal: (row, col)
  std::array<double, 3> delta{};                  // delta
  bool close = false;                             // delta gripper command
  double epsilon = 0.28;                          // delta
  std::string expert_action;                      // delta

  bool operator==(const Label&) const = default;
};

struct HistoryStep {
  json state;
  std::string action;
  bool operator==(const HistoryStep&) const = default;
};

/// One evaluation unit. Actions are stored by name so files are readable
/// without the environment.
struct Snapshot {
  std::string id;
  std::string domain;
  FeedbackKind kind = FeedbackKind::Binary;
  SamplingPolicyKind policy = SamplingPolicyKind::Exhaustive;
  std::uint64_t seed = 0;
  json state;
  std::optional<std::string> action;                              // binary, delta
  std::optional<std::pair<std::string, std::string>> action_pair;  // preference
  std::vector<std::string> actions;  // legal actions, canonical order
  Label label;
  std::vector<HistoryStep> history;  // oldest first, ends just before `state`
  std::optional<std::int64_t> pair_id;      // preference: shared by mirrors
  std::optional<std::string> gt_position;   // preference: "first" | "second"
  json provenance = json::object();

  bool operator==(const Snapshot&) const = default;
};

json to_json(const Label& label);
Label label_from_json(const json& j);
json to_json(const Snapshot& s);
/// Throws SchemaError carrying `line` and the offending field.
Snapshot snapshot_from_json(const json& j, std::size_t line = 0);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Snapshot>& snapshots);
std::vector<Snapshot> read_jsonl(const std::filesystem::path& path);
/// Parses JSONL text; the empty string yields an empty list.
std::vector<Snapshot> parse_jsonl(const std::string& text);
std::string to_jsonl(const std::vector<Snapshot>& snapshots);

}  // namespace fbh
