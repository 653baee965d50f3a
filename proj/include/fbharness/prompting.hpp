#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fbharness/mdp.hpp"
#include "fbharness/snapshot.hpp"

namespace fbh {

class OracleTables;

/// `Standard` is the plain prompt; the other modes swap or extend its
/// task description.
enum class DynamicsMode { Standard, Unknown, Full, LegalOnly };
std::string_view to_string(DynamicsMode m);
std::optional<DynamicsMode> parse_dynamics(std::string_view text);

struct ConditionSet {
  static constexpr int kDefaultHistory = 4;

  int icl = 0;                 // number of worked examples
  bool icl_generated = false;  // draw examples from the oracle, not the corpus
  bool thinking_guides = false;
  DynamicsMode dynamics = DynamicsMode::Standard;
  int history = 0;             // steps of trajectory shown
  bool egocentric = false;

  /// "baseline", or the enabled conditions joined by '+'.
  std::string label() const;
  json to_json() const;
  /// Accepts booleans for icl/history (true = 3 examples / 4 steps).
  static ConditionSet from_json(const json& j);
  bool operator==(const ConditionSet&) const = default;
};

struct ResponseSchema {
  std::vector<std::string> fields;   // answer fields besides "reasoning"
  std::vector<std::string> allowed;  // allowed values; empty = numeric
};

struct PromptSection {
  std::string name;
  std::string text;
};

struct PromptBundle {
  std::string text;
  FeedbackKind kind = FeedbackKind::Binary;
  ResponseSchema schema;
  std::string snapshot_id;
  std::string condition;
  std::vector<PromptSection> sections;
};

/// Template family for a domain name ("doorkey-5x5" uses "doorkey").
std::string template_family(std::string_view domain);

/// Renders snapshots of one environment. `tables` is only needed for
/// oracle-generated ICL examples.
class PromptBuilder {
 public:
  explicit PromptBuilder(const Environment& env,
                         const OracleTables* tables = nullptr);

  /// Section order: task, dynamics, guides, icl, observation, history,
  /// question, footer. Joined by newlines, except that the observation
  /// and question share a line where the domain's template says so.
  PromptBundle build(const Snapshot& snapshot, const ConditionSet& c) const;

  /// Throws ConfigError for combinations this domain cannot render.
  void validate(FeedbackKind kind, const ConditionSet& c) const;

  std::string task_section(FeedbackKind kind, const ConditionSet& c) const;
  std::string dynamics_section(DynamicsMode mode, const State& s) const;
  std::string thinking_guides() const;
  std::string icl_section(const Snapshot& snapshot, const ConditionSet& c) const;
  std::string history_section(const Snapshot& snapshot, int k,
                              bool egocentric) const;
  std::string question(const Snapshot& snapshot) const;
  std::string footer(FeedbackKind kind) const;
  ResponseSchema schema(const Snapshot& snapshot) const;

 private:
  std::string action_list() const;
  std::string generated_icl(const Snapshot& snapshot, int k) const;

  const Environment& env_;
  const OracleTables* tables_;
  std::string family_;
  json templates_;
};

}  // namespace fbh
