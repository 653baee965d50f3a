#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fbharness/oracle.hpp"
#include "fbharness/snapshot.hpp"

namespace fbh {

struct DatasetSpec {
  std::string domain;
  FeedbackKind kind = FeedbackKind::Binary;
  SamplingPolicyKind policy = SamplingPolicyKind::Exhaustive;
  std::size_t states = 100;       // N; ignored for exhaustive sampling
  std::uint64_t seed = 0;
  std::size_t downsample = 1000;  // 0 keeps everything
  bool mirror = false;            // preference: downsample by unordered pair
  bool exclude_ties = true;       // preference: drop equal-Q pairs
  bool optimal_pairs_only = false;  // preference: optimal vs non-optimal only
  int max_episode_steps = 200;
  int history_keep = 8;           // steps of trajectory stored per snapshot

  static DatasetSpec from_json(const json& j);
  json to_json() const;
  /// Stable file stem, e.g. "cliffwalking__binary__exhaustive".
  std::string stem() const;
};

struct SampledState {
  State state;
  std::vector<std::pair<State, int>> history;  // (state, action), oldest first
  int episode = -1;  // -1 for exhaustive enumeration
  int step = 0;
};

/// Seeded rollouts (or exhaustive enumeration) yielding distinct,
/// solvable, non-terminal states in first-visit order.
std::vector<SampledState> sample_states(const OracleTables& tables,
                                        const DatasetSpec& spec);

struct BuildResult {
  std::vector<Snapshot> snapshots;
  std::size_t states = 0;
  std::size_t enumerated = 0;  // before tie exclusion and downsampling
  std::size_t ties_excluded = 0;
  std::size_t filtered = 0;    // removed by optimal_pairs_only
};

/// Labels every enumerated (state[, action[, action]]) unit. Throws
/// ConfigError when nothing remains.
BuildResult build(const OracleTables& tables, const DatasetSpec& spec,
                  const std::vector<SampledState>& states);
BuildResult build(const OracleTables& tables, const DatasetSpec& spec);

/// Recomputes a snapshot's label from the tables (consistency checks).
Label derive_label(const OracleTables& tables, const Snapshot& snapshot);

/// Decodes the snapshot's state and its actions into environment ids.
State snapshot_state(const Environment& env, const Snapshot& s);
int action_id(const Environment& env, const std::string& name);

}  // namespace fbh
