#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <memory>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "fbharness/mdp.hpp"

namespace fbh {

class GripperLift;

/// The reachable transition graph of a finite environment.
struct StateGraph {
  std::vector<State> states;
  std::unordered_map<State, int, StateHash> index;
  /// CSR adjacency: edges of state i are [offset[i], offset[i+1]).
  std::vector<std::size_t> offset;
  std::vector<int> edge_action;
  std::vector<int> edge_target;
  std::vector<char> terminal;

  std::size_t size() const { return states.size(); }
  /// -1 when the state was not reached.
  int find(const State& s) const;
};

/// Forward closure from the environment's initial states plus `extra_roots`.
/// Throws BoundExceeded once more than params().state_bound states appear.
StateGraph explore(const Environment& env,
                   const std::vector<State>& extra_roots = {});

/// Exact optimal values for a deterministic shortest-path environment.
class OracleTables {
 public:
  static constexpr int kUnsolvable = std::numeric_limits<int>::max();

  OracleTables(std::shared_ptr<const Environment> env, StateGraph graph,
               std::vector<int> distance);

  const Environment& env() const { return *env_; }
  std::shared_ptr<const Environment> env_ptr() const { return env_; }
  const StateGraph& graph() const { return graph_; }
  std::size_t size() const { return graph_.size(); }

  /// Throws InvalidState when `s` is outside the solved graph.
  int id(const State& s) const;
  bool contains(const State& s) const { return graph_.find(s) >= 0; }

  int distance(int id) const { return distance_[id]; }
  int distance(const State& s) const { return distance_[this->id(s)]; }
  bool solvable(const State& s) const { return distance(s) != kUnsolvable; }
  bool terminal(const State& s) const { return graph_.terminal[id(s)] != 0; }

  /// V*(s); -inf when the goal is unreachable.
  double value(const State& s) const { return value_of(distance(s)); }
  /// Q*(s,a) = r + gamma V*(step(s,a)). `a` must be legal.
  double q(const State& s, int action) const;
  double advantage(const State& s, int action) const {
    return q(s, action) - value(s);
  }
  /// Legal actions whose successor is one step closer to the goal.
  std::vector<int> optimal_actions(const State& s) const;
  /// (action, successor id) for every legal action of state `id`.
  std::vector<std::pair<int, int>> edges(int id) const;

  double value_of(int distance) const;
  /// Number of non-terminal states with a finite distance.
  std::size_t solvable_nonterminal_count() const;
  int max_distance() const;

  /// One JSON object per state: state, d, v, optimal, q.
  void dump_jsonl(std::ostream& out) const;

 private:
  std::shared_ptr<const Environment> env_;
  StateGraph graph_;
  std::vector<int> distance_;
};

/// Reverse breadth-first search from the terminal states.
OracleTables solve(std::shared_ptr<const Environment> env,
                   const std::vector<State>& extra_roots = {});

/// Independent fixed-point cross-check. Same table shape as solve().
struct ValueIterationResult {
  std::vector<double> value;  // indexed like graph.states
  std::vector<std::vector<int>> optimal;
  std::vector<int> distance;  // recovered from value
  int iterations = 0;
};
ValueIterationResult value_iteration(const Environment& env,
                                     const StateGraph& graph,
                                     double tolerance = 1e-9,
                                     int max_iterations = 1'000'000);

// -- Ground-truth feedback -------------------------------------------------

/// +1 when `action` is optimal in `s`, else -1.
int gt_binary(const OracleTables& t, const State& s, int action);
/// Non-empty set of optimal actions, in canonical order.
std::vector<int> gt_action(const OracleTables& t, const State& s);
/// Sign of Q*(s,a1) - Q*(s,a2); 0 on ties.
int gt_preference(const OracleTables& t, const State& s, int a1, int a2);
/// Argmax of V* over the one-step reachable set, in action order, deduped.
std::vector<State> gt_goal(const OracleTables& t, const State& s);

struct DeltaLabel {
  std::array<double, 3> delta{};  // expert move minus taken move, metres
  bool close = false;             // expert's gripper command
  double epsilon = 0.28;
  int expert_action = 0;
};
DeltaLabel gt_delta(const GripperLift& env, const State& s, int action,
                    double epsilon = 0.28);
/// Accepts a correction when every axis is within epsilon of the label and
/// the gripper command matches.
bool delta_accepts(const DeltaLabel& label, const std::array<double, 3>& delta,
                   bool close);

}  // namespace fbh
