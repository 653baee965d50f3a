#pragma once

#include <map>
#include <string>
#include <vector>

#include "fbharness/mdp.hpp"

namespace fbh {

/// Recipe-graph crafting world in the style of HierarchyCraft: zones joined
/// by (possibly tool-gated) moves, searches that yield items, recipes gated
/// by stations, and stations that can be picked up and placed elsewhere.
struct CraftWorldConfig {
  struct Recipe {
    std::string name;
    std::string verb;  // "craft" or "smelt"
    std::vector<std::pair<int, int>> inputs;   // (item, count)
    std::vector<std::pair<int, int>> outputs;  // (item, count)
    int station = -1;                          // item index, -1 for none
  };
  struct Search {
    int zone;
    int item;
    int yield;
    int tool = -1;
  };
  struct Move {
    int from;
    int to;
    int tool = -1;
  };

  std::string name;
  std::vector<std::string> zones;
  std::vector<std::string> items;
  std::vector<int> caps;        // per item
  std::vector<int> placeables;  // item indices
  std::vector<Recipe> recipes;
  std::vector<Search> searches;
  std::vector<Move> moves;
  int start_zone = 0;
  std::map<int, int> start_inventory;
  std::map<std::pair<int, int>, int> start_placed;  // (zone, item) -> count
  int goal_item = 0;
  int goal_count = 1;

  static CraftWorldConfig from_json(const json& j);
  int item_index(const std::string& item) const;
  int zone_index(const std::string& zone) const;
};

class CraftWorld final : public Environment {
 public:
  explicit CraftWorld(CraftWorldConfig config, MdpParams params = {});
  static CraftWorld from_config(const json& config);

  const CraftWorldConfig& config() const { return config_; }

  const std::string& name() const override { return config_.name; }
  std::span<const std::string> action_names() const override {
    return actions_;
  }
  void validate(const State& s) const override;
  bool is_terminal(const State& s) const override;
  std::vector<State> initial_states() const override;
  json encode(const State& s) const override;
  State decode(const json& j) const override;
  std::vector<FeedbackKind> feedback_kinds() const override;

  std::string render_observation(const State& s,
                                 bool egocentric) const override;
  std::string render_history_step(const State& before, int action,
                                  const Transition& outcome,
                                  bool egocentric) const override;
  std::vector<std::string> rules() const override;
  std::vector<std::string> rules_for(const State& s) const override;

  std::vector<int> legal_actions_unchecked(const State& s) const override;
  Transition transition_unchecked(const State& s, int action) const override;

  /// All successors, one per applicable action, in canonical action order.
  std::vector<std::pair<int, State>> expand(const State& s) const;

  int inventory(const CraftState& s, int item) const { return s.counts[item]; }
  int placed(const CraftState& s, int zone, int item) const;
  CraftState start() const;

 private:
  enum class Kind { Pickup, Place, Recipe, Search, Move };
  struct ActionRef {
    Kind kind;
    int index;  // into placeables / recipes / searches / moves
  };

  int placed_slot(int zone, int placeable_pos) const;
  int placeable_pos(int item) const;
  bool applicable(const CraftState& s, const ActionRef& a) const;
  CraftState apply(const CraftState& s, const ActionRef& a) const;
  std::string rule_line(const ActionRef& a) const;
  std::string inventory_text(const CraftState& s) const;

  CraftWorldConfig config_;
  std::vector<std::string> actions_;
  std::vector<ActionRef> refs_;
};

}  // namespace fbh
