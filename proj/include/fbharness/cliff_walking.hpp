#pragma once

#include <string>
#include <vector>

#include "fbharness/mdp.hpp"

namespace fbh {

/// 4x12 cliff walking. Entering a cliff cell resets the agent to the start;
/// moves off the grid leave the agent in place.
class CliffWalking final : public Environment {
 public:
  static constexpr int kRows = 4;
  static constexpr int kCols = 12;
  enum Action : int { Up = 0, Down = 1, Left = 2, Right = 3 };

  CliffWalking();

  const std::string& name() const override { return name_; }
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
  std::optional<std::pair<int, int>> coordinates(
      const State& s) const override;
  std::optional<std::pair<int, int>> grid_shape() const override {
    return std::pair{kRows, kCols};
  }

  std::vector<int> legal_actions_unchecked(const State& s) const override;
  Transition transition_unchecked(const State& s, int action) const override;

  static constexpr CliffState start() { return {3, 0}; }
  static constexpr CliffState goal() { return {3, kCols - 1}; }
  static constexpr bool is_cliff(int row, int col) {
    return row == kRows - 1 && col > 0 && col < kCols - 1;
  }
  static std::string position(const CliffState& s);

 private:
  std::string name_ = "cliffwalking";
  std::vector<std::string> actions_ = {"UP", "DOWN", "LEFT", "RIGHT"};
};

}  // namespace fbh
