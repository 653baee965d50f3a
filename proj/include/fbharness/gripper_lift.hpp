#pragma once

#include <array>
#include <string>
#include <vector>

#include "fbharness/mdp.hpp"

namespace fbh {

/// Kinematic point-gripper abstraction of a lift task. Positions live on the
/// lattice spanned by the action magnitude, offset from the object's resting
/// position, which keeps the state space finite and exactly solvable.
struct GripperConfig {
  std::string name = "gripperlift";
  double step = 0.28;           // action magnitude m, metres
  double grasp_radius = 0.05;   // metres
  double lift_height = 0.10;    // success threshold above the table, metres
  std::array<double, 3> anchor{-0.02050141, 0.02279622, 0.82019789};
  int xy_extent = 4;            // gripper x, y offsets in [-extent, extent]
  int z_max = 6;                // gripper z offsets in [0, z_max]

  static GripperConfig from_json(const json& j);
};

/// One discrete command: a single-axis move (or none) plus a grip command.
struct GripperCommand {
  std::array<int, 3> move{};  // lattice units, at most one non-zero axis
  bool close = false;
};

class GripperLift final : public Environment {
 public:
  static constexpr int kNumActions = 14;
  // 0..5: +x -x +y -y +z -z with the gripper open, 6..11: the same moves
  // with the gripper closed, 12: stay open, 13: stay closed.
  static constexpr int kStayOpen = 12;
  static constexpr int kStayClose = 13;

  explicit GripperLift(GripperConfig config = {});
  static GripperLift from_config(const json& config);

  const GripperConfig& config() const { return config_; }
  static GripperCommand command(int action);
  /// Command vector in metres plus grip (+1 open, -1 closed).
  std::array<double, 4> action_vector(int action) const;

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

  bool supports_egocentric() const override { return true; }
  std::string render_observation(const State& s,
                                 bool egocentric) const override;
  std::string render_history_step(const State& before, int action,
                                  const Transition& outcome,
                                  bool egocentric) const override;
  std::vector<std::string> rules() const override;
  std::vector<std::string> rules_for(const State& s) const override;

  std::vector<int> legal_actions_unchecked(const State& s) const override;
  Transition transition_unchecked(const State& s, int action) const override;

  /// Phase controller: align in x/y (largest error first), descend, close,
  /// lift. Returns an action id.
  int scripted_expert(const State& s) const;

  std::array<double, 3> metres(const std::array<int, 3>& offset) const;
  /// Euclidean gripper-object distance in metres.
  double separation(const GripperState& g) const;

 private:
  bool in_bounds(const std::array<int, 3>& p) const;

  GripperConfig config_;
  std::vector<std::string> actions_;
};

}  // namespace fbh
