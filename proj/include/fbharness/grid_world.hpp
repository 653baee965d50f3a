#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fbharness/mdp.hpp"

namespace fbh {

/// Static content of a MiniGrid-style room layout. Agent glyphs in the
/// source art are read as empty tiles.
struct GridLayout {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> cells;  // '#', '.', 'K', 'D', 'G'
  int key_row = -1, key_col = -1;
  int door_row = -1, door_col = -1;
  int goal_row = -1, goal_col = -1;

  char at(int r, int c) const { return cells[r][c]; }
  bool has_key() const { return key_row >= 0; }
  bool has_door() const { return door_row >= 0; }

  static GridLayout parse(const std::vector<std::string>& art);
};

/// Generates a DoorKey layout the way MiniGrid does: a vertical wall with a
/// locked door splits the room, the key lies left of it, and the goal sits
/// in the bottom-right corner.
GridLayout generate_doorkey_layout(int size, std::uint64_t seed);

/// MiniGrid DoorKey and FourRooms. Every action is always legal; actions
/// whose precondition fails (walking into a wall, picking up without facing
/// the key, unlocking without the key) leave the state unchanged.
class GridWorld final : public Environment {
 public:
  enum class Variant { DoorKey, FourRooms };
  enum Action : int {
    TurnLeft = 0,
    TurnRight = 1,
    MoveForward = 2,
    PickUp = 3,
    Unlock = 4
  };

  GridWorld(std::string name, Variant variant, std::vector<GridLayout> layouts,
            MdpParams params = {});
  /// Builds from a domain config (see data/configs/*.json).
  static GridWorld from_config(const json& config);

  const std::string& name() const override { return name_; }
  Variant variant() const { return variant_; }
  const std::vector<GridLayout>& layouts() const { return layouts_; }

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

  /// ASCII rendering: allocentric glyphs, or rotated so the agent faces up.
  std::string render_ascii(const State& s, bool egocentric) const;
  /// Key/door status sentence (DoorKey only; empty for FourRooms).
  std::string status_line(const GridState& g) const;

 private:
  bool passable(const GridState& g, int r, int c) const;

  std::string name_;
  Variant variant_;
  std::vector<GridLayout> layouts_;
  std::vector<std::string> actions_;
};

/// Rotates a rectangular block of text by quarter turns clockwise.
std::vector<std::string> rotate_clockwise(const std::vector<std::string>& rows,
                                          int quarter_turns);

std::string_view to_string(Facing f);
std::optional<Facing> parse_facing(std::string_view text);

}  // namespace fbh
