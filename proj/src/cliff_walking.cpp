#include "fbharness/cliff_walking.hpp"

#include "fbharness/errors.hpp"

namespace fbh {

namespace {

constexpr int kDeltaRow[] = {-1, 1, 0, 0};
constexpr int kDeltaCol[] = {0, 0, -1, 1};

}  // namespace

CliffWalking::CliffWalking() = default;

std::string CliffWalking::position(const CliffState& s) {
  return "(" + std::to_string(s.row) + ", " + std::to_string(s.col) + ")";
}

void CliffWalking::validate(const State& s) const {
  const auto& c = state_as<CliffState>(s, name_);
  if (c.row < 0 || c.row >= kRows || c.col < 0 || c.col >= kCols) {
    throw InvalidState("cliffwalking position " + position(c) +
                       " is outside the 4x12 grid");
  }
  if (is_cliff(c.row, c.col)) {
    throw InvalidState("cliffwalking position " + position(c) +
                       " is a cliff cell and never observed");
  }
}

bool CliffWalking::is_terminal(const State& s) const {
  return state_as<CliffState>(s, name_) == goal();
}

std::vector<State> CliffWalking::initial_states() const { return {start()}; }

json CliffWalking::encode(const State& s) const {
  const auto& c = state_as<CliffState>(s, name_);
  return json{{"row", c.row}, {"col", c.col}};
}

State CliffWalking::decode(const json& j) const {
  if (!j.is_object() || !j.contains("row") || !j.contains("col") ||
      !j["row"].is_number_integer() || !j["col"].is_number_integer()) {
    throw InvalidState("cliffwalking state must be {\"row\": int, \"col\": int}");
  }
  State s = CliffState{j["row"].get<int>(), j["col"].get<int>()};
  validate(s);
  return s;
}

std::vector<FeedbackKind> CliffWalking::feedback_kinds() const {
  return {FeedbackKind::Binary, FeedbackKind::Action, FeedbackKind::Preference,
          FeedbackKind::Goal};
}

std::vector<int> CliffWalking::legal_actions_unchecked(const State&) const {
  return {Up, Down, Left, Right};
}

Transition CliffWalking::transition_unchecked(const State& s,
                                              int action) const {
  const auto& c = state_as<CliffState>(s, name_);
  int row = c.row + kDeltaRow[action];
  int col = c.col + kDeltaCol[action];
  if (row < 0 || row >= kRows || col < 0 || col >= kCols) {
    return {c, false};
  }
  if (is_cliff(row, col)) return {start(), true};
  return {CliffState{row, col}, false};
}

std::string CliffWalking::render_observation(const State& s,
                                             bool egocentric) const {
  if (egocentric) {
    throw ConfigError("cliffwalking has no egocentric rendering");
  }
  return "You are in position " + position(state_as<CliffState>(s, name_)) +
         ".";
}

std::string CliffWalking::render_history_step(const State& before, int action,
                                              const Transition& outcome,
                                              bool egocentric) const {
  if (egocentric) {
    throw ConfigError("cliffwalking has no egocentric rendering");
  }
  std::string text =
      "You were at position " + position(state_as<CliffState>(before, name_)) +
      ", and you took action " + action_name(action) + ", then you reached " +
      position(state_as<CliffState>(outcome.next, name_)) + ".";
  if (outcome.failure) text += " You fell into the holes.";
  return text;
}

std::vector<std::string> CliffWalking::rules() const {
  std::string holes = "There are holes at ";
  for (int col = 1; col < kCols - 1; ++col) {
    if (col > 1) holes += col == kCols - 2 ? " and " : ", ";
    holes += position({kRows - 1, col});
  }
  holes += ".";
  return {
      "The grid world has 4 rows and 12 columns. Row 0 is the top row and "
      "column 0 is the leftmost column.",
      "You start at position " + position(start()) + ".",
      holes,
      "If you fall into a hole, you are sent back to " + position(start()) +
          ".",
      "going UP decreases your row by 1.",
      "going DOWN increases your row by 1.",
      "going LEFT decreases your column by 1.",
      "going RIGHT increases your column by 1.",
      "If a move would leave the grid, your position does not change.",
      "Reaching " + position(goal()) + " completes the task.",
  };
}

std::vector<std::string> CliffWalking::rules_for(const State& s) const {
  const auto& c = state_as<CliffState>(s, name_);
  std::vector<std::string> lines;
  for (int a : legal_actions(s)) {
    int row = c.row + kDeltaRow[a];
    int col = c.col + kDeltaCol[a];
    std::string line = "going " + action_name(a) + " from " + position(c);
    if (row < 0 || row >= kRows || col < 0 || col >= kCols) {
      line += " would leave the grid, so you stay at " + position(c) + ".";
    } else if (is_cliff(row, col)) {
      line += " leads into the hole at " + position({row, col}) +
              ", which sends you back to " + position(start()) + ".";
    } else {
      line += " leads to " + position({row, col}) + ".";
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::optional<std::pair<int, int>> CliffWalking::coordinates(
    const State& s) const {
  const auto& c = state_as<CliffState>(s, name_);
  return std::pair{c.row, c.col};
}

}  // namespace fbh
