#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fbharness/types.hpp"

namespace fbh {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Per-domain state values. All are small, regular, hashable value types.

struct CliffState {
  int row = 3;
  int col = 0;
  bool operator==(const CliffState&) const = default;
};

/// Facing in clockwise order, so turning right is +1 mod 4.
enum class Facing : std::uint8_t { Up = 0, Right = 1, Down = 2, Left = 3 };

struct GridState {
  int layout = 0;
  int row = 0;
  int col = 0;
  Facing facing = Facing::Up;
  bool has_key = false;
  bool door_locked = true;
  bool operator==(const GridState&) const = default;
};

/// Zone index plus packed counts: item counts first, then placed station
/// counts per zone (zone-major). Unused slots stay zero.
struct CraftState {
  static constexpr std::size_t kSlots = 48;
  std::uint8_t zone = 0;
  std::array<std::uint8_t, kSlots> counts{};
  bool operator==(const CraftState&) const = default;
};

/// Positions are integer offsets on the action lattice, relative to the
/// object's resting position; metres are recovered through the config.
struct GripperState {
  std::array<int, 3> gripper{};
  std::array<int, 3> object{};
  bool closed = false;
  bool grasped = false;
  bool operator==(const GripperState&) const = default;
};

using State = std::variant<CliffState, GridState, CraftState, GripperState>;

struct StateHash {
  std::size_t operator()(const State& s) const noexcept;
};

struct Transition {
  State next;
  /// The move hit a failure region (e.g. a cliff) and was reset.
  bool failure = false;
};

/// Scalar MDP parameters. Transitions, terminality and action sets live on
/// Environment.
struct MdpParams {
  double step_reward = -1.0;
  double discount = 1.0;
  std::size_t state_bound = 5'000'000;
};

/// A finite-action, deterministic MDP with text renderers.
///
/// Implementations are immutable after construction and every member is
/// safe to call concurrently.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const std::string& name() const = 0;
  const MdpParams& params() const { return params_; }

  /// Canonical action vocabulary. Action ids index into this list, and
  /// legal action lists are always sorted by id.
  virtual std::span<const std::string> action_names() const = 0;
  std::optional<int> find_action(std::string_view name) const;
  const std::string& action_name(int action) const;

  /// Throws InvalidState when `s` is not part of the state space.
  virtual void validate(const State& s) const = 0;
  /// Legal actions in canonical order; empty iff terminal.
  std::vector<int> legal_actions(const State& s) const;
  /// Checked transition: throws IllegalAction naming the legal set.
  Transition transition(const State& s, int action) const;
  State step(const State& s, int action) const {
    return transition(s, action).next;
  }
  virtual bool is_terminal(const State& s) const = 0;

  /// Every state an episode can start from, in a fixed order.
  virtual std::vector<State> initial_states() const = 0;

  virtual json encode(const State& s) const = 0;
  /// Throws InvalidState on a malformed or out-of-space encoding.
  virtual State decode(const json& j) const = 0;

  virtual std::vector<FeedbackKind> feedback_kinds() const = 0;
  bool supports(FeedbackKind kind) const;

  // -- text rendering -------------------------------------------------------
  virtual bool supports_egocentric() const { return false; }
  /// Observation block of a prompt (without trailing newline).
  virtual std::string render_observation(const State& s,
                                         bool egocentric) const = 0;
  /// How an action is quoted inside a question.
  virtual std::string render_action(int action) const {
    return action_name(action);
  }
  /// One verbalized history step: the state before, the action taken and,
  /// where the domain reports it, the outcome.
  virtual std::string render_history_step(const State& before, int action,
                                          const Transition& outcome,
                                          bool egocentric) const = 0;
  /// Complete rule listing for full-dynamics prompts.
  virtual std::vector<std::string> rules() const = 0;
  /// Rule lines restricted to the actions legal in `s`.
  virtual std::vector<std::string> rules_for(const State& s) const = 0;

  /// Grid coordinates of a state, for domains supporting goal advising.
  virtual std::optional<std::pair<int, int>> coordinates(const State&) const {
    return std::nullopt;
  }
  /// (rows, cols) of the coordinate space used by goal advising answers.
  virtual std::optional<std::pair<int, int>> grid_shape() const {
    return std::nullopt;
  }

  // Unvalidated fast paths for solvers that only feed back states the
  // environment produced itself. Not defined for terminal states.
  virtual std::vector<int> legal_actions_unchecked(const State& s) const = 0;
  virtual Transition transition_unchecked(const State& s,
                                          int action) const = 0;

 protected:
  explicit Environment(MdpParams params = {}) : params_(params) {}

 private:
  MdpParams params_;
};

[[noreturn]] void throw_wrong_state_type(std::string_view domain);

/// Extracts the typed state or throws InvalidState naming the domain.
template <typename T>
const T& state_as(const State& s, std::string_view domain) {
  if (const T* p = std::get_if<T>(&s)) return *p;
  throw_wrong_state_type(domain);
}

}  // namespace fbh
