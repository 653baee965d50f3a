#include "fbharness/mdp.hpp"

#include <algorithm>

#include "fbharness/errors.hpp"
#include "fbharness/rng.hpp"

namespace fbh {

namespace {

std::size_t mix(std::size_t h, std::uint64_t v) {
  return static_cast<std::size_t>(splitmix64(h ^ (v + 0x9E3779B97F4A7C15ULL)));
}

}  // namespace

std::size_t StateHash::operator()(const State& s) const noexcept {
  std::size_t h = s.index();
  std::visit(
      [&h](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CliffState>) {
          h = mix(h, static_cast<std::uint64_t>(v.row) << 32 |
                         static_cast<std::uint32_t>(v.col));
        } else if constexpr (std::is_same_v<T, GridState>) {
          std::uint64_t packed = static_cast<std::uint64_t>(v.layout) << 40 |
                                 static_cast<std::uint64_t>(v.row & 0xFFFF)
                                     << 24 |
                                 static_cast<std::uint64_t>(v.col & 0xFFFF)
                                     << 8 |
                                 static_cast<std::uint64_t>(v.facing) << 2 |
                                 (v.has_key ? 2u : 0u) |
                                 (v.door_locked ? 1u : 0u);
          h = mix(h, packed);
        } else if constexpr (std::is_same_v<T, CraftState>) {
          h = mix(h, v.zone);
          for (std::size_t i = 0; i < v.counts.size(); i += 8) {
            std::uint64_t word = 0;
            for (std::size_t k = 0; k < 8; ++k) {
              word = word << 8 | v.counts[i + k];
            }
            h = mix(h, word);
          }
        } else {
          for (int c : v.gripper) h = mix(h, static_cast<std::uint32_t>(c));
          for (int c : v.object) h = mix(h, static_cast<std::uint32_t>(c));
          h = mix(h, (v.closed ? 2u : 0u) | (v.grasped ? 1u : 0u));
        }
      },
      s);
  return h;
}

void throw_wrong_state_type(std::string_view domain) {
  throw InvalidState("state value does not belong to domain '" +
                     std::string(domain) + "'");
}

std::optional<int> Environment::find_action(std::string_view name) const {
  auto names = action_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

const std::string& Environment::action_name(int action) const {
  auto names = action_names();
  if (action < 0 || static_cast<std::size_t>(action) >= names.size()) {
    throw IllegalAction("action id " + std::to_string(action) +
                        " outside the vocabulary of '" + name() + "'");
  }
  return names[static_cast<std::size_t>(action)];
}

std::vector<int> Environment::legal_actions(const State& s) const {
  validate(s);
  if (is_terminal(s)) return {};
  return legal_actions_unchecked(s);
}

Transition Environment::transition(const State& s, int action) const {
  auto legal = legal_actions(s);
  if (std::find(legal.begin(), legal.end(), action) == legal.end()) {
    std::string msg = "action ";
    if (action >= 0 &&
        static_cast<std::size_t>(action) < action_names().size()) {
      msg += "'" + action_name(action) + "'";
    } else {
      msg += std::to_string(action);
    }
    msg += " is not legal in " + encode(s).dump() + " of '" + name() +
           "'; legal: [";
    for (std::size_t i = 0; i < legal.size(); ++i) {
      if (i) msg += ", ";
      msg += action_name(legal[i]);
    }
    msg += "]";
    throw IllegalAction(msg);
  }
  return transition_unchecked(s, action);
}

bool Environment::supports(FeedbackKind kind) const {
  auto kinds = feedback_kinds();
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

}  // namespace fbh
