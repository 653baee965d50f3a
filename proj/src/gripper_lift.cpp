#include "fbharness/gripper_lift.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "fbharness/errors.hpp"
#include "fbharness/json_util.hpp"

namespace fbh {

namespace {

constexpr const char* kMoveNames[] = {"move right", "move left",
                                      "move forward", "move backward",
                                      "move up", "move down"};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos) s = s.substr(s[0] == '-');
  return s;
}

std::string vec_text(const std::array<double, 3>& v) {
  return "[" + fixed(v[0], 8) + " " + fixed(v[1], 8) + " " + fixed(v[2], 8) +
         "]";
}

}  // namespace

GripperConfig GripperConfig::from_json(const json& j) {
  const std::string ctx = "gripperlift config";
  require_known_keys(j,
                     {"name", "step", "grasp_radius", "lift_height", "anchor",
                      "xy_extent", "z_max"},
                     ctx);
  GripperConfig c;
  c.name = get_field_or<std::string>(j, "name", c.name, ctx);
  c.step = get_field_or<double>(j, "step", c.step, ctx);
  c.grasp_radius = get_field_or<double>(j, "grasp_radius", c.grasp_radius, ctx);
  c.lift_height = get_field_or<double>(j, "lift_height", c.lift_height, ctx);
  c.anchor = get_field_or<std::array<double, 3>>(j, "anchor", c.anchor, ctx);
  c.xy_extent = get_field_or<int>(j, "xy_extent", c.xy_extent, ctx);
  c.z_max = get_field_or<int>(j, "z_max", c.z_max, ctx);
  if (c.step <= 0 || c.grasp_radius <= 0 || c.lift_height <= 0) {
    throw ConfigError(ctx + ": step, grasp_radius and lift_height must be > 0");
  }
  if (c.grasp_radius >= c.step) {
    // Off-lattice grasps would need a finer state space.
    throw ConfigError(ctx + ": grasp_radius must be smaller than step");
  }
  if (c.xy_extent < 0 || c.z_max < 1 || c.lift_height > c.step * c.z_max) {
    throw ConfigError(ctx + ": workspace cannot reach the lift height");
  }
  return c;
}

GripperLift::GripperLift(GripperConfig config)
    : Environment(MdpParams{}), config_(std::move(config)) {
  for (int grip = 0; grip < 2; ++grip) {
    for (const char* move : kMoveNames) {
      actions_.push_back(std::string(move) +
                         (grip ? ", close gripper" : ", open gripper"));
    }
  }
  actions_.push_back("stay, open gripper");
  actions_.push_back("stay, close gripper");
}

GripperLift GripperLift::from_config(const json& config) {
  return GripperLift(GripperConfig::from_json(config));
}

GripperCommand GripperLift::command(int action) {
  if (action < 0 || action >= kNumActions) {
    throw IllegalAction("gripperlift: action id out of range");
  }
  GripperCommand c;
  if (action < 12) {
    const int move = action % 6;
    c.move[move / 2] = move % 2 == 0 ? 1 : -1;
    c.close = action >= 6;
  } else {
    c.close = action == kStayClose;
  }
  return c;
}

std::array<double, 4> GripperLift::action_vector(int action) const {
  GripperCommand c = command(action);
  return {c.move[0] * config_.step, c.move[1] * config_.step,
          c.move[2] * config_.step, c.close ? -1.0 : 1.0};
}

std::array<double, 3> GripperLift::metres(
    const std::array<int, 3>& offset) const {
  return {config_.anchor[0] + offset[0] * config_.step,
          config_.anchor[1] + offset[1] * config_.step,
          config_.anchor[2] + offset[2] * config_.step};
}

double GripperLift::separation(const GripperState& g) const {
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    double d = (g.gripper[i] - g.object[i]) * config_.step;
    sum += d * d;
  }
  return std::sqrt(sum);
}

bool GripperLift::in_bounds(const std::array<int, 3>& p) const {
  return std::abs(p[0]) <= config_.xy_extent &&
         std::abs(p[1]) <= config_.xy_extent && p[2] >= 0 &&
         p[2] <= config_.z_max;
}

void GripperLift::validate(const State& s) const {
  const auto& g = state_as<GripperState>(s, name());
  if (!in_bounds(g.gripper) || !in_bounds(g.object)) {
    throw InvalidState(name() + ": position outside the workspace");
  }
  if (g.grasped && (!g.closed || separation(g) > config_.grasp_radius)) {
    throw InvalidState(name() + ": grasped object must be inside a closed grip");
  }
  if (!g.grasped && g.object[2] != 0) {
    throw InvalidState(name() + ": an unsupported object must rest on the table");
  }
}

bool GripperLift::is_terminal(const State& s) const {
  const auto& g = state_as<GripperState>(s, name());
  return g.grasped &&
         g.object[2] * config_.step >= config_.lift_height - 1e-12;
}

std::vector<State> GripperLift::initial_states() const {
  std::vector<State> out;
  const int e = config_.xy_extent;
  for (int x = -e; x <= e; ++x) {
    for (int y = -e; y <= e; ++y) {
      for (int z = 0; z <= config_.z_max; ++z) {
        GripperState g;
        g.gripper = {x, y, z};
        out.emplace_back(g);
      }
    }
  }
  return out;
}

std::vector<int> GripperLift::legal_actions_unchecked(const State&) const {
  std::vector<int> out(kNumActions);
  for (int a = 0; a < kNumActions; ++a) out[a] = a;
  return out;
}

Transition GripperLift::transition_unchecked(const State& s, int action) const {
  GripperState g = state_as<GripperState>(s, name());
  const GripperCommand c = command(action);
  // The grip command applies before the translation.
  if (c.close) {
    if (!g.closed && separation(g) <= config_.grasp_radius) g.grasped = true;
    g.closed = true;
  } else {
    g.closed = false;
    if (g.grasped) {
      g.grasped = false;
      g.object[2] = 0;
    }
  }
  std::array<int, 3> target = g.gripper;
  for (int i = 0; i < 3; ++i) target[i] += c.move[i];
  if (in_bounds(target)) {
    g.gripper = target;
    if (g.grasped) g.object = target;
  }
  return {g, false};
}

int GripperLift::scripted_expert(const State& s) const {
  const auto& g = state_as<GripperState>(s, name());
  if (g.grasped) return 6 + 4;  // lift with the grip held closed
  const int ex = g.object[0] - g.gripper[0];
  const int ey = g.object[1] - g.gripper[1];
  const int ez = g.object[2] - g.gripper[2];
  if (ex == 0 && ey == 0 && ez == 0) return g.closed ? kStayOpen : kStayClose;
  if (ex != 0 && std::abs(ex) >= std::abs(ey)) return ex > 0 ? 0 : 1;
  if (ey != 0) return ey > 0 ? 2 : 3;
  return ez > 0 ? 4 : 5;
}

json GripperLift::encode(const State& s) const {
  const auto& g = state_as<GripperState>(s, name());
  return json{{"gripper", metres(g.gripper)},
              {"object", metres(g.object)},
              {"closed", g.closed},
              {"grasped", g.grasped}};
}

State GripperLift::decode(const json& j) const {
  try {
    require_known_keys(j, {"gripper", "object", "closed", "grasped"},
                       name() + " state");
    auto lattice = [&](const json& v) {
      auto m = v.get<std::array<double, 3>>();
      std::array<int, 3> out{};
      for (int i = 0; i < 3; ++i) {
        double units = (m[i] - config_.anchor[i]) / config_.step;
        out[i] = static_cast<int>(std::lround(units));
        if (std::abs(units - out[i]) > 1e-6) {
          throw InvalidState(name() + ": position is off the action lattice");
        }
      }
      return out;
    };
    GripperState g;
    g.gripper = lattice(j.at("gripper"));
    g.object = lattice(j.at("object"));
    g.closed = j.at("closed").get<bool>();
    g.grasped = j.at("grasped").get<bool>();
    State s = g;
    validate(s);
    return s;
  } catch (const InvalidState&) {
    throw;
  } catch (const std::exception& e) {
    throw InvalidState(name() + " state: " + e.what());
  }
}

std::vector<FeedbackKind> GripperLift::feedback_kinds() const {
  return {FeedbackKind::Binary, FeedbackKind::Action, FeedbackKind::Preference,
          FeedbackKind::Delta};
}

std::string GripperLift::render_observation(const State& s,
                                            bool egocentric) const {
  const auto& g = state_as<GripperState>(s, name());
  const auto gp = metres(g.gripper);
  const auto op = metres(g.object);
  const std::array<double, 3> rel = {op[0] - gp[0], op[1] - gp[1],
                                     op[2] - gp[2]};
  if (!egocentric) {
    return "Gripper position: " + vec_text(gp) + "\nObject position: " +
           vec_text(op) + "\nObject relative position to gripper: " +
           vec_text(rel) + "\nGripper status: " + (g.closed ? "-1" : "+1") +
           "\nObject grasped: " + (g.grasped ? "yes" : "no");
  }
  auto axis = [](double v, const char* pos, const char* neg) {
    return std::string("The object is ") + fixed(std::abs(v), 2) + " " +
           (v < -1e-9 ? neg : pos) + " your gripper.";
  };
  return "- " + axis(rel[0], "to the right of", "to the left of") + "\n- " +
         axis(rel[1], "in front of", "behind") + "\n- " +
         axis(rel[2], "above", "below") + "\n- Your gripper is " +
         (g.closed ? "closed" : "open") + ".\n- You are " +
         (g.grasped ? "" : "not ") + "holding the object.";
}

std::string GripperLift::render_history_step(const State& before, int action,
                                             const Transition&,
                                             bool egocentric) const {
  const auto& g = state_as<GripperState>(before, name());
  std::string where;
  if (egocentric) {
    const int d[3] = {g.object[0] - g.gripper[0], g.object[1] - g.gripper[1],
                      g.object[2] - g.gripper[2]};
    where = "The object was at [" + fixed(d[0] * config_.step, 2) + " " +
            fixed(d[1] * config_.step, 2) + " " +
            fixed(d[2] * config_.step, 2) + "] relative to your gripper";
  } else {
    where = "Your gripper was at " + vec_text(metres(g.gripper)) +
            " and the object at " + vec_text(metres(g.object));
  }
  return where + ", with the gripper " + (g.closed ? "closed" : "open") +
         ". You took action " + action_name(action) + ".";
}

std::vector<std::string> GripperLift::rules() const {
  const std::string m = fixed(config_.step, 2);
  return {
      "Each move action shifts the gripper by " + m +
          " along one axis: right is +x, forward is +y, up is +z.",
      "The gripper command of an action is applied before the move.",
      "Moves that would leave the workspace keep the gripper in place.",
      "Closing an open gripper within " + fixed(config_.grasp_radius, 2) +
          " of the object grasps it.",
      "A grasped object moves together with the gripper.",
      "Opening the gripper releases the object onto the table.",
      "The object is lifted once it is grasped and at least " +
          fixed(config_.lift_height, 2) + " above the table.",
  };
}

std::vector<std::string> GripperLift::rules_for(const State& s) const {
  std::vector<std::string> out;
  for (int a : legal_actions(s)) {
    auto v = action_vector(a);
    out.push_back("Action " + action_name(a) + " changes the gripper by [" +
                  fixed(v[0], 2) + " " + fixed(v[1], 2) + " " +
                  fixed(v[2], 2) + "] and sets the grip to " +
                  (v[3] > 0 ? "open." : "closed."));
  }
  return out;
}

}  // namespace fbh
