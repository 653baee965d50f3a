#include "fbharness/grid_world.hpp"

#include <algorithm>
#include <queue>

#include "fbharness/errors.hpp"
#include "fbharness/json_util.hpp"
#include "fbharness/rng.hpp"

namespace fbh {

namespace {

constexpr int kDeltaRow[] = {-1, 0, 1, 0};  // indexed by Facing
constexpr int kDeltaCol[] = {0, 1, 0, -1};
constexpr char kAgentGlyph[] = {'^', '>', 'V', '<'};

const std::vector<std::string> kDoorKeyActions = {
    "TURN LEFT", "TURN RIGHT", "MOVE FORWARD", "PICK UP THE KEY",
    "UNLOCK THE DOOR"};
const std::vector<std::string> kFourRoomsActions = {"TURN LEFT", "TURN RIGHT",
                                                    "MOVE FORWARD"};

Facing turn(Facing f, int quarter_turns) {
  return static_cast<Facing>((static_cast<int>(f) + quarter_turns + 4) % 4);
}

std::string join_lines(const std::vector<std::string>& rows) {
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += '\n';
    out += rows[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(Facing f) {
  switch (f) {
    case Facing::Up: return "up";
    case Facing::Right: return "right";
    case Facing::Down: return "down";
    case Facing::Left: return "left";
  }
  return "?";
}

std::optional<Facing> parse_facing(std::string_view text) {
  for (int i = 0; i < 4; ++i) {
    if (to_string(static_cast<Facing>(i)) == text) {
      return static_cast<Facing>(i);
    }
  }
  return std::nullopt;
}

std::vector<std::string> rotate_clockwise(const std::vector<std::string>& rows,
                                          int quarter_turns) {
  std::vector<std::string> out = rows;
  for (int t = 0; t < ((quarter_turns % 4) + 4) % 4; ++t) {
    const std::size_t h = out.size();
    const std::size_t w = h ? out[0].size() : 0;
    std::vector<std::string> next(w, std::string(h, ' '));
    for (std::size_t i = 0; i < w; ++i) {
      for (std::size_t j = 0; j < h; ++j) next[i][j] = out[h - 1 - j][i];
    }
    out = std::move(next);
  }
  return out;
}

GridLayout GridLayout::parse(const std::vector<std::string>& art) {
  GridLayout layout;
  layout.rows = static_cast<int>(art.size());
  if (layout.rows < 3) throw ConfigError("grid layout needs at least 3 rows");
  layout.cols = static_cast<int>(art[0].size());
  int keys = 0, doors = 0, goals = 0;
  for (int r = 0; r < layout.rows; ++r) {
    std::string row = art[r];
    if (static_cast<int>(row.size()) != layout.cols) {
      throw ConfigError("grid layout rows must all have the same width");
    }
    for (int c = 0; c < layout.cols; ++c) {
      char& ch = row[c];
      switch (ch) {
        case '^': case '>': case 'V': case '<': ch = '.'; break;
        case 'K': layout.key_row = r; layout.key_col = c; ++keys; break;
        case 'D': layout.door_row = r; layout.door_col = c; ++doors; break;
        case 'G': layout.goal_row = r; layout.goal_col = c; ++goals; break;
        case '#': case '.': break;
        default:
          throw ConfigError(std::string("unknown glyph '") + ch +
                            "' in grid layout");
      }
      bool border = r == 0 || c == 0 || r == layout.rows - 1 ||
                    c == layout.cols - 1;
      if (border && ch != '#') {
        throw ConfigError("grid layout must be enclosed by walls");
      }
    }
    layout.cells.push_back(std::move(row));
  }
  if (goals != 1) throw ConfigError("grid layout needs exactly one goal 'G'");
  if (keys > 1 || doors > 1) {
    throw ConfigError("grid layout holds at most one key and one door");
  }
  return layout;
}

GridLayout generate_doorkey_layout(int size, std::uint64_t seed) {
  if (size < 5) throw ConfigError("doorkey layouts need size >= 5");
  Rng rng(seed);
  std::vector<std::string> art(size, std::string(size, '.'));
  for (int i = 0; i < size; ++i) {
    art[0][i] = art[size - 1][i] = art[i][0] = art[i][size - 1] = '#';
  }
  // Wall column in [2, size-3], door anywhere along it.
  const int split = 2 + static_cast<int>(uniform_index(rng, size - 4));
  for (int r = 1; r < size - 1; ++r) art[r][split] = '#';
  const int door_row = 1 + static_cast<int>(uniform_index(rng, size - 2));
  art[door_row][split] = 'D';
  art[size - 2][size - 2] = 'G';
  const int left_cells = (split - 1) * (size - 2);
  const int k = static_cast<int>(uniform_index(rng, left_cells));
  art[1 + k / (split - 1)][1 + k % (split - 1)] = 'K';
  return GridLayout::parse(art);
}

GridWorld::GridWorld(std::string name, Variant variant,
                     std::vector<GridLayout> layouts, MdpParams params)
    : Environment(params),
      name_(std::move(name)),
      variant_(variant),
      layouts_(std::move(layouts)),
      actions_(variant == Variant::DoorKey ? kDoorKeyActions
                                           : kFourRoomsActions) {
  if (layouts_.empty()) throw ConfigError(name_ + ": no layouts");
  for (const auto& l : layouts_) {
    bool doorkey = l.has_key() && l.has_door();
    if (variant_ == Variant::DoorKey && !doorkey) {
      throw ConfigError(name_ + ": doorkey layouts need a key and a door");
    }
    if (variant_ == Variant::FourRooms && (l.has_key() || l.has_door())) {
      throw ConfigError(name_ + ": fourrooms layouts hold no key or door");
    }
  }
}

GridWorld GridWorld::from_config(const json& config) {
  require_known_keys(config, {"name", "variant", "layouts", "generate"},
                     "grid config");
  const std::string name = config.at("name").get<std::string>();
  const std::string variant_text = config.at("variant").get<std::string>();
  Variant variant;
  if (variant_text == "doorkey") {
    variant = Variant::DoorKey;
  } else if (variant_text == "fourrooms") {
    variant = Variant::FourRooms;
  } else {
    throw ConfigError(name + ": unknown grid variant '" + variant_text + "'");
  }
  std::vector<GridLayout> layouts;
  for (const auto& art : config.value("layouts", json::array())) {
    layouts.push_back(GridLayout::parse(art.get<std::vector<std::string>>()));
  }
  if (config.contains("generate")) {
    if (variant != Variant::DoorKey) {
      throw ConfigError(name + ": only doorkey layouts can be generated");
    }
    const auto& gen = config["generate"];
    const int size = gen.at("size").get<int>();
    const int count = gen.at("count").get<int>();
    const auto seed = gen.at("seed").get<std::uint64_t>();
    for (int i = 0; i < count; ++i) {
      layouts.push_back(generate_doorkey_layout(
          size, derive_seed(seed, "layout/" + std::to_string(i))));
    }
  }
  return GridWorld(name, variant, std::move(layouts));
}

void GridWorld::validate(const State& s) const {
  const auto& g = state_as<GridState>(s, name_);
  if (g.layout < 0 || g.layout >= static_cast<int>(layouts_.size())) {
    throw InvalidState(name_ + ": layout index " + std::to_string(g.layout) +
                       " out of range");
  }
  const auto& l = layouts_[g.layout];
  if (g.row <= 0 || g.row >= l.rows - 1 || g.col <= 0 || g.col >= l.cols - 1) {
    throw InvalidState(name_ + ": agent cell outside the room");
  }
  const char cell = l.at(g.row, g.col);
  if (cell == '#') throw InvalidState(name_ + ": agent inside a wall");
  if (variant_ == Variant::FourRooms) {
    if (g.has_key || g.door_locked) {
      throw InvalidState(name_ + ": fourrooms states carry no key or door");
    }
    return;
  }
  if (cell == 'K' && !g.has_key) {
    throw InvalidState(name_ + ": agent on the key tile while the key is there");
  }
  if (cell == 'D' && g.door_locked) {
    throw InvalidState(name_ + ": agent on a locked door");
  }
  if (!g.door_locked && !g.has_key) {
    throw InvalidState(name_ + ": door unlocked without holding the key");
  }
}

bool GridWorld::is_terminal(const State& s) const {
  const auto& g = state_as<GridState>(s, name_);
  const auto& l = layouts_.at(g.layout);
  return g.row == l.goal_row && g.col == l.goal_col;
}

std::vector<State> GridWorld::initial_states() const {
  std::vector<State> out;
  for (int li = 0; li < static_cast<int>(layouts_.size()); ++li) {
    const auto& l = layouts_[li];
    std::vector<std::vector<bool>> allowed(l.rows,
                                           std::vector<bool>(l.cols, false));
    if (variant_ == Variant::DoorKey) {
      // The key's room, bounded by walls and the locked door.
      std::queue<std::pair<int, int>> frontier;
      std::vector<std::vector<bool>> seen(l.rows,
                                          std::vector<bool>(l.cols, false));
      frontier.emplace(l.key_row, l.key_col);
      seen[l.key_row][l.key_col] = true;
      while (!frontier.empty()) {
        auto [r, c] = frontier.front();
        frontier.pop();
        if (l.at(r, c) == '.') allowed[r][c] = true;
        for (int f = 0; f < 4; ++f) {
          int nr = r + kDeltaRow[f], nc = c + kDeltaCol[f];
          char ch = l.at(nr, nc);
          if (!seen[nr][nc] && (ch == '.' || ch == 'G')) {
            seen[nr][nc] = true;
            frontier.emplace(nr, nc);
          }
        }
      }
    } else {
      for (int r = 0; r < l.rows; ++r) {
        for (int c = 0; c < l.cols; ++c) allowed[r][c] = l.at(r, c) == '.';
      }
    }
    for (int r = 0; r < l.rows; ++r) {
      for (int c = 0; c < l.cols; ++c) {
        if (!allowed[r][c]) continue;
        for (int f = 0; f < 4; ++f) {
          out.push_back(GridState{li, r, c, static_cast<Facing>(f), false,
                                  variant_ == Variant::DoorKey});
        }
      }
    }
  }
  return out;
}

json GridWorld::encode(const State& s) const {
  const auto& g = state_as<GridState>(s, name_);
  json j{{"layout", g.layout},
         {"row", g.row},
         {"col", g.col},
         {"facing", to_string(g.facing)}};
  if (variant_ == Variant::DoorKey) {
    j["has_key"] = g.has_key;
    j["door_locked"] = g.door_locked;
  }
  return j;
}

State GridWorld::decode(const json& j) const {
  auto fail = [&](const std::string& why) -> InvalidState {
    return InvalidState(name_ + " state: " + why);
  };
  if (!j.is_object()) throw fail("expected an object");
  for (const char* key : {"layout", "row", "col"}) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
      throw fail(std::string("missing integer field '") + key + "'");
    }
  }
  if (!j.contains("facing") || !j["facing"].is_string()) {
    throw fail("missing field 'facing'");
  }
  auto facing = parse_facing(j["facing"].get<std::string>());
  if (!facing) throw fail("facing must be up/right/down/left");
  GridState g{j["layout"].get<int>(), j["row"].get<int>(), j["col"].get<int>(),
              *facing, false, false};
  if (variant_ == Variant::DoorKey) {
    for (const char* key : {"has_key", "door_locked"}) {
      if (!j.contains(key) || !j[key].is_boolean()) {
        throw fail(std::string("missing boolean field '") + key + "'");
      }
    }
    g.has_key = j["has_key"].get<bool>();
    g.door_locked = j["door_locked"].get<bool>();
  }
  State s = g;
  validate(s);
  return s;
}

std::vector<FeedbackKind> GridWorld::feedback_kinds() const {
  return {FeedbackKind::Binary, FeedbackKind::Action,
          FeedbackKind::Preference};
}

std::vector<int> GridWorld::legal_actions_unchecked(const State&) const {
  if (variant_ == Variant::DoorKey) {
    return {TurnLeft, TurnRight, MoveForward, PickUp, Unlock};
  }
  return {TurnLeft, TurnRight, MoveForward};
}

bool GridWorld::passable(const GridState& g, int r, int c) const {
  const auto& l = layouts_[g.layout];
  switch (l.at(r, c)) {
    case '.': case 'G': return true;
    case 'K': return g.has_key;
    case 'D': return !g.door_locked;
    default: return false;
  }
}

Transition GridWorld::transition_unchecked(const State& s, int action) const {
  GridState g = state_as<GridState>(s, name_);
  const auto& l = layouts_[g.layout];
  const int fr = g.row + kDeltaRow[static_cast<int>(g.facing)];
  const int fc = g.col + kDeltaCol[static_cast<int>(g.facing)];
  switch (action) {
    case TurnLeft: g.facing = turn(g.facing, -1); break;
    case TurnRight: g.facing = turn(g.facing, 1); break;
    case MoveForward:
      if (passable(g, fr, fc)) {
        g.row = fr;
        g.col = fc;
      }
      break;
    case PickUp:
      if (!g.has_key && l.at(fr, fc) == 'K') g.has_key = true;
      break;
    case Unlock:
      if (g.has_key && g.door_locked && l.at(fr, fc) == 'D') {
        g.door_locked = false;
      }
      break;
    default: break;
  }
  return {g, false};
}

std::string GridWorld::render_ascii(const State& s, bool egocentric) const {
  const auto& g = state_as<GridState>(s, name_);
  const auto& l = layouts_.at(g.layout);
  std::vector<std::string> rows = l.cells;
  if (l.has_key() && g.has_key) rows[l.key_row][l.key_col] = '.';
  rows[g.row][g.col] = kAgentGlyph[static_cast<int>(g.facing)];
  if (egocentric) {
    rows[g.row][g.col] = '^';
    rows = rotate_clockwise(rows, (4 - static_cast<int>(g.facing)) % 4);
  }
  return join_lines(rows);
}

std::string GridWorld::status_line(const GridState& g) const {
  if (variant_ != Variant::DoorKey) return {};
  return std::string("The door is ") +
         (g.door_locked ? "locked" : "unlocked") + ". You " +
         (g.has_key ? "have" : "don't have") + " the key.";
}

std::string GridWorld::render_observation(const State& s,
                                          bool egocentric) const {
  const auto& g = state_as<GridState>(s, name_);
  std::string out = "You are in the following state represented in ASCII art:\n";
  out += render_ascii(s, egocentric);
  if (variant_ == Variant::DoorKey) out += "\n" + status_line(g);
  return out;
}

std::string GridWorld::render_history_step(const State& before, int action,
                                           const Transition&,
                                           bool egocentric) const {
  const auto& g = state_as<GridState>(before, name_);
  std::string out = "You see:\n" + render_ascii(before, egocentric) + "\n";
  if (variant_ == Variant::DoorKey) {
    out += std::string("You ") + (g.has_key ? "have" : "don't have") +
           " the key. The door is " + (g.door_locked ? "locked" : "unlocked") +
           ". ";
  }
  out += "You took action " + action_name(action) + ".";
  return out;
}

std::vector<std::string> GridWorld::rules() const {
  std::vector<std::string> lines = {
      "You occupy one tile and face one of four directions.",
      "TURN LEFT rotates you 90 degrees to your left without moving.",
      "TURN RIGHT rotates you 90 degrees to your right without moving.",
  };
  if (variant_ == Variant::DoorKey) {
    lines.push_back(
        "MOVE FORWARD moves you one tile in the direction you are facing if "
        "that tile is empty, the goal, or an unlocked door. Otherwise you do "
        "not move.");
    lines.push_back("You cannot walk onto walls, the key, or a locked door.");
    lines.push_back(
        "PICK UP THE KEY takes the key when you are facing the tile with the "
        "key on it. Otherwise nothing happens.");
    lines.push_back(
        "UNLOCK THE DOOR unlocks the door when you have the key and are "
        "facing the locked door. Otherwise nothing happens.");
    lines.push_back("An unlocked door can be walked through.");
  } else {
    lines.push_back(
        "MOVE FORWARD moves you one tile in the direction you are facing if "
        "that tile is empty or the goal. Otherwise you do not move.");
    lines.push_back("You cannot walk onto walls.");
  }
  lines.push_back("Reaching the goal tile completes the task.");
  return lines;
}

std::vector<std::string> GridWorld::rules_for(const State& s) const {
  const auto& g = state_as<GridState>(s, name_);
  const auto& l = layouts_.at(g.layout);
  const int fr = g.row + kDeltaRow[static_cast<int>(g.facing)];
  const int fc = g.col + kDeltaCol[static_cast<int>(g.facing)];
  const char ahead = l.at(fr, fc);
  std::vector<std::string> lines;
  for (int a : legal_actions(s)) {
    std::string line = action_name(a) + ": ";
    switch (a) {
      case TurnLeft:
      case TurnRight: {
        auto f = turn(g.facing, a == TurnLeft ? -1 : 1);
        line += "you will face " + std::string(to_string(f)) + "wards.";
        break;
      }
      case MoveForward:
        if (passable(g, fr, fc)) {
          line += ahead == 'G' ? "you will reach the goal."
                               : "you will move one tile forward.";
        } else if (ahead == '#') {
          line += "you are facing a wall, so you will not move.";
        } else if (ahead == 'K') {
          line += "the key is in front of you, so you will not move.";
        } else {
          line += "the door in front of you is locked, so you will not move.";
        }
        break;
      case PickUp:
        line += !g.has_key && ahead == 'K'
                    ? "you will pick up the key."
                    : "you are not facing the key, so nothing will happen.";
        break;
      case Unlock:
        if (g.has_key && g.door_locked && ahead == 'D') {
          line += "you will unlock the door.";
        } else if (!g.has_key) {
          line += "you don't have the key, so nothing will happen.";
        } else {
          line += "you are not facing a locked door, so nothing will happen.";
        }
        break;
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace fbh
