#include "fbharness/craft_world.hpp"

#include <algorithm>

#include "fbharness/errors.hpp"
#include "fbharness/json_util.hpp"

namespace fbh {

namespace {

std::string counted(const std::vector<std::pair<int, int>>& parts,
                    const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(parts[i].second) + " " + items[parts[i].first];
  }
  return out;
}

}  // namespace

int CraftWorldConfig::item_index(const std::string& item) const {
  auto it = std::find(items.begin(), items.end(), item);
  if (it == items.end()) {
    throw ConfigError(name + ": unknown item '" + item + "'");
  }
  return static_cast<int>(it - items.begin());
}

int CraftWorldConfig::zone_index(const std::string& zone) const {
  auto it = std::find(zones.begin(), zones.end(), zone);
  if (it == zones.end()) {
    throw ConfigError(name + ": unknown zone '" + zone + "'");
  }
  return static_cast<int>(it - zones.begin());
}

CraftWorldConfig CraftWorldConfig::from_json(const json& j) {
  require_known_keys(j,
                     {"name", "zones", "items", "max_count", "caps",
                      "placeables", "start", "goal", "recipes", "searches",
                      "moves", "state_bound"},
                     "craftworld config");
  CraftWorldConfig c;
  const std::string ctx = "craftworld config";
  c.name = get_field<std::string>(j, "name", ctx);
  c.zones = get_field<std::vector<std::string>>(j, "zones", ctx);
  c.items = get_field<std::vector<std::string>>(j, "items", ctx);
  const int max_count = get_field_or<int>(j, "max_count", 9, ctx);
  c.caps.assign(c.items.size(), max_count);
  const json caps = j.value("caps", json::object());
  for (const auto& [item, cap] : caps.items()) {
    c.caps[c.item_index(item)] = cap.get<int>();
  }
  for (int cap : c.caps) {
    if (cap < 1 || cap > 255) throw ConfigError(ctx + ": caps must be 1..255");
  }
  for (const auto& p : j.value("placeables", json::array())) {
    c.placeables.push_back(c.item_index(p.get<std::string>()));
  }
  auto parts = [&](const json& list) {
    std::vector<std::pair<int, int>> out;
    for (const auto& entry : list) {
      if (!entry.is_array() || entry.size() != 2) {
        throw ConfigError(ctx + ": recipe parts are [item, count] pairs");
      }
      int count = entry[1].get<int>();
      if (count < 1) throw ConfigError(ctx + ": recipe counts must be >= 1");
      out.emplace_back(c.item_index(entry[0].get<std::string>()), count);
    }
    return out;
  };
  for (const auto& r : get_field<json>(j, "recipes", ctx)) {
    require_known_keys(r, {"name", "verb", "inputs", "outputs", "station"},
                       ctx + " recipe");
    Recipe recipe;
    recipe.name = get_field<std::string>(r, "name", ctx);
    recipe.verb = get_field_or<std::string>(r, "verb", "craft", ctx);
    if (recipe.verb != "craft" && recipe.verb != "smelt") {
      throw ConfigError(ctx + ": recipe verb must be craft or smelt");
    }
    recipe.inputs = parts(get_field<json>(r, "inputs", ctx));
    recipe.outputs = parts(get_field<json>(r, "outputs", ctx));
    if (r.contains("station") && !r["station"].is_null()) {
      recipe.station = c.item_index(r["station"].get<std::string>());
    }
    c.recipes.push_back(std::move(recipe));
  }
  for (const auto& s : j.value("searches", json::array())) {
    require_known_keys(s, {"zone", "item", "yield", "tool"}, ctx + " search");
    Search search{c.zone_index(get_field<std::string>(s, "zone", ctx)),
                  c.item_index(get_field<std::string>(s, "item", ctx)),
                  get_field_or<int>(s, "yield", 1, ctx)};
    if (s.contains("tool")) {
      search.tool = c.item_index(s["tool"].get<std::string>());
    }
    c.searches.push_back(search);
  }
  for (const auto& m : j.value("moves", json::array())) {
    require_known_keys(m, {"from", "to", "tool"}, ctx + " move");
    Move move{c.zone_index(get_field<std::string>(m, "from", ctx)),
              c.zone_index(get_field<std::string>(m, "to", ctx))};
    if (m.contains("tool")) {
      move.tool = c.item_index(m["tool"].get<std::string>());
    }
    c.moves.push_back(move);
  }
  const json start = get_field<json>(j, "start", ctx);
  require_known_keys(start, {"zone", "inventory", "placed"}, ctx + " start");
  c.start_zone = c.zone_index(get_field<std::string>(start, "zone", ctx));
  const json inventory = start.value("inventory", json::object());
  for (const auto& [item, n] : inventory.items()) {
    c.start_inventory[c.item_index(item)] = n.get<int>();
  }
  const json placed = start.value("placed", json::object());
  for (const auto& [zone, contents] : placed.items()) {
    for (const auto& [item, n] : contents.items()) {
      int idx = c.item_index(item);
      if (std::find(c.placeables.begin(), c.placeables.end(), idx) ==
          c.placeables.end()) {
        throw ConfigError(ctx + ": only placeables can start placed");
      }
      c.start_placed[{c.zone_index(zone), idx}] = n.get<int>();
    }
  }
  const json goal = get_field<json>(j, "goal", ctx);
  c.goal_item = c.item_index(get_field<std::string>(goal, "item", ctx));
  c.goal_count = get_field_or<int>(goal, "count", 1, ctx);
  if (c.items.size() + c.zones.size() * c.placeables.size() >
      CraftState::kSlots) {
    throw ConfigError(ctx + ": too many items/zones for the packed state");
  }
  return c;
}

CraftWorld::CraftWorld(CraftWorldConfig config, MdpParams params)
    : Environment(params), config_(std::move(config)) {
  const auto& c = config_;
  for (std::size_t p = 0; p < c.placeables.size(); ++p) {
    actions_.push_back("pickup " + c.items[c.placeables[p]]);
    refs_.push_back({Kind::Pickup, static_cast<int>(p)});
  }
  for (std::size_t p = 0; p < c.placeables.size(); ++p) {
    actions_.push_back("place " + c.items[c.placeables[p]]);
    refs_.push_back({Kind::Place, static_cast<int>(p)});
  }
  for (std::size_t r = 0; r < c.recipes.size(); ++r) {
    actions_.push_back(c.recipes[r].name);
    refs_.push_back({Kind::Recipe, static_cast<int>(r)});
  }
  for (std::size_t i = 0; i < c.searches.size(); ++i) {
    const auto& s = c.searches[i];
    std::string name = "search for " + c.items[s.item];
    if (s.tool >= 0) name += " with " + c.items[s.tool];
    name += " at " + c.zones[s.zone];
    actions_.push_back(std::move(name));
    refs_.push_back({Kind::Search, static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < c.moves.size(); ++i) {
    const auto& m = c.moves[i];
    std::string name = "move to " + c.zones[m.to] + " from " + c.zones[m.from];
    if (m.tool >= 0) name += " with " + c.items[m.tool];
    actions_.push_back(std::move(name));
    refs_.push_back({Kind::Move, static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (actions_[i] == actions_[k]) {
        throw ConfigError(c.name + ": duplicate action name '" + actions_[i] +
                          "'");
      }
    }
  }
}

CraftWorld CraftWorld::from_config(const json& config) {
  MdpParams params;
  params.state_bound =
      config.value("state_bound", static_cast<std::size_t>(5'000'000));
  return CraftWorld(CraftWorldConfig::from_json(config), params);
}

int CraftWorld::placeable_pos(int item) const {
  const auto& p = config_.placeables;
  auto it = std::find(p.begin(), p.end(), item);
  return it == p.end() ? -1 : static_cast<int>(it - p.begin());
}

int CraftWorld::placed_slot(int zone, int pos) const {
  return static_cast<int>(config_.items.size()) +
         zone * static_cast<int>(config_.placeables.size()) + pos;
}

int CraftWorld::placed(const CraftState& s, int zone, int item) const {
  int pos = placeable_pos(item);
  return pos < 0 ? 0 : s.counts[placed_slot(zone, pos)];
}

CraftState CraftWorld::start() const {
  CraftState s;
  s.zone = static_cast<std::uint8_t>(config_.start_zone);
  for (auto [item, n] : config_.start_inventory) {
    s.counts[item] = static_cast<std::uint8_t>(n);
  }
  for (auto [key, n] : config_.start_placed) {
    s.counts[placed_slot(key.first, placeable_pos(key.second))] =
        static_cast<std::uint8_t>(n);
  }
  return s;
}

void CraftWorld::validate(const State& s) const {
  const auto& c = state_as<CraftState>(s, name());
  if (c.zone >= config_.zones.size()) {
    throw InvalidState(name() + ": zone index out of range");
  }
  const std::size_t used =
      config_.items.size() + config_.zones.size() * config_.placeables.size();
  for (std::size_t i = 0; i < CraftState::kSlots; ++i) {
    if (i >= used && c.counts[i] != 0) {
      throw InvalidState(name() + ": unused state slot is non-zero");
    }
  }
  for (std::size_t i = 0; i < config_.items.size(); ++i) {
    if (c.counts[i] > config_.caps[i]) {
      throw InvalidState(name() + ": " + config_.items[i] +
                         " exceeds its inventory cap");
    }
  }
  for (std::size_t z = 0; z < config_.zones.size(); ++z) {
    for (std::size_t p = 0; p < config_.placeables.size(); ++p) {
      if (c.counts[placed_slot(static_cast<int>(z), static_cast<int>(p))] >
          config_.caps[config_.placeables[p]]) {
        throw InvalidState(name() + ": placed station count exceeds its cap");
      }
    }
  }
}

bool CraftWorld::is_terminal(const State& s) const {
  return state_as<CraftState>(s, name()).counts[config_.goal_item] >=
         config_.goal_count;
}

std::vector<State> CraftWorld::initial_states() const { return {start()}; }

bool CraftWorld::applicable(const CraftState& s, const ActionRef& a) const {
  const auto& c = config_;
  switch (a.kind) {
    case Kind::Pickup: {
      int item = c.placeables[a.index];
      return s.counts[placed_slot(s.zone, a.index)] > 0 &&
             s.counts[item] < c.caps[item];
    }
    case Kind::Place: {
      int item = c.placeables[a.index];
      return s.counts[item] > 0 &&
             s.counts[placed_slot(s.zone, a.index)] < c.caps[item];
    }
    case Kind::Recipe: {
      const auto& r = c.recipes[a.index];
      if (r.station >= 0 && placed(s, s.zone, r.station) == 0) return false;
      for (auto [item, n] : r.inputs) {
        if (s.counts[item] < n) return false;
      }
      for (auto [item, n] : r.outputs) {
        int consumed = 0;
        for (auto [in_item, in_n] : r.inputs) {
          if (in_item == item) consumed += in_n;
        }
        if (s.counts[item] - consumed + n > c.caps[item]) return false;
      }
      return true;
    }
    case Kind::Search: {
      const auto& se = c.searches[a.index];
      return s.zone == se.zone && (se.tool < 0 || s.counts[se.tool] > 0) &&
             s.counts[se.item] + se.yield <= c.caps[se.item];
    }
    case Kind::Move: {
      const auto& m = c.moves[a.index];
      return s.zone == m.from && (m.tool < 0 || s.counts[m.tool] > 0);
    }
  }
  return false;
}

CraftState CraftWorld::apply(const CraftState& s, const ActionRef& a) const {
  const auto& c = config_;
  CraftState n = s;
  switch (a.kind) {
    case Kind::Pickup:
      --n.counts[placed_slot(s.zone, a.index)];
      ++n.counts[c.placeables[a.index]];
      break;
    case Kind::Place:
      ++n.counts[placed_slot(s.zone, a.index)];
      --n.counts[c.placeables[a.index]];
      break;
    case Kind::Recipe:
      for (auto [item, k] : c.recipes[a.index].inputs) n.counts[item] -= k;
      for (auto [item, k] : c.recipes[a.index].outputs) n.counts[item] += k;
      break;
    case Kind::Search:
      n.counts[c.searches[a.index].item] += c.searches[a.index].yield;
      break;
    case Kind::Move:
      n.zone = static_cast<std::uint8_t>(c.moves[a.index].to);
      break;
  }
  return n;
}

std::vector<int> CraftWorld::legal_actions_unchecked(const State& s) const {
  const auto& c = state_as<CraftState>(s, name());
  std::vector<int> out;
  for (std::size_t i = 0; i < refs_.size(); ++i) {
    if (applicable(c, refs_[i])) out.push_back(static_cast<int>(i));
  }
  return out;
}

Transition CraftWorld::transition_unchecked(const State& s, int action) const {
  return {apply(state_as<CraftState>(s, name()), refs_[action]), false};
}

std::vector<std::pair<int, State>> CraftWorld::expand(const State& s) const {
  std::vector<std::pair<int, State>> out;
  for (int a : legal_actions(s)) out.emplace_back(a, step(s, a));
  return out;
}

json CraftWorld::encode(const State& s) const {
  const auto& c = state_as<CraftState>(s, name());
  json inventory = json::object();
  for (std::size_t i = 0; i < config_.items.size(); ++i) {
    if (c.counts[i]) inventory[config_.items[i]] = c.counts[i];
  }
  json placed_items = json::object();
  for (std::size_t z = 0; z < config_.zones.size(); ++z) {
    json here = json::object();
    for (std::size_t p = 0; p < config_.placeables.size(); ++p) {
      int n = c.counts[placed_slot(static_cast<int>(z), static_cast<int>(p))];
      if (n) here[config_.items[config_.placeables[p]]] = n;
    }
    if (!here.empty()) placed_items[config_.zones[z]] = std::move(here);
  }
  return json{{"zone", config_.zones[c.zone]},
              {"inventory", std::move(inventory)},
              {"placed", std::move(placed_items)}};
}

State CraftWorld::decode(const json& j) const {
  try {
    require_known_keys(j, {"zone", "inventory", "placed"}, name() + " state");
    CraftState c;
    c.zone = static_cast<std::uint8_t>(
        config_.zone_index(j.at("zone").get<std::string>()));
    const json inventory = j.value("inventory", json::object());
    for (const auto& [item, n] : inventory.items()) {
      int count = n.get<int>();
      if (count < 0 || count > 255) throw InvalidState("count out of range");
      c.counts[config_.item_index(item)] = static_cast<std::uint8_t>(count);
    }
    const json placed = j.value("placed", json::object());
    for (const auto& [zone, contents] : placed.items()) {
      int z = config_.zone_index(zone);
      for (const auto& [item, n] : contents.items()) {
        int pos = placeable_pos(config_.item_index(item));
        if (pos < 0) throw InvalidState(item + " cannot be placed");
        int count = n.get<int>();
        if (count < 0 || count > 255) throw InvalidState("count out of range");
        c.counts[placed_slot(z, pos)] = static_cast<std::uint8_t>(count);
      }
    }
    State s = c;
    validate(s);
    return s;
  } catch (const InvalidState&) {
    throw;
  } catch (const std::exception& e) {
    throw InvalidState(name() + " state: " + e.what());
  }
}

std::vector<FeedbackKind> CraftWorld::feedback_kinds() const {
  return {FeedbackKind::Binary, FeedbackKind::Action,
          FeedbackKind::Preference};
}

std::string CraftWorld::inventory_text(const CraftState& s) const {
  std::string out;
  for (std::size_t i = 0; i < config_.items.size(); ++i) {
    if (!s.counts[i]) continue;
    if (!out.empty()) out += ", ";
    out += config_.items[i] + ": " + std::to_string(s.counts[i]);
  }
  return out;
}

std::string CraftWorld::render_observation(const State& s,
                                           bool egocentric) const {
  if (egocentric) throw ConfigError(name() + " has no egocentric rendering");
  const auto& c = state_as<CraftState>(s, name());
  std::string out = "You are in " + config_.zones[c.zone] + ".\n\n";
  std::string zone_items;
  for (std::size_t p = 0; p < config_.placeables.size(); ++p) {
    int n = c.counts[placed_slot(c.zone, static_cast<int>(p))];
    if (n) {
      zone_items += "\n" + config_.items[config_.placeables[p]] + ": " +
                    std::to_string(n);
    }
  }
  out += zone_items.empty() ? "There are no items in your current zone."
                            : "Items in your current zone are:" + zone_items;
  std::string inv;
  for (std::size_t i = 0; i < config_.items.size(); ++i) {
    if (c.counts[i]) {
      inv += "\n" + config_.items[i] + ": " + std::to_string(c.counts[i]);
    }
  }
  out += "\n\n";
  out += inv.empty() ? "Your inventory is empty."
                     : "You have the following items in your inventory:" + inv;
  out += "\n\nYou can take these actions:";
  for (int a : legal_actions(s)) out += "\n" + actions_[a];
  return out;
}

std::string CraftWorld::render_history_step(const State& before, int action,
                                            const Transition&,
                                            bool egocentric) const {
  if (egocentric) throw ConfigError(name() + " has no egocentric rendering");
  const auto& c = state_as<CraftState>(before, name());
  std::string inv = inventory_text(c);
  return "You were in " + config_.zones[c.zone] +
         (inv.empty() ? " with an empty inventory"
                      : " with " + inv + " in your inventory") +
         ". You took action " + actions_[action] + ".";
}

std::string CraftWorld::rule_line(const ActionRef& a) const {
  const auto& c = config_;
  switch (a.kind) {
    case Kind::Pickup:
      return "You can pick up a " + c.items[c.placeables[a.index]] +
             " placed in your current zone.";
    case Kind::Place:
      return "You can place a " + c.items[c.placeables[a.index]] +
             " from your inventory in your current zone.";
    case Kind::Recipe: {
      const auto& r = c.recipes[a.index];
      if (r.verb == "smelt") {
        return "You can get " + counted(r.outputs, c.items) +
               " after smelting with " + counted(r.inputs, c.items) + ".";
      }
      return "You can craft " + counted(r.outputs, c.items) + " with " +
             counted(r.inputs, c.items) + ".";
    }
    case Kind::Search: {
      const auto& s = c.searches[a.index];
      std::string tail = "collect " + std::to_string(s.yield) + " " +
                         c.items[s.item] + " at " + c.zones[s.zone] + ".";
      if (s.tool < 0) return "You can " + tail;
      return "You need to have at least 1 " + c.items[s.tool] + " to " + tail;
    }
    case Kind::Move: {
      const auto& m = c.moves[a.index];
      std::string tail =
          "move from " + c.zones[m.from] + " to " + c.zones[m.to] + ".";
      if (m.tool < 0) return "You can " + tail;
      return "You need to have at least 1 " + c.items[m.tool] + " to " + tail;
    }
  }
  return {};
}

std::vector<std::string> CraftWorld::rules() const {
  const auto& c = config_;
  std::vector<std::string> lines;
  std::vector<std::pair<int, std::string>> stations;
  for (const auto& r : c.recipes) {
    if (r.station < 0) continue;
    std::pair<int, std::string> key{r.station, r.verb};
    if (std::find(stations.begin(), stations.end(), key) == stations.end()) {
      stations.push_back(key);
    }
  }
  for (const auto& [station, verb] : stations) {
    lines.push_back("You need a " + c.items[station] + " to " + verb +
                    " something.");
  }
  if (!c.placeables.empty()) {
    std::string names;
    for (std::size_t p = 0; p < c.placeables.size(); ++p) {
      if (p) names += p + 1 == c.placeables.size() ? " or a " : ", a ";
      names += c.items[c.placeables[p]];
    }
    lines.push_back("You can pick up a " + names + " and take them around.");
    lines.push_back(
        "You need to place one in your current area if you want to use them.");
  }
  for (const auto& ref : refs_) {
    if (ref.kind == Kind::Recipe || ref.kind == Kind::Search ||
        ref.kind == Kind::Move) {
      lines.push_back(rule_line(ref));
    }
  }
  return lines;
}

std::vector<std::string> CraftWorld::rules_for(const State& s) const {
  std::vector<std::string> lines;
  for (int a : legal_actions(s)) lines.push_back(rule_line(refs_[a]));
  return lines;
}

}  // namespace fbh
