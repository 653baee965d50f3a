#include "fbharness/snapshot.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fbharness/errors.hpp"

namespace fbh {

namespace {

std::string_view gripper_word(bool close) { return close ? "close" : "open"; }

[[noreturn]] void schema(std::size_t line, const std::string& field,
                         const std::string& why) {
  std::string where = line ? "line " + std::to_string(line) + ": " : "";
  throw SchemaError(where + "field '" + field + "' " + why, line, field);
}

const json& need(const json& j, const char* field, std::size_t line) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) schema(line, field, "is missing");
  return *it;
}

template <typename T>
T typed(const json& j, const char* field, std::size_t line) {
  try {
    return need(j, field, line).get<T>();
  } catch (const json::exception&) {
    schema(line, field, "has the wrong type");
  }
}

}  // namespace

json to_json(const Label& l) {
  json j{{"kind", to_string(l.kind)}};
  switch (l.kind) {
    case FeedbackKind::Binary:
    case FeedbackKind::Preference:
      j["sign"] = l.sign;
      break;
    case FeedbackKind::Action:
      j["optimal"] = l.optimal;
      break;
    case FeedbackKind::Goal: {
      json cells = json::array();
      for (auto [r, c] : l.optimal_next) cells.push_back({r, c});
      j["optimal_next"] = std::move(cells);
      break;
    }
    case FeedbackKind::Delta:
      j["delta"] = l.delta;
      j["gripper"] = gripper_word(l.close);
      j["epsilon"] = l.epsilon;
      j["expert_action"] = l.expert_action;
      break;
  }
  return j;
}

Label label_from_json(const json& j) {
  return snapshot_from_json(json{{"id", "-"},
                                 {"domain", "-"},
                                 {"kind", j.value("kind", "")},
                                 {"policy", "exhaustive"},
                                 {"seed", 0},
                                 {"state", json::object()},
                                 {"actions", json::array()},
                                 {"label", j},
                                 {"action", "-"},
                                 {"action_pair", {"-", "-"}}})
      .label;
}

json to_json(const Snapshot& s) {
  json j;
  j["id"] = s.id;
  j["domain"] = s.domain;
  j["kind"] = to_string(s.kind);
  j["policy"] = to_string(s.policy);
  j["seed"] = s.seed;
  j["state"] = s.state;
  if (s.action) j["action"] = *s.action;
  if (s.action_pair) {
    j["action_pair"] = {s.action_pair->first, s.action_pair->second};
  }
  j["actions"] = s.actions;
  j["label"] = to_json(s.label);
  json history = json::array();
  for (const auto& h : s.history) {
    history.push_back({{"state", h.state}, {"action", h.action}});
  }
  j["history"] = std::move(history);
  if (s.pair_id) j["pair_id"] = *s.pair_id;
  if (s.gt_position) j["gt_position"] = *s.gt_position;
  j["provenance"] = s.provenance;
  return j;
}

Snapshot snapshot_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) schema(line, "<record>", "is not a JSON object");
  static const std::set<std::string> known = {
      "id", "domain", "kind", "policy", "seed", "state", "action",
      "action_pair", "actions", "label", "history", "pair_id",
      "gt_position", "provenance"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) schema(line, k, "is not a snapshot field");
  }
  Snapshot s;
  s.id = typed<std::string>(j, "id", line);
  s.domain = typed<std::string>(j, "domain", line);
  auto kind = parse_feedback_kind(typed<std::string>(j, "kind", line));
  if (!kind) schema(line, "kind", "is not a feedback kind");
  s.kind = *kind;
  auto policy = parse_policy(typed<std::string>(j, "policy", line));
  if (!policy) schema(line, "policy", "is not a sampling policy");
  s.policy = *policy;
  s.seed = typed<std::uint64_t>(j, "seed", line);
  s.state = need(j, "state", line);
  if (needs_single_action(s.kind)) {
    s.action = typed<std::string>(j, "action", line);
  } else if (j.contains("action")) {
    schema(line, "action", "is not allowed for this kind");
  }
  if (needs_action_pair(s.kind)) {
    auto pair = typed<std::vector<std::string>>(j, "action_pair", line);
    if (pair.size() != 2) schema(line, "action_pair", "must hold two actions");
    s.action_pair = std::pair{pair[0], pair[1]};
  } else if (j.contains("action_pair")) {
    schema(line, "action_pair", "is not allowed for this kind");
  }
  s.actions = typed<std::vector<std::string>>(j, "actions", line);

  const json& lj = need(j, "label", line);
  if (!lj.is_object()) schema(line, "label", "is not an object");
  Label& l = s.label;
  auto lkind = parse_feedback_kind(typed<std::string>(lj, "kind", line));
  if (!lkind || *lkind != s.kind) {
    schema(line, "label.kind", "does not match the snapshot kind");
  }
  l.kind = *lkind;
  switch (l.kind) {
    case FeedbackKind::Binary:
    case FeedbackKind::Preference: {
      l.sign = typed<int>(lj, "sign", line);
      if (l.sign < -1 || l.sign > 1 ||
          (l.kind == FeedbackKind::Binary && l.sign == 0)) {
        schema(line, "label.sign", "is out of range");
      }
      break;
    }
    case FeedbackKind::Action:
      l.optimal = typed<std::vector<std::string>>(lj, "optimal", line);
      if (l.optimal.empty()) schema(line, "label.optimal", "is empty");
      break;
    case FeedbackKind::Goal: {
      auto cells =
          typed<std::vector<std::array<int, 2>>>(lj, "optimal_next", line);
      if (cells.empty()) schema(line, "label.optimal_next", "is empty");
      for (auto c : cells) l.optimal_next.emplace_back(c[0], c[1]);
      break;
    }
    case FeedbackKind::Delta: {
      l.delta = typed<std::array<double, 3>>(lj, "delta", line);
      const auto grip = typed<std::string>(lj, "gripper", line);
      if (grip != "open" && grip != "close") {
        schema(line, "label.gripper", "must be open or close");
      }
      l.close = grip == "close";
      l.epsilon = typed<double>(lj, "epsilon", line);
      l.expert_action = typed<std::string>(lj, "expert_action", line);
      break;
    }
  }

  if (j.contains("history")) {
    const json& hj = j["history"];
    if (!hj.is_array()) schema(line, "history", "is not an array");
    for (const auto& h : hj) {
      if (!h.is_object() || !h.contains("state") || !h.contains("action") ||
          !h["action"].is_string()) {
        schema(line, "history", "entries need state and action");
      }
      s.history.push_back({h["state"], h["action"].get<std::string>()});
    }
  }
  if (j.contains("pair_id")) s.pair_id = typed<std::int64_t>(j, "pair_id", line);
  if (j.contains("gt_position")) {
    s.gt_position = typed<std::string>(j, "gt_position", line);
  }
  if (j.contains("provenance")) s.provenance = j["provenance"];
  return s;
}

std::string to_jsonl(const std::vector<Snapshot>& snapshots) {
  std::string out;
  for (const auto& s : snapshots) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<Snapshot> parse_jsonl(const std::string& text) {
  std::vector<Snapshot> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("line " + std::to_string(n) + ": invalid JSON (" +
                            e.what() + ")",
                        n, "<record>");
    }
    out.push_back(snapshot_from_json(j, n));
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Snapshot>& snapshots) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_jsonl(snapshots);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<Snapshot> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

}  // namespace fbh
