#include "fbharness/response.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "fbharness/errors.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/oracle.hpp"

namespace fbh {

std::string_view to_string(ErrorClass e) {
  return e == ErrorClass::Format ? "format" : "illegal-value";
}

std::optional<ErrorClass> parse_error_class(std::string_view text) {
  if (text == "format") return ErrorClass::Format;
  if (text == "illegal-value") return ErrorClass::IllegalValue;
  return std::nullopt;
}

std::string normalize_space(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out += ' ';
      pending = false;
      out += c;
    }
  }
  return out;
}

json ParsedFeedback::to_json() const {
  if (error) return nullptr;
  switch (kind) {
    case FeedbackKind::Binary: return json{{"feedback", text}};
    case FeedbackKind::Action: return json{{"action", text}};
    case FeedbackKind::Preference: return json{{"preference", text}};
    case FeedbackKind::Goal: return json{{"row", row}, {"column", column}};
    case FeedbackKind::Delta:
      return json{{"index", index},
                  {"delta", delta},
                  {"gripper", close ? "close" : "open"}};
  }
  return nullptr;
}

std::optional<json> last_json_object(std::string_view text) {
  // Forward scan over top-level {...} spans; braces inside strings do not
  // count. Spans that fail to parse are skipped.
  std::optional<json> last;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '{') {
      ++i;
      continue;
    }
    int depth = 0;
    bool in_string = false, escaped = false;
    std::size_t end = std::string_view::npos;
    for (std::size_t k = i; k < text.size(); ++k) {
      const char c = text[k];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        end = k;
        break;
      }
    }
    if (end == std::string_view::npos) {
      ++i;  // unbalanced; an inner object may still close
      continue;
    }
    json parsed = json::parse(text.substr(i, end - i + 1), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) {
      last = std::move(parsed);
      i = end + 1;
    } else {
      ++i;
    }
  }
  return last;
}

namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

/// Integer from a JSON number or a numeric string.
std::optional<long long> as_integer(const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 1e15) return static_cast<long long>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    std::string s = normalize_space(v.get<std::string>());
    long long out = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && p == s.data() + s.size() && !s.empty()) return out;
  }
  return std::nullopt;
}

}  // namespace

ParsedFeedback parse_feedback(FeedbackKind kind, std::string_view raw,
                              const Snapshot& snapshot,
                              const Environment& env) {
  ParsedFeedback p;
  p.kind = kind;
  auto fail = [&](ErrorClass e) {
    p.error = e;
    return p;
  };
  auto obj = last_json_object(raw);
  if (!obj) return fail(ErrorClass::Format);

  auto enumerated = [&](const char* field,
                        std::initializer_list<const char*> allowed) {
    auto it = obj->find(field);
    if (it == obj->end()) return fail(ErrorClass::Format);
    if (!it->is_string()) return fail(ErrorClass::IllegalValue);
    std::string v = upper(normalize_space(it->get<std::string>()));
    for (const char* a : allowed) {
      if (v == a) {
        p.text = v;
        return p;
      }
    }
    return fail(ErrorClass::IllegalValue);
  };

  switch (kind) {
    case FeedbackKind::Binary:
      return enumerated("feedback", {"YES", "NO"});
    case FeedbackKind::Preference:
      return enumerated("preference", {"FIRST", "SECOND"});
    case FeedbackKind::Action: {
      auto it = obj->find("action");
      if (it == obj->end()) return fail(ErrorClass::Format);
      if (!it->is_string()) return fail(ErrorClass::IllegalValue);
      std::string v = normalize_space(it->get<std::string>());
      if (std::find(snapshot.actions.begin(), snapshot.actions.end(), v) ==
          snapshot.actions.end()) {
        return fail(ErrorClass::IllegalValue);
      }
      p.text = v;
      return p;
    }
    case FeedbackKind::Goal: {
      if (!obj->contains("row") || !obj->contains("column")) {
        return fail(ErrorClass::Format);
      }
      auto r = as_integer((*obj)["row"]);
      auto c = as_integer((*obj)["column"]);
      auto shape = env.grid_shape();
      if (!r || !c || !shape || *r < 0 || *c < 0 || *r >= shape->first ||
          *c >= shape->second) {
        return fail(ErrorClass::IllegalValue);
      }
      p.row = static_cast<int>(*r);
      p.column = static_cast<int>(*c);
      return p;
    }
    case FeedbackKind::Delta: {
      if (!obj->contains("index")) return fail(ErrorClass::Format);
      auto idx = as_integer((*obj)["index"]);
      const auto* gripper = dynamic_cast<const GripperLift*>(&env);
      if (!gripper) throw Error(env.name() + " has no delta feedback");
      if (!idx || *idx < 0 || *idx >= static_cast<long long>(env.action_names().size())) {
        return fail(ErrorClass::IllegalValue);
      }
      p.index = static_cast<int>(*idx);
      const auto chosen = gripper->action_vector(p.index);
      const auto taken =
          gripper->action_vector(*env.find_action(snapshot.action.value()));
      for (int k = 0; k < 3; ++k) p.delta[k] = chosen[k] - taken[k];
      p.close = chosen[3] < 0;
      return p;
    }
  }
  return fail(ErrorClass::Format);
}

Score score(const ParsedFeedback& p, const Snapshot& s) {
  if (p.kind != s.kind || s.label.kind != s.kind) {
    throw Error("score: feedback kind does not match the snapshot " + s.id);
  }
  Score out;
  if (p.error) {
    out.error = p.error;
    return out;
  }
  const Label& l = s.label;
  switch (p.kind) {
    case FeedbackKind::Binary:
      out.correct = (p.text == "YES") == (l.sign > 0);
      break;
    case FeedbackKind::Preference:
      out.correct = l.sign != 0 && (p.text == "FIRST") == (l.sign > 0);
      break;
    case FeedbackKind::Action:
      out.correct = std::find(l.optimal.begin(), l.optimal.end(), p.text) !=
                    l.optimal.end();
      break;
    case FeedbackKind::Goal:
      out.correct = std::find(l.optimal_next.begin(), l.optimal_next.end(),
                              std::pair{p.row, p.column}) != l.optimal_next.end();
      break;
    case FeedbackKind::Delta: {
      DeltaLabel d{l.delta, l.close, l.epsilon, 0};
      out.correct = delta_accepts(d, p.delta, p.close);
      break;
    }
  }
  return out;
}

std::string oracle_answer(const Snapshot& s, std::string_view reasoning) {
  const Label& l = s.label;
  json j{{"reasoning", reasoning.empty() ? "Following a shortest path to the goal."
                                         : std::string(reasoning)}};
  switch (s.kind) {
    case FeedbackKind::Binary:
      j["feedback"] = l.sign > 0 ? "YES" : "NO";
      break;
    case FeedbackKind::Preference:
      j["preference"] = l.sign >= 0 ? "FIRST" : "SECOND";
      break;
    case FeedbackKind::Action:
      j["action"] = l.optimal.at(0);
      break;
    case FeedbackKind::Goal:
      j["row"] = std::to_string(l.optimal_next.at(0).first);
      j["column"] = std::to_string(l.optimal_next.at(0).second);
      break;
    case FeedbackKind::Delta: {
      auto it = std::find(s.actions.begin(), s.actions.end(), l.expert_action);
      if (it == s.actions.end()) throw Error(s.id + ": expert action not listed");
      j["index"] = static_cast<int>(it - s.actions.begin());
      break;
    }
  }
  return j.dump();
}

}  // namespace fbh
