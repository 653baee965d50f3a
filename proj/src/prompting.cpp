#include "fbharness/prompting.hpp"

#include <algorithm>
#include <cstdio>

#include "fbharness/dataset.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/json_util.hpp"
#include "fbharness/oracle.hpp"
#include "fbharness/resources.hpp"
#include "fbharness/response.hpp"
#include "fbharness/rng.hpp"

namespace fbh {

std::string_view to_string(DynamicsMode m) {
  switch (m) {
    case DynamicsMode::Standard: return "standard";
    case DynamicsMode::Unknown: return "unknown";
    case DynamicsMode::Full: return "full";
    case DynamicsMode::LegalOnly: return "legal-actions-only";
  }
  return "?";
}

std::optional<DynamicsMode> parse_dynamics(std::string_view text) {
  for (auto m : {DynamicsMode::Standard, DynamicsMode::Unknown,
                 DynamicsMode::Full, DynamicsMode::LegalOnly}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

std::string ConditionSet::label() const {
  std::vector<std::string> parts;
  if (icl > 0) {
    parts.push_back("icl" + std::to_string(icl) + (icl_generated ? "gen" : ""));
  }
  if (thinking_guides) parts.push_back("guides");
  if (dynamics == DynamicsMode::Unknown) parts.push_back("dyn-unknown");
  if (dynamics == DynamicsMode::Full) parts.push_back("dyn-full");
  if (dynamics == DynamicsMode::LegalOnly) parts.push_back("dyn-legal");
  if (history > 0) parts.push_back("hist" + std::to_string(history));
  if (egocentric) parts.push_back("ego");
  if (parts.empty()) return "baseline";
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

json ConditionSet::to_json() const {
  return json{{"icl", icl},
              {"icl_generated", icl_generated},
              {"thinking_guides", thinking_guides},
              {"dynamics", fbh::to_string(dynamics)},
              {"history", history},
              {"egocentric", egocentric}};
}

ConditionSet ConditionSet::from_json(const json& j) {
  const std::string ctx = "condition set";
  require_known_keys(j,
                     {"icl", "icl_generated", "thinking_guides",
                      "dynamics", "history", "egocentric"},
                     ctx);
  ConditionSet c;
  auto count = [&](const char* key, int on_value) {
    if (!j.contains(key)) return 0;
    const json& v = j[key];
    if (v.is_boolean()) return v.get<bool>() ? on_value : 0;
    if (v.is_number_integer() && v.get<int>() >= 0) return v.get<int>();
    throw ConfigError(ctx + ": '" + key + "' must be a boolean or a count");
  };
  c.icl = count("icl", 3);
  c.history = count("history", kDefaultHistory);
  c.icl_generated = get_field_or<bool>(j, "icl_generated", false, ctx);
  c.thinking_guides = get_field_or<bool>(j, "thinking_guides", false, ctx);
  c.egocentric = get_field_or<bool>(j, "egocentric", false, ctx);
  auto mode = parse_dynamics(
      get_field_or<std::string>(j, "dynamics", "standard", ctx));
  if (!mode) throw ConfigError(ctx + ": unknown dynamics mode");
  c.dynamics = *mode;
  return c;
}

std::string template_family(std::string_view domain) {
  std::string name(domain);
  if (resources::find("prompts/" + name + ".json")) return name;
  auto dash = name.find('-');
  if (dash != std::string::npos) {
    std::string base = name.substr(0, dash);
    if (resources::find("prompts/" + base + ".json")) return base;
  }
  throw ConfigError("no prompt templates for domain '" + name + "'");
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

std::string join(const std::vector<std::string>& lines, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += sep;
    out += lines[i];
  }
  return out;
}

std::string command_text(const std::array<double, 4>& v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.2f %.2f %.2f %+d]", v[0] + 0.0,
                v[1] + 0.0, v[2] + 0.0, v[3] > 0 ? 1 : -1);
  std::string s = buf;
  replace_all(s, "-0.00", "0.00");
  return s;
}

const GripperLift& as_gripper(const Environment& env) {
  const auto* g = dynamic_cast<const GripperLift*>(&env);
  if (!g) throw ConfigError(env.name() + " has no delta feedback");
  return *g;
}

}  // namespace

PromptBuilder::PromptBuilder(const Environment& env, const OracleTables* tables)
    : env_(env), tables_(tables), family_(template_family(env.name())) {
  try {
    templates_ = json::parse(resources::get("prompts/" + family_ + ".json"));
  } catch (const json::exception& e) {
    throw ConfigError("prompt templates for " + family_ + ": " + e.what());
  }
}

void PromptBuilder::validate(FeedbackKind kind, const ConditionSet& c) const {
  if (!env_.supports(kind)) {
    throw ConfigError(env_.name() + " does not support " +
                      std::string(to_string(kind)) + " feedback");
  }
  if (c.egocentric && !env_.supports_egocentric()) {
    throw ConfigError(env_.name() + " has no egocentric rendering");
  }
  if (c.icl < 0 || c.history < 0) {
    throw ConfigError("condition counts must be non-negative");
  }
  if (c.icl > 0 && c.icl_generated && !tables_) {
    throw ConfigError("generated ICL examples need oracle tables");
  }
  if (c.icl > 0 && !c.icl_generated &&
      !resources::find("icl/" + family_ + "__" +
                       std::string(to_string(kind)) + ".json")) {
    throw ConfigError("no ICL corpus for " + family_ + "/" +
                      std::string(to_string(kind)) +
                      "; use generated examples instead");
  }
  const auto& q = templates_.at("question");
  if (!q.contains(std::string(to_string(kind)))) {
    throw ConfigError("missing question template for " + family_ + "/" +
                      std::string(to_string(kind)));
  }
}

std::string PromptBuilder::action_list() const {
  std::vector<std::string> lines;
  for (const auto& a : env_.action_names()) lines.push_back("- " + a);
  return join(lines, "\n");
}

std::string PromptBuilder::task_section(FeedbackKind kind,
                                        const ConditionSet& c) const {
  const json& task = templates_.at("task");
  std::string variant = "standard";
  if (c.egocentric) {
    variant = "egocentric";
  } else if (c.dynamics == DynamicsMode::Unknown) {
    variant = "unknown";
  }
  if (!task.contains(variant)) {
    throw ConfigError("missing " + variant + " task template for " + family_);
  }
  std::string text = task[variant].get<std::string>();
  replace_all(text, "{kind_intro}",
              templates_.at("kind_intro").at(std::string(to_string(kind)))
                  .get<std::string>());
  replace_all(text, "{action_list}", action_list());
  return text;
}

std::string PromptBuilder::dynamics_section(DynamicsMode mode,
                                            const State& s) const {
  switch (mode) {
    case DynamicsMode::Standard:
    case DynamicsMode::Unknown:
      return {};
    case DynamicsMode::Full:
      return templates_.at("full_header").get<std::string>() + "\n" +
             join(env_.rules(), "\n");
    case DynamicsMode::LegalOnly:
      return templates_.at("legal_header").get<std::string>() + "\n" +
             join(env_.rules_for(s), "\n");
  }
  return {};
}

std::string PromptBuilder::thinking_guides() const {
  return chomp(std::string(resources::get("guides/" + family_ + ".txt")));
}

std::string PromptBuilder::question(const Snapshot& snap) const {
  std::string q = templates_.at("question")
                      .at(std::string(to_string(snap.kind)))
                      .get<std::string>();
  if (snap.action) {
    const int a = action_id(env_, *snap.action);
    replace_all(q, "{action}", env_.render_action(a));
    if (snap.kind == FeedbackKind::Delta) {
      const auto& g = as_gripper(env_);
      replace_all(q, "{action_vector}", command_text(g.action_vector(a)));
      std::vector<std::string> rows;
      for (std::size_t i = 0; i < env_.action_names().size(); ++i) {
        rows.push_back("Index " + std::to_string(i) + ": " +
                       command_text(g.action_vector(static_cast<int>(i))));
      }
      replace_all(q, "{index_list}", join(rows, "\n"));
    }
  }
  if (snap.action_pair) {
    replace_all(q, "{action1}",
                env_.render_action(action_id(env_, snap.action_pair->first)));
    replace_all(q, "{action2}",
                env_.render_action(action_id(env_, snap.action_pair->second)));
  }
  return q;
}

std::string PromptBuilder::footer(FeedbackKind kind) const {
  const std::string head = "Only give the answer in a new line in JSON format:\n";
  const std::string tail = "<REASONING> is a string of your thinking steps.";
  switch (kind) {
    case FeedbackKind::Binary:
      return head +
             "{\"reasoning\": <REASONING>, \"feedback\": <FEEDBACK>}\n"
             "Where <FEEDBACK> is one of \"YES\" or \"NO\", " + tail;
    case FeedbackKind::Preference:
      return head +
             "{\"reasoning\": <REASONING>, \"preference\": <PREFERENCE>}\n"
             "Where <PREFERENCE> is one of \"FIRST\" or \"SECOND\", " + tail;
    case FeedbackKind::Action: {
      std::string choices;
      if (templates_.value("action_choices", "list") == "list") {
        const auto names = env_.action_names();
        std::vector<std::string> quoted;
        for (const auto& n : names) quoted.push_back("\"" + n + "\"");
        choices = "one of ";
        if (quoted.size() == 1) {
          choices += quoted[0];
        } else {
          std::vector<std::string> head_items(quoted.begin(), quoted.end() - 1);
          choices += join(head_items, ", ") + " or " + quoted.back();
        }
      } else {
        choices = "one of possible actions";
      }
      return head + "{\"reasoning\": <REASONING>, \"action\": <ACTION>}\n" +
             "Where <ACTION> is " + choices + ", " + tail;
    }
    case FeedbackKind::Goal:
      return head +
             "{\"reasoning\": <REASONING>, \"row\": <ROW>, \"column\": "
             "<COLUMN>}\n"
             "Where <ROW> is the number of the row you should move, and "
             "<COLUMN> is the number of column you should move, " + tail;
    case FeedbackKind::Delta:
      return head + "{\"reasoning\": <REASONING>, \"index\": <INDEX>}\n" +
             "Where <INDEX> is one of action choice index, " + tail;
  }
  return {};
}

ResponseSchema PromptBuilder::schema(const Snapshot& snap) const {
  switch (snap.kind) {
    case FeedbackKind::Binary: return {{"feedback"}, {"YES", "NO"}};
    case FeedbackKind::Preference: return {{"preference"}, {"FIRST", "SECOND"}};
    case FeedbackKind::Action: return {{"action"}, snap.actions};
    case FeedbackKind::Goal: return {{"row", "column"}, {}};
    case FeedbackKind::Delta: {
      ResponseSchema s{{"index"}, {}};
      for (std::size_t i = 0; i < env_.action_names().size(); ++i) {
        s.allowed.push_back(std::to_string(i));
      }
      return s;
    }
  }
  return {};
}

std::string PromptBuilder::history_section(const Snapshot& snap, int k,
                                           bool egocentric) const {
  if (k <= 0) return {};
  const std::string header = templates_.at("history_header").get<std::string>();
  const State current = snapshot_state(env_, snap);
  std::vector<State> states;
  std::vector<int> actions;
  for (const auto& h : snap.history) {
    states.push_back(env_.decode(h.state));
    actions.push_back(action_id(env_, h.action));
  }
  // The recorded steps must chain into the snapshot's state.
  for (std::size_t i = 0; i < states.size(); ++i) {
    const State next =
        i + 1 < states.size() ? states[i + 1] : current;
    if (env_.step(states[i], actions[i]) != next) {
      throw ConfigError(snap.id + ": history does not lead to the state");
    }
  }
  if (states.empty()) return header + "\nThis is your first step.";
  const std::size_t n = std::min<std::size_t>(k, states.size());
  std::string out = header;
  for (std::size_t i = states.size() - n, step = 1; i < states.size();
       ++i, ++step) {
    const Transition t = env_.transition(states[i], actions[i]);
    out += "\nStep " + std::to_string(step) + ": " +
           env_.render_history_step(states[i], actions[i], t, egocentric);
  }
  return out;
}

std::string PromptBuilder::icl_section(const Snapshot& snap,
                                       const ConditionSet& c) const {
  if (c.icl <= 0) return {};
  if (c.icl_generated) return generated_icl(snap, c.icl);
  const std::string path =
      "icl/" + family_ + "__" + std::string(to_string(snap.kind)) + ".json";
  auto text = resources::find(path);
  if (!text) {
    throw ConfigError("no ICL corpus for " + family_ + "/" +
                      std::string(to_string(snap.kind)));
  }
  const json corpus = json::parse(*text);
  std::vector<std::string> parts;
  const std::string head = corpus.value("header", "");
  if (!head.empty()) parts.push_back(head);
  const auto& examples = corpus.at("examples");
  const std::size_t n = std::min<std::size_t>(c.icl, examples.size());
  for (std::size_t i = 0; i < n; ++i) {
    parts.push_back("Question: " + examples[i].at("question").get<std::string>() +
                    "\nAnswer: " + examples[i].at("answer").get<std::string>());
  }
  return join(parts, "\n");
}

std::string PromptBuilder::generated_icl(const Snapshot& snap, int k) const {
  // Worked examples on other states, answered from the oracle tables.
  DatasetSpec spec;
  spec.domain = env_.name();
  spec.kind = snap.kind;
  spec.policy = SamplingPolicyKind::Exhaustive;
  spec.history_keep = 0;
  auto pool = sample_states(*tables_, spec);
  const State current = snapshot_state(env_, snap);
  pool.erase(std::remove_if(pool.begin(), pool.end(),
                            [&](const SampledState& s) {
                              return s.state == current;
                            }),
             pool.end());
  Rng rng(derive_seed(fnv1a64(snap.id), "icl"));
  std::vector<std::string> parts = {
      "Below are examples about giving " + std::string(to_string(snap.kind)) +
      " feedback."};
  for (int made = 0, tries = 0; made < k && tries < 50 * k && !pool.empty();
       ++tries) {
    SampledState picked = pool[uniform_index(rng, pool.size())];
    std::vector<SampledState> one = {picked};
    BuildResult built;
    try {
      built = fbh::build(*tables_, spec, one);
    } catch (const ConfigError&) {
      continue;  // e.g. only tied preference pairs at this state
    }
    const Snapshot& ex =
        built.snapshots[uniform_index(rng, built.snapshots.size())];
    const std::string sep = templates_.value("observation_separator", "\n");
    const std::string q =
        env_.render_observation(picked.state, false) + sep + question(ex) +
        "\n" + footer(ex.kind);
    parts.push_back("Question: " + q + "\nAnswer: " + oracle_answer(ex));
    ++made;
  }
  return join(parts, "\n");
}

PromptBundle PromptBuilder::build(const Snapshot& snap,
                                  const ConditionSet& c) const {
  if (snap.domain != env_.name()) {
    throw ConfigError(snap.id + " belongs to " + snap.domain + ", not " +
                      env_.name());
  }
  validate(snap.kind, c);
  const State s = snapshot_state(env_, snap);
  PromptBundle b;
  b.kind = snap.kind;
  b.snapshot_id = snap.id;
  b.condition = c.label();
  b.schema = schema(snap);
  auto add = [&](std::string name, std::string text) {
    if (!text.empty()) b.sections.push_back({std::move(name), std::move(text)});
  };
  add("task", task_section(snap.kind, c));
  add("dynamics", dynamics_section(c.dynamics, s));
  if (c.thinking_guides) add("guides", thinking_guides());
  add("icl", icl_section(snap, c));
  add("observation", env_.render_observation(s, c.egocentric));
  add("history", history_section(snap, c.history, c.egocentric));
  add("question", question(snap));
  add("footer", footer(snap.kind));

  const std::string sep = templates_.value("observation_separator", "\n");
  for (std::size_t i = 0; i < b.sections.size(); ++i) {
    if (i) {
      const bool joined = b.sections[i - 1].name == "observation" &&
                          b.sections[i].name == "question";
      b.text += joined ? sep : "\n";
    }
    b.text += b.sections[i].text;
  }
  b.text += "\n";
  return b;
}

}  // namespace fbh
