#include "fbharness/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "fbharness/errors.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/json_util.hpp"
#include "fbharness/rng.hpp"

namespace fbh {

DatasetSpec DatasetSpec::from_json(const json& j) {
  const std::string ctx = "dataset spec";
  require_known_keys(j,
                     {"domain", "kind", "policy", "states", "seed",
                      "downsample", "mirror", "exclude_ties",
                      "optimal_pairs_only", "max_episode_steps",
                      "history_keep"},
                     ctx);
  DatasetSpec s;
  s.domain = get_field<std::string>(j, "domain", ctx);
  auto kind = parse_feedback_kind(get_field<std::string>(j, "kind", ctx));
  if (!kind) throw ConfigError(ctx + ": unknown feedback kind");
  s.kind = *kind;
  auto policy = parse_policy(
      get_field_or<std::string>(j, "policy", "exhaustive", ctx));
  if (!policy) throw ConfigError(ctx + ": unknown sampling policy");
  s.policy = *policy;
  s.states = get_field_or<std::size_t>(j, "states", s.states, ctx);
  s.seed = get_field_or<std::uint64_t>(j, "seed", s.seed, ctx);
  s.downsample = get_field_or<std::size_t>(j, "downsample", s.downsample, ctx);
  s.mirror = get_field_or<bool>(j, "mirror", s.mirror, ctx);
  s.exclude_ties = get_field_or<bool>(j, "exclude_ties", s.exclude_ties, ctx);
  s.optimal_pairs_only =
      get_field_or<bool>(j, "optimal_pairs_only", s.optimal_pairs_only, ctx);
  s.max_episode_steps =
      get_field_or<int>(j, "max_episode_steps", s.max_episode_steps, ctx);
  s.history_keep = get_field_or<int>(j, "history_keep", s.history_keep, ctx);
  if ((s.mirror || s.optimal_pairs_only) && s.kind != FeedbackKind::Preference) {
    throw ConfigError(ctx + ": mirror/optimal_pairs_only need preference");
  }
  if (s.policy != SamplingPolicyKind::Exhaustive && s.states == 0) {
    throw ConfigError(ctx + ": states must be positive");
  }
  if (s.max_episode_steps < 1 || s.history_keep < 0) {
    throw ConfigError(ctx + ": invalid episode or history length");
  }
  return s;
}

json DatasetSpec::to_json() const {
  return json{{"domain", domain},
              {"kind", fbh::to_string(kind)},
              {"policy", fbh::to_string(policy)},
              {"states", states},
              {"seed", seed},
              {"downsample", downsample},
              {"mirror", mirror},
              {"exclude_ties", exclude_ties},
              {"optimal_pairs_only", optimal_pairs_only},
              {"max_episode_steps", max_episode_steps},
              {"history_keep", history_keep}};
}

std::string DatasetSpec::stem() const {
  std::string s = domain + "__" + std::string(fbh::to_string(kind)) + "__" +
                  std::string(fbh::to_string(policy));
  if (mirror) s += "__mirror";
  return s;
}

namespace {

bool usable(const OracleTables& t, int id) {
  return !t.graph().terminal[id] && t.distance(id) != OracleTables::kUnsolvable;
}

std::vector<SampledState> enumerate_all(const OracleTables& t,
                                        const DatasetSpec& spec) {
  const auto& g = t.graph();
  // Discovery parents give a start-rooted path to every state.
  std::vector<std::pair<int, int>> parent(g.size(), {-1, -1});
  std::vector<char> seen(g.size(), 0);
  const std::size_t roots = t.env().initial_states().size();
  for (std::size_t i = 0; i < roots && i < g.size(); ++i) seen[i] = 1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
      const int target = g.edge_target[e];
      if (!seen[target]) {
        seen[target] = 1;
        parent[target] = {static_cast<int>(i), g.edge_action[e]};
      }
    }
  }
  std::vector<SampledState> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!usable(t, static_cast<int>(i))) continue;
    SampledState s{g.states[i], {}, -1, 0};
    int cur = static_cast<int>(i);
    while (parent[cur].first >= 0) {
      ++s.step;
      if (static_cast<int>(s.history.size()) < spec.history_keep) {
        s.history.emplace_back(g.states[parent[cur].first], parent[cur].second);
      }
      cur = parent[cur].first;
    }
    std::reverse(s.history.begin(), s.history.end());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<SampledState> sample_states(const OracleTables& t,
                                        const DatasetSpec& spec) {
  if (spec.policy == SamplingPolicyKind::Exhaustive) {
    return enumerate_all(t, spec);
  }
  const Environment& env = t.env();
  const auto starts = env.initial_states();
  Rng rng(derive_seed(spec.seed, "sample/" + spec.domain));
  std::vector<SampledState> out;
  std::unordered_set<State, StateHash> seen;
  const std::size_t episodes = 10 * spec.states + 100;
  for (std::size_t ep = 0; ep < episodes && out.size() < spec.states; ++ep) {
    State s = starts[uniform_index(rng, starts.size())];
    std::vector<std::pair<State, int>> trail;
    for (int step = 0; out.size() < spec.states; ++step) {
      const int id = t.id(s);
      if (t.graph().terminal[id]) break;
      if (usable(t, id) && seen.insert(s).second) {
        SampledState rec{s, {}, static_cast<int>(ep), step};
        const std::size_t keep =
            std::min(trail.size(), static_cast<std::size_t>(spec.history_keep));
        rec.history.assign(trail.end() - keep, trail.end());
        out.push_back(std::move(rec));
      }
      if (step >= spec.max_episode_steps) break;
      bool expert = spec.policy == SamplingPolicyKind::Expert;
      if (spec.policy == SamplingPolicyKind::HalfExpert) {
        expert = bernoulli(rng, 0.5);
      }
      int action;
      const auto opt = t.optimal_actions(s);
      if (expert && !opt.empty()) {
        action = opt[uniform_index(rng, opt.size())];
      } else {
        const auto legal = env.legal_actions_unchecked(s);
        action = legal[uniform_index(rng, legal.size())];
      }
      trail.emplace_back(s, action);
      s = env.transition_unchecked(s, action).next;
    }
  }
  return out;
}

State snapshot_state(const Environment& env, const Snapshot& s) {
  return env.decode(s.state);
}

int action_id(const Environment& env, const std::string& name) {
  auto a = env.find_action(name);
  if (!a) throw IllegalAction(env.name() + ": unknown action '" + name + "'");
  return *a;
}

Label derive_label(const OracleTables& t, const Snapshot& snap) {
  const Environment& env = t.env();
  const State s = snapshot_state(env, snap);
  Label l;
  l.kind = snap.kind;
  switch (snap.kind) {
    case FeedbackKind::Binary:
      l.sign = gt_binary(t, s, action_id(env, snap.action.value()));
      break;
    case FeedbackKind::Preference:
      l.sign = gt_preference(t, s, action_id(env, snap.action_pair->first),
                             action_id(env, snap.action_pair->second));
      break;
    case FeedbackKind::Action:
      for (int a : gt_action(t, s)) l.optimal.push_back(env.action_name(a));
      break;
    case FeedbackKind::Goal:
      for (const State& next : gt_goal(t, s)) {
        auto c = env.coordinates(next);
        if (!c) throw ConfigError(env.name() + " has no goal coordinates");
        l.optimal_next.push_back(*c);
      }
      break;
    case FeedbackKind::Delta: {
      const auto* gripper = dynamic_cast<const GripperLift*>(&env);
      if (!gripper) throw ConfigError(env.name() + " has no delta feedback");
      const DeltaLabel d =
          gt_delta(*gripper, s, action_id(env, snap.action.value()));
      l.delta = d.delta;
      l.close = d.close;
      l.epsilon = d.epsilon;
      l.expert_action = env.action_name(d.expert_action);
      break;
    }
  }
  return l;
}

BuildResult build(const OracleTables& t, const DatasetSpec& spec) {
  return build(t, spec, sample_states(t, spec));
}

BuildResult build(const OracleTables& t, const DatasetSpec& spec,
                  const std::vector<SampledState>& states) {
  const Environment& env = t.env();
  if (spec.domain != env.name()) {
    throw ConfigError("dataset spec names " + spec.domain + " but tables are " +
                      env.name());
  }
  if (!env.supports(spec.kind)) {
    throw ConfigError(env.name() + " does not support " +
                      std::string(to_string(spec.kind)) + " feedback");
  }
  BuildResult res;
  res.states = states.size();
  // Units of downsampling: one snapshot, or a mirrored pair of two.
  std::vector<std::vector<Snapshot>> units;
  std::int64_t next_pair = 0;

  for (std::size_t si = 0; si < states.size(); ++si) {
    const SampledState& ss = states[si];
    Snapshot base;
    base.domain = env.name();
    base.kind = spec.kind;
    base.policy = spec.policy;
    base.seed = spec.seed;
    base.state = env.encode(ss.state);
    const auto legal = env.legal_actions(ss.state);
    for (int a : legal) base.actions.push_back(env.action_name(a));
    for (const auto& [hs, ha] : ss.history) {
      base.history.push_back({env.encode(hs), env.action_name(ha)});
    }
    base.provenance = {{"state_index", si},
                       {"episode", ss.episode},
                       {"step", ss.step},
                       {"dedup", "first-visit"}};

    auto finish = [&](Snapshot snap) {
      snap.label = derive_label(t, snap);
      return snap;
    };
    switch (spec.kind) {
      case FeedbackKind::Binary:
      case FeedbackKind::Delta:
        for (int a : legal) {
          Snapshot snap = base;
          snap.action = env.action_name(a);
          units.push_back({finish(std::move(snap))});
          ++res.enumerated;
        }
        break;
      case FeedbackKind::Action:
      case FeedbackKind::Goal:
        units.push_back({finish(base)});
        ++res.enumerated;
        break;
      case FeedbackKind::Preference: {
        const auto optimal = t.optimal_actions(ss.state);
        auto is_opt = [&](int a) {
          return std::find(optimal.begin(), optimal.end(), a) != optimal.end();
        };
        for (std::size_t i = 0; i < legal.size(); ++i) {
          for (std::size_t k = i + 1; k < legal.size(); ++k) {
            res.enumerated += 2;
            const int a1 = legal[i], a2 = legal[k];
            const int sign = gt_preference(t, ss.state, a1, a2);
            if (sign == 0 && spec.exclude_ties) {
              res.ties_excluded += 2;
              continue;
            }
            if (spec.optimal_pairs_only && is_opt(a1) == is_opt(a2)) {
              res.filtered += 2;
              continue;
            }
            std::vector<Snapshot> both;
            for (auto [x, y] : {std::pair{a1, a2}, std::pair{a2, a1}}) {
              Snapshot snap = base;
              snap.action_pair = std::pair{env.action_name(x), env.action_name(y)};
              snap.pair_id = next_pair;
              snap = finish(std::move(snap));
              if (snap.label.sign != 0) {
                snap.gt_position = snap.label.sign > 0 ? "first" : "second";
              }
              both.push_back(std::move(snap));
            }
            ++next_pair;
            if (spec.mirror) {
              units.push_back(std::move(both));
            } else {
              units.push_back({std::move(both[0])});
              units.push_back({std::move(both[1])});
            }
          }
        }
        break;
      }
    }
  }

  std::size_t total = 0;
  for (const auto& u : units) total += u.size();
  if (spec.downsample > 0 && total > spec.downsample) {
    const std::size_t per_unit = spec.mirror ? 2 : 1;
    const std::size_t keep = spec.downsample / per_unit;
    std::vector<std::size_t> order(units.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(spec.seed, "downsample/" + spec.stem()));
    shuffle(std::span<std::size_t>(order), rng);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    std::vector<std::vector<Snapshot>> kept;
    kept.reserve(keep);
    for (std::size_t i : order) kept.push_back(std::move(units[i]));
    units = std::move(kept);
  }

  for (auto& u : units) {
    for (auto& snap : u) {
      char idx[32];
      std::snprintf(idx, sizeof idx, "%06zu", res.snapshots.size());
      snap.id = spec.stem() + "/" + std::to_string(spec.seed) + "/" + idx;
      res.snapshots.push_back(std::move(snap));
    }
  }
  if (res.snapshots.empty()) {
    throw ConfigError(spec.stem() + ": dataset is empty (" +
                      std::to_string(res.states) + " states, " +
                      std::to_string(res.ties_excluded) + " tie pairs dropped)");
  }
  return res;
}

}  // namespace fbh
