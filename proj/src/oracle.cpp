#include "fbharness/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fbharness/errors.hpp"
#include "fbharness/gripper_lift.hpp"

namespace fbh {

int StateGraph::find(const State& s) const {
  auto it = index.find(s);
  return it == index.end() ? -1 : it->second;
}

StateGraph explore(const Environment& env,
                   const std::vector<State>& extra_roots) {
  StateGraph g;
  const std::size_t bound = env.params().state_bound;
  auto intern = [&](const State& s) {
    auto [it, inserted] = g.index.try_emplace(s, static_cast<int>(g.size()));
    if (inserted) {
      if (g.size() >= bound) {
        throw BoundExceeded(env.name() + ": state space exceeds the bound of " +
                                std::to_string(bound) + " states",
                            g.size() + 1);
      }
      g.states.push_back(s);
    }
    return it->second;
  };
  for (const auto& s : env.initial_states()) intern(s);
  for (const auto& s : extra_roots) {
    env.validate(s);
    intern(s);
  }
  g.offset.push_back(0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    // states may reallocate while interning, so copy the current state
    const State s = g.states[i];
    const bool term = env.is_terminal(s);
    g.terminal.push_back(term ? 1 : 0);
    if (!term) {
      for (int a : env.legal_actions_unchecked(s)) {
        int target = intern(env.transition_unchecked(s, a).next);
        g.edge_action.push_back(a);
        g.edge_target.push_back(target);
      }
    }
    g.offset.push_back(g.edge_action.size());
  }
  return g;
}

OracleTables::OracleTables(std::shared_ptr<const Environment> env,
                           StateGraph graph, std::vector<int> distance)
    : env_(std::move(env)),
      graph_(std::move(graph)),
      distance_(std::move(distance)) {}

int OracleTables::id(const State& s) const {
  int i = graph_.find(s);
  if (i < 0) {
    env_->validate(s);
    throw InvalidState(env_->name() + ": state " + env_->encode(s).dump() +
                       " is not in the solved state space");
  }
  return i;
}

double OracleTables::value_of(int d) const {
  if (d == kUnsolvable) return -std::numeric_limits<double>::infinity();
  const auto& p = env_->params();
  if (p.discount == 1.0) return p.step_reward * d;
  return p.step_reward * (1.0 - std::pow(p.discount, d)) / (1.0 - p.discount);
}

std::vector<std::pair<int, int>> OracleTables::edges(int i) const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t e = graph_.offset[i]; e < graph_.offset[i + 1]; ++e) {
    out.emplace_back(graph_.edge_action[e], graph_.edge_target[e]);
  }
  return out;
}

double OracleTables::q(const State& s, int action) const {
  const int i = id(s);
  if (graph_.terminal[i]) {
    throw IllegalAction(env_->name() + ": terminal states have no actions");
  }
  for (auto [a, target] : edges(i)) {
    if (a == action) {
      const auto& p = env_->params();
      const double next = value_of(distance_[target]);
      return p.step_reward + p.discount * next;
    }
  }
  env_->transition(s, action);  // throws IllegalAction naming the legal set
  throw IllegalAction(env_->name() + ": action not in the solved graph");
}

std::vector<int> OracleTables::optimal_actions(const State& s) const {
  const int i = id(s);
  std::vector<int> out;
  if (graph_.terminal[i] || distance_[i] == kUnsolvable) return out;
  for (auto [a, target] : edges(i)) {
    if (distance_[target] == distance_[i] - 1) out.push_back(a);
  }
  return out;
}

std::size_t OracleTables::solvable_nonterminal_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    n += !graph_.terminal[i] && distance_[i] != kUnsolvable;
  }
  return n;
}

int OracleTables::max_distance() const {
  int m = 0;
  for (int d : distance_) {
    if (d != kUnsolvable) m = std::max(m, d);
  }
  return m;
}

void OracleTables::dump_jsonl(std::ostream& out) const {
  for (std::size_t i = 0; i < size(); ++i) {
    const State& s = graph_.states[i];
    json line;
    line["state"] = env_->encode(s);
    const int d = distance_[i];
    line["d"] = d == kUnsolvable ? json(nullptr) : json(d);
    line["v"] = d == kUnsolvable ? json(nullptr) : json(value_of(d));
    json optimal = json::array();
    for (int a : optimal_actions(s)) optimal.push_back(env_->action_name(a));
    line["optimal"] = std::move(optimal);
    json qs = json::object();
    if (!graph_.terminal[i]) {
      for (auto [a, target] : edges(static_cast<int>(i))) {
        const int dn = distance_[target];
        qs[env_->action_name(a)] =
            dn == kUnsolvable
                ? json(nullptr)
                : json(env_->params().step_reward +
                       env_->params().discount * value_of(dn));
      }
    }
    line["q"] = std::move(qs);
    out << line.dump() << '\n';
  }
}

OracleTables solve(std::shared_ptr<const Environment> env,
                   const std::vector<State>& extra_roots) {
  StateGraph g = explore(*env, extra_roots);
  const std::size_t n = g.size();
  // Reverse adjacency in CSR form.
  std::vector<std::size_t> rev_offset(n + 1, 0);
  for (int t : g.edge_target) ++rev_offset[t + 1];
  for (std::size_t i = 0; i < n; ++i) rev_offset[i + 1] += rev_offset[i];
  std::vector<int> rev(g.edge_target.size());
  {
    std::vector<std::size_t> fill(rev_offset.begin(), rev_offset.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
        rev[fill[g.edge_target[e]]++] = static_cast<int>(i);
      }
    }
  }
  std::vector<int> dist(n, OracleTables::kUnsolvable);
  std::deque<int> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.terminal[i]) {
      dist[i] = 0;
      queue.push_back(static_cast<int>(i));
    }
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (std::size_t e = rev_offset[v]; e < rev_offset[v + 1]; ++e) {
      const int u = rev[e];
      if (dist[u] == OracleTables::kUnsolvable) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return OracleTables(std::move(env), std::move(g), std::move(dist));
}

ValueIterationResult value_iteration(const Environment& env,
                                     const StateGraph& g, double tolerance,
                                     int max_iterations) {
  const auto& p = env.params();
  const double r = p.step_reward;
  const double gamma = p.discount;
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = g.size();
  ValueIterationResult res;
  std::vector<double> v(n, 0.0), next(n, 0.0);
  std::vector<char> live(n, 0);  // non-terminal and not yet declared stuck
  for (std::size_t i = 0; i < n; ++i) live[i] = !g.terminal[i];
  std::size_t previous_changing = n + 1;
  for (;;) {
    if (res.iterations >= max_iterations) {
      throw Error(env.name() + ": value iteration did not converge");
    }
    ++res.iterations;
    double change = 0.0;
    std::size_t changing = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) {
        next[i] = v[i];
        continue;
      }
      double best = -inf;
      for (std::size_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
        best = std::max(best, r + gamma * v[g.edge_target[e]]);
      }
      next[i] = best;
      const double delta = std::abs(best - v[i]);
      if (delta > tolerance) ++changing;
      change = std::max(change, delta);
    }
    v.swap(next);
    if (change < tolerance) break;
    if (gamma == 1.0 && changing == previous_changing) {
      // With unit costs every solvable state settles one iteration after
      // its distance is reached, and distances form a contiguous range. A
      // round in which nothing settles means the rest can never settle.
      for (std::size_t i = 0; i < n; ++i) {
        if (live[i] && std::abs(v[i] - next[i]) > tolerance) {
          v[i] = -inf;
          live[i] = 0;
        }
      }
      break;
    }
    previous_changing = changing;
  }
  res.value = v;
  res.distance.assign(n, OracleTables::kUnsolvable);
  res.optimal.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (v[i] == -inf) continue;
    double d;
    if (gamma == 1.0) {
      d = v[i] / r;
    } else {
      d = std::log(1.0 - v[i] * (1.0 - gamma) / r) / std::log(gamma);
    }
    res.distance[i] = static_cast<int>(std::lround(d));
    if (g.terminal[i]) continue;
    for (std::size_t e = g.offset[i]; e < g.offset[i + 1]; ++e) {
      const double qv = r + gamma * v[g.edge_target[e]];
      if (std::abs(qv - v[i]) <= 1e-6) res.optimal[i].push_back(g.edge_action[e]);
    }
  }
  return res;
}

namespace {

int checked_nonterminal(const OracleTables& t, const State& s) {
  const int i = t.id(s);
  if (t.graph().terminal[i]) {
    throw InvalidState(t.env().name() + ": no feedback for terminal states");
  }
  return i;
}

void require_legal(const OracleTables& t, const State& s, int action) {
  const auto legal = t.env().legal_actions(s);
  if (!std::binary_search(legal.begin(), legal.end(), action)) {
    t.env().transition(s, action);  // throws with the legal set
  }
}

int checked_solvable(const OracleTables& t, const State& s) {
  const int i = checked_nonterminal(t, s);
  if (t.distance(i) == OracleTables::kUnsolvable) {
    throw Unsolvable(t.env().name() + ": goal unreachable from " +
                     t.env().encode(s).dump());
  }
  return i;
}

}  // namespace

int gt_binary(const OracleTables& t, const State& s, int action) {
  checked_nonterminal(t, s);
  require_legal(t, s, action);
  const auto opt = t.optimal_actions(s);
  return std::find(opt.begin(), opt.end(), action) != opt.end() ? 1 : -1;
}

std::vector<int> gt_action(const OracleTables& t, const State& s) {
  checked_solvable(t, s);
  return t.optimal_actions(s);
}

int gt_preference(const OracleTables& t, const State& s, int a1, int a2) {
  checked_nonterminal(t, s);
  require_legal(t, s, a1);
  require_legal(t, s, a2);
  const double q1 = t.q(s, a1), q2 = t.q(s, a2);
  if (q1 == q2) return 0;
  return q1 > q2 ? 1 : -1;
}

std::vector<State> gt_goal(const OracleTables& t, const State& s) {
  const int i = checked_solvable(t, s);
  int best = OracleTables::kUnsolvable;
  for (auto [a, target] : t.edges(i)) best = std::min(best, t.distance(target));
  std::vector<State> out;
  for (auto [a, target] : t.edges(i)) {
    if (t.distance(target) != best) continue;
    const State& next = t.graph().states[target];
    if (std::find(out.begin(), out.end(), next) == out.end()) {
      out.push_back(next);
    }
  }
  return out;
}

DeltaLabel gt_delta(const GripperLift& env, const State& s, int action,
                    double epsilon) {
  env.validate(s);
  if (env.is_terminal(s)) {
    throw InvalidState(env.name() + ": no feedback for terminal states");
  }
  DeltaLabel label;
  label.expert_action = env.scripted_expert(s);
  const auto expert = env.action_vector(label.expert_action);
  const auto taken = env.action_vector(action);
  for (int k = 0; k < 3; ++k) label.delta[k] = expert[k] - taken[k];
  label.close = expert[3] < 0;
  label.epsilon = epsilon;
  return label;
}

bool delta_accepts(const DeltaLabel& label, const std::array<double, 3>& delta,
                   bool close) {
  if (close != label.close) return false;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(delta[k] - label.delta[k]) > label.epsilon + 1e-9) return false;
  }
  return true;
}

}  // namespace fbh
