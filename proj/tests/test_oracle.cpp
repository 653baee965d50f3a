#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "fbharness/cliff_walking.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/grid_world.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/oracle.hpp"
#include "fbharness/registry.hpp"
#include "fbharness/rng.hpp"

namespace fbh {
namespace {

// Hand-written cliff model, sharing nothing with the library: forward BFS
// from every cell with the reset-to-start rule applied inline.
struct CliffReference {
  static constexpr int R = 4, C = 12;
  std::map<std::pair<int, int>, int> dist;

  static std::pair<int, int> move(int r, int c, int a) {
    static const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
    int nr = std::clamp(r + dr[a], 0, R - 1);
    int nc = std::clamp(c + dc[a], 0, C - 1);
    if (nr == 3 && nc > 0 && nc < 11) return {3, 0};
    return {nr, nc};
  }

  CliffReference() {
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) {
        if (r == 3 && c > 0 && c < 11) continue;
        std::map<std::pair<int, int>, int> seen{{{r, c}, 0}};
        std::deque<std::pair<int, int>> q{{r, c}};
        int found = -1;
        while (!q.empty() && found < 0) {
          auto cur = q.front();
          q.pop_front();
          if (cur == std::pair{3, 11}) {
            found = seen[cur];
            break;
          }
          for (int a = 0; a < 4; ++a) {
            auto nxt = move(cur.first, cur.second, a);
            if (seen.emplace(nxt, seen[cur] + 1).second) q.push_back(nxt);
          }
        }
        dist[{r, c}] = found;
      }
  }
};

std::shared_ptr<const Environment> cliff() {
  return shared_environment("cliffwalking");
}

TEST(Oracle, CliffDistancesMatchReferenceModel) {
  const CliffReference ref;
  const OracleTables t = solve(cliff());
  for (const auto& [cell, d] : ref.dist) {
    EXPECT_EQ(t.distance(CliffState{cell.first, cell.second}), d)
        << cell.first << "," << cell.second;
  }
  EXPECT_EQ(t.size(), 38u);
}

TEST(Oracle, CliffFrozenValues) {
  const OracleTables t = solve(cliff());
  EXPECT_EQ(t.distance(CliffState{3, 0}), 13);
  EXPECT_EQ(t.distance(CliffState{2, 0}), 12);
  EXPECT_DOUBLE_EQ(t.value(CliffState{2, 11}), -1.0);
  EXPECT_DOUBLE_EQ(t.value(CliffState{3, 11}), 0.0);
  EXPECT_EQ(t.max_distance(), 14);
  EXPECT_EQ(t.solvable_nonterminal_count(), 37u);
  // Q of stepping into the cliff from (2,5): back to the start.
  EXPECT_DOUBLE_EQ(t.q(CliffState{2, 5}, CliffWalking::Down), -14.0);
}

TEST(Oracle, CliffOptimalActionSets) {
  const OracleTables t = solve(cliff());
  using A = CliffWalking::Action;
  EXPECT_EQ(gt_action(t, CliffState{2, 5}), (std::vector<int>{A::Right}));
  EXPECT_EQ(gt_action(t, CliffState{1, 5}), (std::vector<int>{A::Down, A::Right}));
  EXPECT_EQ(gt_action(t, CliffState{3, 0}), (std::vector<int>{A::Up}));
  EXPECT_EQ(gt_action(t, CliffState{2, 11}), (std::vector<int>{A::Down}));
  EXPECT_EQ(gt_binary(t, CliffState{2, 5}, A::Down), -1);
  EXPECT_EQ(gt_preference(t, CliffState{1, 5}, A::Down, A::Right), 0);
  EXPECT_EQ(gt_preference(t, CliffState{1, 5}, A::Up, A::Right), -1);
  const auto goal = gt_goal(t, CliffState{3, 0});
  ASSERT_EQ(goal.size(), 1u);
  EXPECT_EQ(goal.front(), (State{CliffState{2, 0}}));
}

TEST(Oracle, RejectsTerminalAndForeignStates) {
  const OracleTables t = solve(cliff());
  EXPECT_THROW(gt_action(t, CliffState{3, 11}), Error);
  EXPECT_THROW(t.id(CliffState{3, 5}), InvalidState);
}

class ValueIterationAgrees : public ::testing::TestWithParam<std::string> {};

TEST_P(ValueIterationAgrees, OnEveryState) {
  auto env = shared_environment(GetParam());
  const OracleTables t = solve(env);
  const auto vi = value_iteration(*env, t.graph());
  for (std::size_t i = 0; i < t.size(); ++i) {
    ASSERT_EQ(vi.distance[i], t.distance(static_cast<int>(i))) << i;
    if (!t.graph().terminal[i] && t.distance(static_cast<int>(i)) != OracleTables::kUnsolvable) {
      ASSERT_EQ(vi.optimal[i], t.optimal_actions(t.graph().states[i])) << i;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(SmallDomains, ValueIterationAgrees,
                         ::testing::Values("cliffwalking", "doorkey-5x5",
                                           "fourrooms"));

TEST(Oracle, FrozenDomainSizes) {
  const std::map<std::string, std::size_t> sizes = {
      {"cliffwalking", 38}, {"doorkey-5x5", 45}, {"fourrooms", 1039},
      {"craftworld", 71360}, {"gripperlift", 92016}};
  for (const auto& [name, n] : sizes) {
    EXPECT_EQ(solve(shared_environment(name)).size(), n) << name;
  }
  const OracleTables dk = solve(shared_environment("doorkey-5x5"));
  EXPECT_EQ(dk.distance(dk.env().initial_states().front()), 7);
  const OracleTables fr = solve(shared_environment("fourrooms"));
  EXPECT_EQ(fr.distance(fr.env().initial_states().front()), 32);
  const OracleTables cw = solve(shared_environment("craftworld"));
  EXPECT_EQ(cw.distance(cw.env().initial_states().front()), 22);
}

// Bellman optimality on seeded random states from every domain.
TEST(OracleProperties, BellmanConsistency) {
  int cases = 0;
  for (const auto& name : {"cliffwalking", "doorkey-5x5", "fourrooms",
                           "craftworld", "gripperlift"}) {
    const OracleTables t = solve(shared_environment(name));
    const Environment& env = t.env();
    Rng rng(derive_seed(7, name));
    for (int k = 0; k < 400; ++k) {
      const State& s = t.graph().states[uniform_index(rng, t.size())];
      if (t.terminal(s) || !t.solvable(s)) continue;
      ++cases;
      int best = OracleTables::kUnsolvable;
      std::vector<int> argmin;
      for (int a : env.legal_actions(s)) {
        const int d = t.distance(env.step(s, a));
        ASSERT_DOUBLE_EQ(t.q(s, a), -1.0 + t.value_of(d));
        if (d < best) {
          best = d;
          argmin = {a};
        } else if (d == best) {
          argmin.push_back(a);
        }
      }
      ASSERT_EQ(t.distance(s), best + 1) << name;
      ASSERT_EQ(gt_action(t, s), argmin) << name;
      for (int a : env.legal_actions(s)) {
        const bool opt = std::count(argmin.begin(), argmin.end(), a) > 0;
        ASSERT_EQ(gt_binary(t, s, a), opt ? 1 : -1);
        for (int b : env.legal_actions(s)) {
          ASSERT_EQ(gt_preference(t, s, a, b), -gt_preference(t, s, b, a));
        }
      }
    }
  }
  EXPECT_GE(cases, 1000);
}

TEST(OracleProperties, GoalSetIsBestSuccessors) {
  const OracleTables t = solve(cliff());
  const Environment& env = t.env();
  for (const State& s : t.graph().states) {
    if (t.terminal(s)) continue;
    const auto goal = gt_goal(t, s);
    ASSERT_FALSE(goal.empty());
    for (const State& g : goal) EXPECT_EQ(t.distance(g), t.distance(s) - 1);
    std::size_t best = 0;
    std::vector<State> seen;
    for (int a : env.legal_actions(s)) {
      const State n = env.step(s, a);
      if (t.distance(n) == t.distance(s) - 1 &&
          std::find(seen.begin(), seen.end(), n) == seen.end()) {
        seen.push_back(n);
        ++best;
      }
    }
    EXPECT_EQ(goal.size(), best);
  }
}

TEST(Delta, AcceptsExpertRejectsDeviations) {
  auto env = std::static_pointer_cast<const GripperLift>(
      shared_environment("gripperlift"));
  Rng rng(3);
  const auto starts = env->initial_states();
  int cases = 0;
  for (int k = 0; k < 1000; ++k) {
    const State& s = starts[uniform_index(rng, starts.size())];
    const int a = static_cast<int>(uniform_index(rng, GripperLift::kNumActions));
    const DeltaLabel label = gt_delta(*env, s, a);
    EXPECT_EQ(label.expert_action, env->scripted_expert(s));
    const auto taken = env->action_vector(a);
    const auto expert = env->action_vector(label.expert_action);
    for (int i = 0; i < 3; ++i)
      EXPECT_NEAR(label.delta[i], expert[i] - taken[i], 1e-12);
    EXPECT_TRUE(delta_accepts(label, label.delta, label.close));
    EXPECT_FALSE(delta_accepts(label, label.delta, !label.close));
    for (int axis = 0; axis < 3; ++axis) {
      auto d = label.delta;
      d[axis] += 0.2801;
      EXPECT_FALSE(delta_accepts(label, d, label.close));
      d[axis] -= 2 * 0.2801;
      EXPECT_FALSE(delta_accepts(label, d, label.close));
      d = label.delta;
      d[axis] += 0.28;
      EXPECT_TRUE(delta_accepts(label, d, label.close));
    }
    ++cases;
  }
  EXPECT_EQ(cases, 1000);
}

TEST(Explore, BoundIsEnforced) {
  auto base = make_environment("fourrooms");
  const auto& fr = dynamic_cast<const GridWorld&>(*base);
  MdpParams params;
  params.state_bound = 100;
  auto small = std::make_shared<const GridWorld>(
      "fourrooms", GridWorld::Variant::FourRooms, fr.layouts(), params);
  try {
    solve(small);
    FAIL() << "expected BoundExceeded";
  } catch (const BoundExceeded& e) {
    EXPECT_GT(e.count(), 100u);
  }
}

}  // namespace
}  // namespace fbh
