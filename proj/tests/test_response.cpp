#include <gtest/gtest.h>

#include <map>

#include "fbharness/dataset.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/response.hpp"
#include "test_support.hpp"

namespace fbh {
namespace {

const OracleTables& tables(const std::string& domain) {
  static std::map<std::string, OracleTables> cache;
  auto it = cache.find(domain);
  if (it == cache.end()) {
    it = cache.emplace(domain, solve(shared_environment(domain))).first;
  }
  return it->second;
}

Snapshot golden(const std::string& name) {
  const json side = json::parse(
      testing::slurp(testing::data_dir() / "golden" / (name + ".json")));
  return testing::sidecar_snapshot(
      side, tables(side.at("domain").get<std::string>()));
}

Score run(const Snapshot& s, const std::string& raw) {
  const auto& t = tables(s.domain);
  return score(parse_feedback(s.kind, raw, s, t.env()), s);
}

TEST(Response, ExtractsLastJsonObject) {
  auto j = last_json_object(
      "think {\"a\": 1} more {\"reasoning\": \"x {y}\", \"feedback\": \"YES\"} end");
  ASSERT_TRUE(j);
  EXPECT_EQ((*j)["feedback"], "YES");
  EXPECT_FALSE(last_json_object("no json here"));
  EXPECT_FALSE(last_json_object("{broken"));
}

TEST(Response, Binary) {
  const Snapshot s = golden("cliffwalking__binary");  // (0,4) DOWN, optimal
  EXPECT_TRUE(run(s, R"({"reasoning": "r", "feedback": "YES"})").correct);
  EXPECT_TRUE(run(s, R"({"reasoning": "r", "feedback": " yes "})").correct);
  EXPECT_FALSE(run(s, R"({"reasoning": "r", "feedback": "NO"})").correct);
  auto both = run(s, R"({"reasoning": "r", "feedback": "BOTH"})");
  EXPECT_EQ(both.error, ErrorClass::IllegalValue);
  EXPECT_FALSE(both.correct);
  EXPECT_EQ(run(s, "I think yes.").error, ErrorClass::Format);
  EXPECT_EQ(run(s, R"({"reasoning": "r"})").error, ErrorClass::Format);
  EXPECT_EQ(run(s, R"({"reasoning": "r", "feedback": 1})").error,
            ErrorClass::IllegalValue);
}

TEST(Response, ActionMembership) {
  const Snapshot s = golden("cliffwalking__action");  // (3,0): UP
  EXPECT_TRUE(run(s, R"({"reasoning": "", "action": "UP"})").correct);
  EXPECT_FALSE(run(s, R"({"reasoning": "", "action": "RIGHT"})").correct);
  EXPECT_EQ(run(s, R"({"reasoning": "", "action": "JUMP"})").error,
            ErrorClass::IllegalValue);
}

TEST(Response, Preference) {
  // DOWN and RIGHT tie at (0,4); the DoorKey pair does not.
  EXPECT_EQ(golden("cliffwalking__preference").label.sign, 0);
  const Snapshot s = golden("doorkey__preference");
  ASSERT_NE(s.label.sign, 0);
  const std::string want = s.label.sign > 0 ? "FIRST" : "SECOND";
  const std::string other = s.label.sign > 0 ? "SECOND" : "FIRST";
  EXPECT_TRUE(run(s, R"({"reasoning": "", "preference": ")" + want + "\"}").correct);
  EXPECT_FALSE(run(s, R"({"reasoning": "", "preference": ")" + other + "\"}").correct);
  EXPECT_EQ(run(s, R"({"reasoning": "", "preference": "NEITHER"})").error,
            ErrorClass::IllegalValue);
}

TEST(Response, GoalCoordinates) {
  const Snapshot s = golden("cliffwalking__goal");  // (3,0) -> (2,0)
  EXPECT_TRUE(run(s, R"({"reasoning": "", "row": 2, "column": 0})").correct);
  EXPECT_TRUE(run(s, R"({"reasoning": "", "row": "2", "column": "0"})").correct);
  EXPECT_FALSE(run(s, R"({"reasoning": "", "row": 3, "column": 1})").correct);
  EXPECT_EQ(run(s, R"({"reasoning": "", "row": "3", "column": "11"})").correct, false);
  EXPECT_EQ(run(s, R"({"reasoning": "", "row": 4, "column": 0})").error,
            ErrorClass::IllegalValue);
  EXPECT_EQ(run(s, R"({"reasoning": "", "row": 2})").error, ErrorClass::Format);
  EXPECT_EQ(run(s, R"({"reasoning": "", "row": "two", "column": 0})").error,
            ErrorClass::IllegalValue);
}

TEST(Response, DeltaIndex) {
  const Snapshot s = golden("gripperlift__delta");
  const auto& t = tables("gripperlift");
  const auto& env = dynamic_cast<const GripperLift&>(t.env());
  const int expert = action_id(env, s.label.expert_action);
  auto answer = [](int i) {
    return R"({"reasoning": "", "index": )" + std::to_string(i) + "}";
  };
  EXPECT_TRUE(run(s, answer(expert)).correct);
  // Moving 0.28 along x when the expert stays put on x is rejected.
  int wrong = 0;
  for (int a = 0; a < GripperLift::kNumActions; ++a) {
    const auto p = parse_feedback(s.kind, answer(a), s, env);
    ASSERT_TRUE(p.ok());
    const bool ok = score(p, s).correct;
    wrong += !ok;
    const auto v = env.action_vector(a);
    const auto taken = env.action_vector(action_id(env, *s.action));
    bool within = (v[3] < 0) == s.label.close;
    for (int k = 0; k < 3; ++k)
      within = within && std::abs((v[k] - taken[k]) - s.label.delta[k]) <= 0.28 + 1e-9;
    EXPECT_EQ(ok, within) << a;
  }
  EXPECT_GT(wrong, 0);
  EXPECT_EQ(run(s, answer(14)).error, ErrorClass::IllegalValue);
  EXPECT_EQ(run(s, R"({"reasoning": ""})").error, ErrorClass::Format);
}

TEST(Response, OracleAnswerScoresCorrectEverywhere) {
  for (const auto& name :
       {"cliffwalking__binary", "cliffwalking__action", "cliffwalking__goal",
        "doorkey__preference", "doorkey__binary", "fourrooms__preference",
        "craftworld__action", "gripperlift__delta", "gripperlift__binary"}) {
    const Snapshot s = golden(name);
    EXPECT_TRUE(run(s, oracle_answer(s, "because")).correct) << name;
  }
}

TEST(Response, NormalizeSpace) {
  EXPECT_EQ(normalize_space("  move   right,\topen\n gripper "),
            "move right, open gripper");
  EXPECT_EQ(normalize_space(""), "");
}

}  // namespace
}  // namespace fbh
