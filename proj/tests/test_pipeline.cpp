#include <gtest/gtest.h>

#include <map>

#include "fbharness/errors.hpp"
#include "fbharness/pipeline.hpp"
#include "test_support.hpp"

namespace fbh {
namespace {

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      out[fs::relative(e.path(), root).string()] = testing::slurp(e.path());
    }
  }
  return out;
}

RunConfig small_config(const fs::path& dir) {
  RunConfig c = RunConfig::from_json(json::parse(R"({
    "seed": 3,
    "datasets": [
      {"domain": "cliffwalking", "kinds": ["binary", "goal"], "downsample": 0},
      {"domain": "doorkey-5x5", "kind": "preference", "policy": "random",
       "states": 15, "mirror": true, "downsample": 60}
    ],
    "conditions": [{}, {"dynamics": "full"}],
    "models": [{"type": "oracle"}, {"type": "noisy", "p": 0.3, "seed": 2}]
  })"));
  c.output_dir = dir;
  return c;
}

TEST(RunConfig, ExpandsAndInherits) {
  const RunConfig c = small_config("x");
  ASSERT_EQ(c.datasets.size(), 3u);
  EXPECT_EQ(c.datasets[0].kind, FeedbackKind::Binary);
  EXPECT_EQ(c.datasets[1].kind, FeedbackKind::Goal);
  EXPECT_EQ(c.datasets[2].seed, 3u);
  EXPECT_EQ(c.conditions.size(), 2u);
  EXPECT_EQ(RunConfig::from_json(c.to_json()).to_json(), c.to_json());
}

TEST(RunConfig, Validation) {
  auto bad = [](const char* text) {
    EXPECT_THROW(RunConfig::from_json(json::parse(text)), ConfigError) << text;
  };
  bad(R"({"datasets": [{"domain": "cliffwalking", "kind": "binary"}], "colour": 1})");
  bad(R"({"datasets": []})");
  bad(R"({"datasets": [{"domain": "cliffwalking", "kind": "binary"},
                       {"domain": "cliffwalking", "kind": "binary"}]})");
  bad(R"({"datasets": [{"domain": "cliffwalking", "kind": "binary"}],
          "models": [{"type": "noisy", "p": 2}]})");
  bad(R"({"datasets": [{"domain": "cliffwalking", "kind": "binary"}],
          "conditions": [{}, {}]})");
  bad(R"({"datasets": [{"domain": "cliffwalking", "kind": "binary",
                        "kinds": ["goal"]}]})");
  bad(R"({"datasets": [{"domain": "cliffwalking", "kind": "binary"}],
          "concurrency": 0})");
}

TEST(Pipeline, SolveSummary) {
  const auto dir = testing::scratch("solve");
  const SolveSummary s = cmd_solve("cliffwalking", dir);
  EXPECT_EQ(s.states, 38u);
  EXPECT_EQ(s.terminal, 1u);
  EXPECT_EQ(s.solvable_nonterminal, 37u);
  EXPECT_EQ(s.max_distance, 14);
  const std::string tables = testing::slurp(dir / "cliffwalking.tables.jsonl");
  EXPECT_EQ(std::count(tables.begin(), tables.end(), '\n'), 38);
  EXPECT_THROW(cmd_solve("nowhere"), ConfigError);
}

TEST(Pipeline, EndToEndIsDeterministic) {
  const auto a = testing::scratch("pipe_a");
  const auto b = testing::scratch("pipe_b");
  RunConfig ca = small_config(a), cb = small_config(b);
  cb.concurrency = 1;
  ca.concurrency = 3;
  for (const RunConfig* c : {&ca, &cb}) {
    const json manifest = cmd_gen(*c);
    EXPECT_EQ(manifest["datasets"].size(), 3u);
    const auto runs = cmd_eval(*c);
    EXPECT_EQ(runs.size(), 12u);
    for (const auto& r : runs) {
      EXPECT_TRUE(r.skipped.empty()) << r.skipped;
      EXPECT_TRUE(r.summary.complete);
    }
    cmd_report(c->output_dir);
  }
  EXPECT_EQ(tree(a), tree(b));

  const Report rep = Report::from_json(
      json::parse(testing::slurp(a / "reports" / "report.json")));
  EXPECT_EQ(rep.cells.size(), 12u);
  for (const Cell& c : rep.cells) {
    if (c.key.model == "oracle") EXPECT_DOUBLE_EQ(c.accuracy, 1.0);
    if (c.key.domain == "cliffwalking" && c.key.kind == FeedbackKind::Binary) {
      EXPECT_EQ(c.n, 148u);
    }
    if (c.key.kind == FeedbackKind::Preference) EXPECT_EQ(c.n, 60u);
  }
  EXPECT_TRUE(fs::exists(a / "reports" / "diff__dyn-full.json") ||
              fs::exists(a / "reports" / "diff.json"));
}

TEST(Pipeline, ResumeProducesIdenticalOutput) {
  const auto full = testing::scratch("resume_full");
  const auto part = testing::scratch("resume_part");
  RunConfig cf = small_config(full), cp = small_config(part);
  cmd_gen(cf);
  cmd_eval(cf);
  cmd_gen(cp);
  EvalOptions stop;
  stop.stop_after = 250;
  auto first = cmd_eval(cp, stop);
  bool any_incomplete = false;
  for (const auto& r : first) any_incomplete |= !r.summary.complete;
  EXPECT_TRUE(any_incomplete);
  stop.stop_after = 100;
  cmd_eval(cp, stop);
  const auto last = cmd_eval(cp);
  std::size_t resumed = 0;
  for (const auto& r : last) {
    EXPECT_TRUE(r.summary.complete);
    resumed += r.summary.resumed;
  }
  EXPECT_EQ(resumed, 350u);
  EXPECT_EQ(tree(full), tree(part));
}

TEST(Pipeline, EvalChecksDatasetVersion) {
  const auto dir = testing::scratch("version");
  RunConfig c = small_config(dir);
  EXPECT_THROW(cmd_eval(c), Error);  // no manifest yet
  cmd_gen(c);
  cmd_eval(c);
  // Editing a dataset after records exist is caught.
  const auto file = dir / "datasets" / "cliffwalking__binary__exhaustive.jsonl";
  std::string text = testing::slurp(file);
  text += text.substr(0, text.find('\n') + 1);
  write_file(file, text);
  EXPECT_THROW(cmd_eval(c), Error);
}

TEST(Pipeline, ReportChecksCompleteness) {
  const auto dir = testing::scratch("incomplete");
  RunConfig c = small_config(dir);
  cmd_gen(c);
  EvalOptions stop;
  stop.stop_after = 30;
  cmd_eval(c, stop);
  EXPECT_THROW(cmd_report(dir), ConfigError);
  EXPECT_THROW(cmd_report(testing::scratch("empty_run")), Error);
}

TEST(Pipeline, VerbalizeMatchesBuilder) {
  const auto dir = testing::scratch("verbalize");
  RunConfig c = small_config(dir);
  cmd_gen(c);
  const auto file = dir / "datasets" / "cliffwalking__goal__exhaustive.jsonl";
  const auto snaps = read_jsonl(file);
  const std::string text = cmd_verbalize(file, snaps[4].id, {});
  EXPECT_NE(text.find("You are in position"), std::string::npos);
  EXPECT_THROW(cmd_verbalize(file, "nope", {}), Error);
}

}  // namespace
}  // namespace fbh
