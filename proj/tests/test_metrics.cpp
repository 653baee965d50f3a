#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fbharness/errors.hpp"
#include "fbharness/metrics.hpp"
#include "fbharness/rng.hpp"
#include "test_support.hpp"

namespace fbh {
namespace {

EvalRecord rec(int i, FeedbackKind kind, bool correct,
               std::string condition = "baseline", std::string model = "m") {
  EvalRecord r;
  r.snapshot_id = "ds/0/" + std::to_string(i);
  r.dataset = "ds";
  r.dataset_version = "v1";
  r.domain = "cliffwalking";
  r.kind = kind;
  r.condition = std::move(condition);
  r.model = std::move(model);
  r.parsed = json{{"feedback", "YES"}};
  r.correct = correct;
  r.transcript = "t.jsonl";
  if (kind == FeedbackKind::Binary) r.positive = true;
  return r;
}

TEST(Metrics, WilsonInterval) {
  // Reference values from an independent evaluation of the closed form.
  const auto ci = wilson(8, 10);
  EXPECT_NEAR(ci.lo, 0.49015684672072335, 1e-12);
  EXPECT_NEAR(ci.hi, 0.9433190520193067, 1e-12);
  const auto zero = wilson(0, 20);
  EXPECT_NEAR(zero.lo, 0.0, 1e-12);
  EXPECT_NEAR(zero.hi, 0.16113012549493322, 1e-12);
  // No observations: the whole unit interval.
  const auto empty = wilson(0, 0);
  EXPECT_DOUBLE_EQ(empty.lo, 0.0);
  EXPECT_DOUBLE_EQ(empty.hi, 1.0);
}

TEST(Metrics, BinaryF1FromConfusionMatrix) {
  // tp=6, fn=2, tn=5, fp=3.
  std::vector<EvalRecord> rs;
  int i = 0;
  auto add = [&](bool positive, bool correct, int n) {
    for (int k = 0; k < n; ++k) {
      auto r = rec(i++, FeedbackKind::Binary, correct);
      r.positive = positive;
      rs.push_back(r);
    }
  };
  add(true, true, 6);
  add(true, false, 2);
  add(false, true, 5);
  add(false, false, 3);
  // An unparseable answer on a positive item is a false negative.
  auto err = rec(i++, FeedbackKind::Binary, false);
  err.parsed = nullptr;
  err.error = ErrorClass::Format;
  rs.push_back(err);
  const Report rep = aggregate(rs);
  ASSERT_EQ(rep.cells.size(), 1u);
  const auto& b = *rep.cells[0].binary;
  EXPECT_EQ(b.tp, 6u);
  EXPECT_EQ(b.fn, 3u);
  EXPECT_EQ(b.tn, 5u);
  EXPECT_EQ(b.fp, 3u);
  const double p = 6.0 / 9.0, r = 6.0 / 9.0;
  EXPECT_NEAR(b.precision, p, 1e-12);
  EXPECT_NEAR(b.recall, r, 1e-12);
  EXPECT_NEAR(b.f1, 2 * p * r / (p + r), 1e-12);
  EXPECT_EQ(rep.cells[0].format_errors, 1u);
  EXPECT_NEAR(rep.cells[0].accuracy, 11.0 / 17.0, 1e-12);
}

TEST(Metrics, PositionalAccuracyIsWeightedByCounts) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EvalRecord> rs;
    const int n = 1 + static_cast<int>(uniform_index(rng, 60));
    for (int i = 0; i < n; ++i) {
      auto r = rec(i, FeedbackKind::Preference, bernoulli(rng, 0.6));
      r.parsed = json{{"preference", "FIRST"}};
      r.gt_position = bernoulli(rng, 0.3) ? "first" : "second";
      rs.push_back(r);
    }
    const Cell& c = aggregate(rs).cells.at(0);
    const auto& p = *c.position;
    EXPECT_EQ(p.n_first + p.n_second, c.n);
    const double weighted =
        (p.acc_first * p.n_first + p.acc_second * p.n_second) / c.n;
    EXPECT_NEAR(weighted, c.accuracy, 1e-12);
    EXPECT_NEAR(p.gap, p.acc_first - p.acc_second, 1e-15);
  }
}

TEST(Metrics, AggregateRejectsBadInput) {
  EXPECT_THROW(aggregate({}), ConfigError);
  auto a = rec(0, FeedbackKind::Action, true);
  EXPECT_THROW(aggregate({a, a}), ConfigError);
  auto b = rec(1, FeedbackKind::Action, true);
  b.dataset_version = "v2";
  EXPECT_THROW(aggregate({a, b}), ConfigError);
  auto c = rec(2, FeedbackKind::Action, true);
  c.dataset = "other";
  EXPECT_THROW(aggregate({a, c}), ConfigError);
}

TEST(Metrics, RecordSchema) {
  auto r = rec(0, FeedbackKind::Binary, true);
  r.pair_id = 3;
  EXPECT_EQ(record_from_json(to_json(r)), r);
  json j = to_json(r);
  j.erase("positive");
  EXPECT_THROW(record_from_json(j, 4), SchemaError);
  j = to_json(r);
  j["error"] = "format";
  try {
    record_from_json(j, 9);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 9u);
    EXPECT_EQ(e.field(), "parsed");
  }
  j = to_json(r);
  j["extra"] = 1;
  EXPECT_THROW(record_from_json(j), SchemaError);
}

TEST(Metrics, TornTailIsIgnored) {
  const auto dir = testing::scratch("metrics");
  const auto path = dir / "r.jsonl";
  std::vector<EvalRecord> rs = {rec(0, FeedbackKind::Action, true),
                                rec(1, FeedbackKind::Action, false)};
  write_records(path, rs);
  EXPECT_EQ(read_records(path), rs);
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << to_json(rec(2, FeedbackKind::Action, true)).dump().substr(0, 40);
  }
  EXPECT_EQ(read_records(path), rs);
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << "\n";
  }
  EXPECT_THROW(read_records(path), SchemaError);
  EXPECT_THROW(read_records(dir / "missing.jsonl"), ConfigError);
}

TEST(Metrics, DiffAlignsOnEverythingButCondition) {
  std::vector<EvalRecord> rs;
  for (int i = 0; i < 10; ++i) {
    rs.push_back(rec(i, FeedbackKind::Action, i < 5, "baseline"));
    rs.push_back(rec(i, FeedbackKind::Action, i < 7, "dyn-full"));
    rs.push_back(rec(i, FeedbackKind::Action, i < 5, "guides"));
  }
  const Report all = aggregate(rs);
  const Report base = select_condition(all, "baseline");
  const auto up = diff_reports(base, select_condition(all, "dyn-full"));
  ASSERT_EQ(up.size(), 1u);
  EXPECT_NEAR(up[0].delta, 0.2, 1e-12);
  EXPECT_EQ(up[0].arrow(), "↑");
  EXPECT_EQ(up[0].variant_condition, "dyn-full");
  const auto same = diff_reports(base, select_condition(all, "guides"));
  EXPECT_EQ(same[0].arrow(), "=");
  const auto down = diff_reports(select_condition(all, "dyn-full"), base);
  EXPECT_EQ(down[0].arrow(), "↓");
  EXPECT_NE(diff_table(up).find("dyn-full"), std::string::npos);
  EXPECT_EQ(to_json(up).size(), 1u);
  // A model missing on one side cannot be aligned.
  std::vector<EvalRecord> other = {rec(0, FeedbackKind::Action, true, "x", "m2")};
  EXPECT_THROW(diff_reports(base, aggregate(other)), ConfigError);
  // Two conditions on one side are ambiguous.
  EXPECT_THROW(diff_reports(all, base), ConfigError);
}

TEST(Metrics, ReportRoundTripAndRendering) {
  std::vector<EvalRecord> rs;
  for (int i = 0; i < 6; ++i) {
    auto r = rec(i, FeedbackKind::Binary, i % 2 == 0);
    r.positive = i < 3;
    rs.push_back(r);
  }
  const Report rep = aggregate(rs);
  const json j = rep.to_json();
  EXPECT_EQ(Report::from_json(j).to_json(), j);
  EXPECT_NE(rep.text_table().find("cliffwalking"), std::string::npos);
  const std::string csv = rep.csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(rep.find(rep.cells[0].key), nullptr);
  CellKey missing = rep.cells[0].key;
  missing.model = "nobody";
  EXPECT_EQ(rep.find(missing), nullptr);
}

}  // namespace
}  // namespace fbh
