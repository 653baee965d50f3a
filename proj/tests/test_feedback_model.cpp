#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <thread>

#include <httplib.h>

#include "fbharness/dataset.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/feedback_model.hpp"
#include "fbharness/prompting.hpp"
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

std::vector<Snapshot> dataset(const std::string& domain, FeedbackKind kind,
                              std::size_t states = 40) {
  DatasetSpec s;
  s.domain = domain;
  s.kind = kind;
  s.policy = SamplingPolicyKind::Random;
  s.states = states;
  s.seed = 21;
  s.downsample = 0;
  return build(tables(domain), s).snapshots;
}

// Scores a model over a snapshot list; returns (correct, format errors).
std::pair<int, int> tally(const FeedbackModel& m, const std::vector<Snapshot>& snaps,
                          const ConditionSet& c = {}) {
  int correct = 0, errors = 0;
  for (const Snapshot& s : snaps) {
    const auto& t = tables(s.domain);
    PromptBuilder pb(t.env(), &t);
    const PromptBundle b = pb.build(s, c);
    const auto sc = score(parse_feedback(s.kind, m.query(b, {s, t.env()}), s, t.env()), s);
    correct += sc.correct;
    errors += sc.error == ErrorClass::Format;
  }
  return {correct, errors};
}

TEST(FeedbackModel, OracleIsAlwaysRight) {
  ScriptedOracle m;
  for (auto [domain, kind] :
       std::vector<std::pair<std::string, FeedbackKind>>{
           {"cliffwalking", FeedbackKind::Goal},
           {"doorkey-5x5", FeedbackKind::Preference},
           {"craftworld", FeedbackKind::Action},
           {"gripperlift", FeedbackKind::Delta}}) {
    const auto snaps = dataset(domain, kind, 10);
    EXPECT_EQ(tally(m, snaps).first, static_cast<int>(snaps.size())) << domain;
  }
}

TEST(FeedbackModel, NoisyNeverFlipsAtZeroAndAlwaysAtOne) {
  for (FeedbackKind kind : {FeedbackKind::Binary, FeedbackKind::Action,
                            FeedbackKind::Preference, FeedbackKind::Goal}) {
    const auto snaps = dataset("cliffwalking", kind, 20);
    EXPECT_EQ(tally(Noisy(0.0, 1), snaps).first, static_cast<int>(snaps.size()));
    EXPECT_EQ(tally(Noisy(1.0, 1), snaps).first, 0);
  }
  const auto delta = dataset("gripperlift", FeedbackKind::Delta, 10);
  EXPECT_EQ(tally(Noisy(1.0, 1), delta), (std::pair{0, 0}));
}

TEST(FeedbackModel, NoisyReplaysExactly) {
  const auto snaps = dataset("fourrooms", FeedbackKind::Binary, 60);
  const Noisy a(0.3, 5), b(0.3, 5), other(0.3, 6);
  EXPECT_EQ(tally(a, snaps), tally(b, snaps));
  const auto& t = tables("fourrooms");
  PromptBuilder pb(t.env(), &t);
  int differ = 0;
  for (const Snapshot& s : snaps) {
    const PromptBundle bundle = pb.build(s, {});
    EXPECT_EQ(a.query(bundle, {s, t.env()}), b.query(bundle, {s, t.env()}));
    differ += a.query(bundle, {s, t.env()}) != other.query(bundle, {s, t.env()});
  }
  EXPECT_GT(differ, 0);
  EXPECT_EQ(a.id(), "noisy-p0.3-s5");
  EXPECT_THROW(Noisy(1.5, 0), ConfigError);
}

TEST(FeedbackModel, ConstantAndMalformed) {
  const auto pref = dataset("doorkey-5x5", FeedbackKind::Preference, 30);
  int firsts = 0;
  for (const auto& s : pref) firsts += *s.gt_position == "first";
  EXPECT_EQ(tally(Constant("FIRST"), pref).first, firsts);
  const auto goal = dataset("cliffwalking", FeedbackKind::Goal, 30);
  const auto [right, errs] = tally(Constant("3,11"), goal);
  EXPECT_EQ(errs, 0);
  int expected = 0;
  for (const auto& g : goal) {
    for (const auto& rc : g.label.optimal_next) expected += rc == std::pair{3, 11};
  }
  EXPECT_EQ(right, expected);
  const auto bin = dataset("cliffwalking", FeedbackKind::Binary, 10);
  EXPECT_EQ(tally(Malformed(), bin), (std::pair{0, static_cast<int>(bin.size())}));
}

TEST(FeedbackModel, MakeModel) {
  EXPECT_EQ(make_model(json::parse(R"({"type": "oracle"})"))->id(), "oracle");
  EXPECT_EQ(make_model(json::parse(R"({"type": "noisy", "p": 0.2, "seed": 1})"))->id(),
            "noisy-p0.2-s1");
  EXPECT_EQ(make_model(json::parse(R"({"type": "constant", "answer": "YES"})"))->id(),
            "constant-YES");
  auto remote = make_model(json::parse(
      R"({"type": "remote", "model": "m1", "base_url": "http://127.0.0.1:1/v1"})"));
  EXPECT_EQ(remote->id(), "remote-m1");
  EXPECT_TRUE(remote->remote());
  EXPECT_THROW(make_model(json::parse(R"({"type": "oracle", "p": 1})")), ConfigError);
  EXPECT_THROW(make_model(json::parse(R"({"type": "psychic"})")), ConfigError);
  EXPECT_THROW(make_model(json::parse(R"({"type": "remote", "model": "m",
                                          "base_url": "ftp://x"})")),
               ConfigError);
  EXPECT_EQ(RemoteChat::split_url("http://h:8080/v1/"),
            (std::pair<std::string, std::string>{"http://h:8080", "/v1"}));
}

// Local OpenAI-compatible stub.
class StubServer {
 public:
  explicit StubServer(int failures, int fail_status = 500)
      : failures_(failures), fail_status_(fail_status) {
    svr_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                            httplib::Response& res) {
      const int n = calls_++;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (n < failures_) {
        res.status = fail_status_;
        return;
      }
      json reply{{"choices", json::array({{{"message",
          {{"role", "assistant"},
           {"content", R"({"reasoning": "ok", "feedback": "YES"})"}}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    svr_.Get("/v1/models", [](const httplib::Request& req, httplib::Response& res) {
      if (req.get_header_value("Authorization") == "Bearer bad") {
        res.status = 401;
        return;
      }
      res.set_content(R"({"data": []})", "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~StubServer() {
    svr_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int calls() const { return calls_; }
  json last_body() const { return json::parse(last_body_); }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  int failures_;
  int fail_status_;
  std::string last_body_, last_auth_;
};

RemoteOptions options(const std::string& url, int retries) {
  RemoteOptions o;
  o.base_url = url;
  o.model = "stub";
  o.api_key_env = "FBH_TEST_KEY";
  o.max_retries = retries;
  o.backoff_ms = 1;
  o.timeout_s = 5;
  return o;
}

const Snapshot& one_snapshot() {
  static const Snapshot s = dataset("cliffwalking", FeedbackKind::Binary, 1).front();
  return s;
}

TEST(RemoteChat, RetriesTransientFailures) {
  StubServer stub(2);
  ::setenv("FBH_TEST_KEY", "secret", 1);
  RemoteChat m(options(stub.url(), 3));
  EXPECT_NO_THROW(m.probe());
  const auto& t = tables("cliffwalking");
  const PromptBundle b = PromptBuilder(t.env()).build(one_snapshot(), {});
  EXPECT_EQ(m.query(b, {one_snapshot(), t.env()}),
            R"({"reasoning": "ok", "feedback": "YES"})");
  EXPECT_EQ(stub.calls(), 3);
  const json body = stub.last_body();
  EXPECT_EQ(body["model"], "stub");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"][0]["content"], b.text);
  EXPECT_EQ(stub.last_auth(), "Bearer secret");
}

TEST(RemoteChat, GivesUpAfterRetries) {
  StubServer stub(100, 429);
  RemoteChat m(options(stub.url(), 2));
  const auto& t = tables("cliffwalking");
  const PromptBundle b = PromptBuilder(t.env()).build(one_snapshot(), {});
  EXPECT_THROW(m.query(b, {one_snapshot(), t.env()}), TransportError);
  EXPECT_EQ(stub.calls(), 3);
}

TEST(RemoteChat, ClientErrorsAreNotRetried) {
  StubServer stub(100, 400);
  RemoteChat m(options(stub.url(), 4));
  const auto& t = tables("cliffwalking");
  const PromptBundle b = PromptBuilder(t.env()).build(one_snapshot(), {});
  EXPECT_THROW(m.query(b, {one_snapshot(), t.env()}), TransportError);
  EXPECT_EQ(stub.calls(), 1);
}

TEST(RemoteChat, ProbeDetectsBadCredentialsAndMissingServer) {
  StubServer stub(0);
  ::setenv("FBH_TEST_KEY", "bad", 1);
  EXPECT_THROW(RemoteChat(options(stub.url(), 0)).probe(), TransportError);
  ::setenv("FBH_TEST_KEY", "secret", 1);
  EXPECT_THROW(RemoteChat(options("http://127.0.0.1:9/v1", 0)).probe(),
               TransportError);
  const auto& t = tables("cliffwalking");
  const PromptBundle b = PromptBuilder(t.env()).build(one_snapshot(), {});
  EXPECT_THROW(RemoteChat(options("http://127.0.0.1:9/v1", 1))
                   .query(b, {one_snapshot(), t.env()}),
               TransportError);
}

}  // namespace
}  // namespace fbh
