#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "fbharness/mdp.hpp"
#include "fbharness/prompting.hpp"
#include "fbharness/snapshot.hpp"

namespace fbh {

/// What a model may consult besides the prompt. Mock models read the
/// label; remote models see only the prompt text.
struct QueryContext {
  const Snapshot& snapshot;
  const Environment& env;
};

class FeedbackModel {
 public:
  virtual ~FeedbackModel() = default;
  /// Stable identifier recorded with every result.
  virtual std::string id() const = 0;
  /// Raw completion text. Must be safe to call concurrently.
  virtual std::string query(const PromptBundle& bundle,
                            const QueryContext& ctx) const = 0;
  /// Checks reachability before any budget is spent. Throws TransportError.
  virtual void probe() const {}
  virtual bool remote() const { return false; }
  virtual json descriptor() const = 0;
};

/// Answers from the ground-truth label.
class ScriptedOracle final : public FeedbackModel {
 public:
  std::string id() const override { return "oracle"; }
  std::string query(const PromptBundle& bundle,
                    const QueryContext& ctx) const override;
  json descriptor() const override { return {{"type", "oracle"}}; }
};

/// The oracle, replaced by a wrong answer with probability p. The coin for
/// each query depends only on (seed, snapshot id, condition label).
class Noisy final : public FeedbackModel {
 public:
  Noisy(double p, std::uint64_t seed);
  std::string id() const override;
  std::string query(const PromptBundle& bundle,
                    const QueryContext& ctx) const override;
  json descriptor() const override;

 private:
  double p_;
  std::uint64_t seed_;
};

/// Always writes `answer` into the kind's answer field.
class Constant final : public FeedbackModel {
 public:
  explicit Constant(std::string answer) : answer_(std::move(answer)) {}
  std::string id() const override { return "constant-" + answer_; }
  std::string query(const PromptBundle& bundle,
                    const QueryContext& ctx) const override;
  json descriptor() const override {
    return {{"type", "constant"}, {"answer", answer_}};
  }

 private:
  std::string answer_;
};

/// Prose without any JSON object.
class Malformed final : public FeedbackModel {
 public:
  std::string id() const override { return "malformed"; }
  std::string query(const PromptBundle& bundle,
                    const QueryContext& ctx) const override;
  json descriptor() const override { return {{"type", "malformed"}}; }
};

struct RemoteOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_retries = 4;
  int backoff_ms = 500;  // doubled after every failed attempt
  int timeout_s = 120;
  double requests_per_second = 0.0;  // 0 = unlimited
  std::string name;      // overrides the default id "remote-<model>"

  static RemoteOptions from_json(const json& j);
  json to_json() const;
};

/// OpenAI-compatible chat completions endpoint.
class RemoteChat final : public FeedbackModel {
 public:
  explicit RemoteChat(RemoteOptions options);
  std::string id() const override;
  std::string query(const PromptBundle& bundle,
                    const QueryContext& ctx) const override;
  void probe() const override;
  bool remote() const override { return true; }
  json descriptor() const override;

  /// Splits "scheme://host[:port][/prefix]"; throws ConfigError.
  static std::pair<std::string, std::string> split_url(const std::string& url);

 private:
  void wait_for_slot() const;
  std::string api_key() const;

  RemoteOptions opt_;
  std::string origin_;
  std::string prefix_;
  mutable std::mutex rate_mutex_;
  mutable std::chrono::steady_clock::time_point next_slot_{};
};

/// {"type": "oracle" | "noisy" | "constant" | "malformed" | "remote", ...}
std::unique_ptr<FeedbackModel> make_model(const json& descriptor);

}  // namespace fbh
