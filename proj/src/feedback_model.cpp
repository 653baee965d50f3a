#include "fbharness/feedback_model.hpp"

#include <cstdio>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "fbharness/dataset.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/json_util.hpp"
#include "fbharness/oracle.hpp"
#include "fbharness/response.hpp"
#include "fbharness/rng.hpp"

namespace fbh {

namespace {

const char* answer_field(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::Binary: return "feedback";
    case FeedbackKind::Action: return "action";
    case FeedbackKind::Preference: return "preference";
    case FeedbackKind::Goal: return "row";
    case FeedbackKind::Delta: return "index";
  }
  return "feedback";
}

std::string answer(FeedbackKind kind, json value) {
  json j{{"reasoning", "Noisy judgement."}};
  j[answer_field(kind)] = std::move(value);
  return j.dump();
}

DeltaLabel delta_label(const Label& l) {
  DeltaLabel d;
  d.delta = l.delta;
  d.close = l.close;
  d.epsilon = l.epsilon;
  return d;
}

// A wrong answer of the snapshot's kind, drawn from `rng`.
std::string wrong_answer(const Snapshot& s, const Environment& env, Rng& rng) {
  const Label& l = s.label;
  switch (s.kind) {
    case FeedbackKind::Binary:
      return answer(s.kind, l.sign > 0 ? "NO" : "YES");
    case FeedbackKind::Preference:
      return answer(s.kind, l.sign >= 0 ? "SECOND" : "FIRST");
    case FeedbackKind::Action: {
      std::vector<std::string> wrong;
      for (const auto& a : s.actions) {
        if (std::find(l.optimal.begin(), l.optimal.end(), a) == l.optimal.end())
          wrong.push_back(a);
      }
      if (wrong.empty()) return answer(s.kind, "NO SUCH ACTION");
      return answer(s.kind, wrong[uniform_index(rng, wrong.size())]);
    }
    case FeedbackKind::Goal: {
      const auto [rows, cols] = env.grid_shape().value_or(std::pair{1, 1});
      const auto here = env.coordinates(env.decode(s.state));
      std::vector<std::pair<int, int>> wrong;
      if (here) {
        const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          std::pair<int, int> c{here->first + dr[k], here->second + dc[k]};
          if (c.first < 0 || c.second < 0 || c.first >= rows ||
              c.second >= cols)
            continue;
          if (std::find(l.optimal_next.begin(), l.optimal_next.end(), c) ==
              l.optimal_next.end())
            wrong.push_back(c);
        }
      }
      const auto c = wrong.empty() ? std::pair{-1, -1}
                                   : wrong[uniform_index(rng, wrong.size())];
      json j{{"reasoning", "Noisy judgement."},
             {"row", std::to_string(c.first)},
             {"column", std::to_string(c.second)}};
      return j.dump();
    }
    case FeedbackKind::Delta: {
      const auto& g = dynamic_cast<const GripperLift&>(env);
      const auto taken = g.action_vector(action_id(env, *s.action));
      const DeltaLabel label = delta_label(l);
      std::vector<int> wrong;
      for (int i = 0; i < static_cast<int>(env.action_names().size()); ++i) {
        const auto v = g.action_vector(i);
        const std::array<double, 3> d{v[0] - taken[0], v[1] - taken[1],
                                      v[2] - taken[2]};
        if (!delta_accepts(label, d, v[3] < 0)) wrong.push_back(i);
      }
      return answer(s.kind, wrong.empty()
                                ? -1
                                : wrong[uniform_index(rng, wrong.size())]);
    }
  }
  return {};
}

}  // namespace

std::string ScriptedOracle::query(const PromptBundle&,
                                  const QueryContext& ctx) const {
  return oracle_answer(ctx.snapshot);
}

Noisy::Noisy(double p, std::uint64_t seed) : p_(p), seed_(seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noisy: p must be in [0, 1]");
}

std::string Noisy::id() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "noisy-p%g-s%llu", p_,
                static_cast<unsigned long long>(seed_));
  return buf;
}

json Noisy::descriptor() const {
  return {{"type", "noisy"}, {"p", p_}, {"seed", seed_}};
}

std::string Noisy::query(const PromptBundle& bundle,
                         const QueryContext& ctx) const {
  // Conditions draw independent coins, so condition diffs are non-trivial.
  Rng rng(derive_seed(seed_, ctx.snapshot.id + "\n" + bundle.condition));
  if (!bernoulli(rng, p_)) return oracle_answer(ctx.snapshot);
  return wrong_answer(ctx.snapshot, ctx.env, rng);
}

std::string Constant::query(const PromptBundle& bundle,
                            const QueryContext&) const {
  json j{{"reasoning", "Constant answer."}};
  if (bundle.kind == FeedbackKind::Goal) {
    // "row,column"
    const auto comma = answer_.find(',');
    j["row"] = answer_.substr(0, comma);
    j["column"] = comma == std::string::npos ? "" : answer_.substr(comma + 1);
  } else if (bundle.kind == FeedbackKind::Delta) {
    try {
      j["index"] = std::stoi(answer_);
    } catch (const std::exception&) {
      j["index"] = answer_;
    }
  } else {
    j[answer_field(bundle.kind)] = answer_;
  }
  return j.dump();
}

std::string Malformed::query(const PromptBundle&, const QueryContext&) const {
  return "I think the agent should probably keep going the way it is headed.";
}

// -- Remote -------------------------------------------------------------------

RemoteOptions RemoteOptions::from_json(const json& j) {
  const std::string ctx = "remote model";
  require_known_keys(j,
                     {"type", "name", "base_url", "model", "api_key_env",
                      "temperature", "max_retries", "backoff_ms", "timeout_s",
                      "requests_per_second"},
                     ctx);
  RemoteOptions o;
  o.base_url = get_field_or<std::string>(j, "base_url", o.base_url, ctx);
  o.model = get_field<std::string>(j, "model", ctx);
  o.api_key_env = get_field_or<std::string>(j, "api_key_env", o.api_key_env, ctx);
  o.temperature = get_field_or<double>(j, "temperature", o.temperature, ctx);
  o.max_retries = get_field_or<int>(j, "max_retries", o.max_retries, ctx);
  o.backoff_ms = get_field_or<int>(j, "backoff_ms", o.backoff_ms, ctx);
  o.timeout_s = get_field_or<int>(j, "timeout_s", o.timeout_s, ctx);
  o.requests_per_second =
      get_field_or<double>(j, "requests_per_second", 0.0, ctx);
  o.name = get_field_or<std::string>(j, "name", "", ctx);
  if (o.model.empty()) throw ConfigError(ctx + ": empty model name");
  if (o.max_retries < 0 || o.backoff_ms < 0 || o.timeout_s <= 0 ||
      o.requests_per_second < 0) {
    throw ConfigError(ctx + ": retry, timeout and rate settings must be >= 0");
  }
  return o;
}

json RemoteOptions::to_json() const {
  json j{{"type", "remote"},
         {"base_url", base_url},
         {"model", model},
         {"api_key_env", api_key_env},
         {"temperature", temperature},
         {"max_retries", max_retries},
         {"backoff_ms", backoff_ms},
         {"timeout_s", timeout_s},
         {"requests_per_second", requests_per_second}};
  if (!name.empty()) j["name"] = name;
  return j;
}

std::pair<std::string, std::string> RemoteChat::split_url(
    const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("base_url needs a scheme: " + url);
  }
  const std::string proto = url.substr(0, scheme);
  if (proto != "http" && proto != "https") {
    throw ConfigError("unsupported scheme in base_url: " + url);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (proto == "https") {
    throw ConfigError("built without TLS support; use an http:// base_url");
  }
#endif
  const auto slash = url.find('/', scheme + 3);
  std::string origin = url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {origin, prefix};
}

RemoteChat::RemoteChat(RemoteOptions options) : opt_(std::move(options)) {
  std::tie(origin_, prefix_) = split_url(opt_.base_url);
}

std::string RemoteChat::id() const {
  return opt_.name.empty() ? "remote-" + opt_.model : opt_.name;
}

json RemoteChat::descriptor() const { return opt_.to_json(); }

std::string RemoteChat::api_key() const {
  if (opt_.api_key_env.empty()) return {};
  const char* v = std::getenv(opt_.api_key_env.c_str());
  return v ? v : "";
}

void RemoteChat::wait_for_slot() const {
  if (opt_.requests_per_second <= 0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::duration<double>(1.0 / opt_.requests_per_second));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(rate_mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

namespace {

httplib::Headers auth_headers(const std::string& key) {
  httplib::Headers h;
  if (!key.empty()) h.emplace("Authorization", "Bearer " + key);
  return h;
}

bool transient(int status) { return status == 429 || status >= 500; }

}  // namespace

void RemoteChat::probe() const {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(opt_.timeout_s);
  cli.set_read_timeout(opt_.timeout_s);
  auto res = cli.Get(prefix_ + "/models", auth_headers(api_key()));
  if (!res) {
    throw TransportError("cannot reach " + opt_.base_url + ": " +
                         httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) {
    throw TransportError(opt_.base_url + " rejected the credentials (HTTP " +
                         std::to_string(res->status) + ")");
  }
}

std::string RemoteChat::query(const PromptBundle& bundle,
                              const QueryContext&) const {
  const json body{{"model", opt_.model},
                  {"temperature", opt_.temperature},
                  {"messages",
                   json::array({{{"role", "user"}, {"content", bundle.text}}})}};
  const std::string payload = body.dump();
  const auto headers = auth_headers(api_key());
  std::string last_error;
  int delay = opt_.backoff_ms;
  for (int attempt = 0; attempt <= opt_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }
    wait_for_slot();
    httplib::Client cli(origin_);
    cli.set_connection_timeout(opt_.timeout_s);
    cli.set_read_timeout(opt_.timeout_s);
    auto res = cli.Post(prefix_ + "/chat/completions", headers, payload,
                        "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (transient(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError(opt_.base_url + ": HTTP " +
                           std::to_string(res->status) + ": " + res->body);
    }
    try {
      const json reply = json::parse(res->body);
      const json& content = reply.at("choices").at(0).at("message").at("content");
      return content.is_string() ? content.get<std::string>() : content.dump();
    } catch (const json::exception& e) {
      throw TransportError(opt_.base_url + ": unexpected reply: " + e.what());
    }
  }
  throw TransportError(opt_.base_url + ": giving up after " +
                       std::to_string(opt_.max_retries + 1) +
                       " attempts: " + last_error);
}

std::unique_ptr<FeedbackModel> make_model(const json& d) {
  const std::string ctx = "model";
  if (!d.is_object()) throw ConfigError("model descriptor must be an object");
  const auto type = get_field<std::string>(d, "type", ctx);
  if (type == "oracle") {
    require_known_keys(d, {"type"}, ctx);
    return std::make_unique<ScriptedOracle>();
  }
  if (type == "noisy") {
    require_known_keys(d, {"type", "p", "seed"}, ctx);
    return std::make_unique<Noisy>(get_field<double>(d, "p", ctx),
                                   get_field_or<std::uint64_t>(d, "seed", 0, ctx));
  }
  if (type == "constant") {
    require_known_keys(d, {"type", "answer"}, ctx);
    return std::make_unique<Constant>(get_field<std::string>(d, "answer", ctx));
  }
  if (type == "malformed") {
    require_known_keys(d, {"type"}, ctx);
    return std::make_unique<Malformed>();
  }
  if (type == "remote") {
    return std::make_unique<RemoteChat>(RemoteOptions::from_json(d));
  }
  throw ConfigError("unknown model type '" + type + "'");
}

}  // namespace fbh
