// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "fbharness/dataset.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/evaluator.hpp"
#include "fbharness/feedback_model.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/metrics.hpp"
#include "fbharness/oracle.hpp"
#include "fbharness/pipeline.hpp"
#include "fbharness/prompting.hpp"
#include "fbharness/registry.hpp"
#include "fbharness/response.hpp"
#include "fbharness/rng.hpp"

namespace fs = std::filesystem;
using namespace fbh;

namespace {

// Tolerances.
constexpr double kTable2Seconds = 1.0;
constexpr double kSolverSeconds = 60.0;
constexpr int kPropertyCases = 1000;
constexpr double kNoiseSigmas = 3.0;
constexpr std::size_t kNoiseN = 1000;
constexpr int kExpertEpisodes = 100;
constexpr int kExpertSteps = 50;
constexpr double kDeltaEpsilon = 0.28;

struct Failure {
  std::string what;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const OracleTables& tables(const std::string& domain) {
  static std::map<std::string, OracleTables> cache;
  auto it = cache.find(domain);
  if (it == cache.end()) {
    it = cache.emplace(domain, solve(shared_environment(domain))).first;
  }
  return it->second;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("fbh_accept_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs a mock model over snapshots in memory; returns the scored records.
std::vector<EvalRecord> run_model(const FeedbackModel& model,
                                  const std::vector<Snapshot>& snaps,
                                  const std::string& stem) {
  const auto& t = tables(snaps.front().domain);
  EvalJob job;
  job.dataset = stem;
  job.dataset_version = "mem";
  job.snapshots = &snaps;
  job.env = &t.env();
  job.tables = &t;
  job.model = &model;
  PromptBuilder pb(t.env(), &t);
  std::vector<EvalRecord> out;
  for (const Snapshot& s : snaps) {
    if (!scorable(s)) continue;
    const PromptBundle b = pb.build(s, job.condition);
    out.push_back(score_response(job, s, model.query(b, {s, t.env()}), false));
  }
  return out;
}

DatasetSpec exhaustive(const std::string& domain, FeedbackKind kind) {
  DatasetSpec s;
  s.domain = domain;
  s.kind = kind;
  s.downsample = 0;
  s.exclude_ties = false;
  return s;
}

// 1. Cliff Walking dataset arithmetic.
std::string table2() {
  const auto t0 = std::chrono::steady_clock::now();
  const OracleTables t = solve(shared_environment("cliffwalking"));
  std::map<FeedbackKind, std::size_t> n;
  for (FeedbackKind k : {FeedbackKind::Action, FeedbackKind::Goal,
                         FeedbackKind::Binary, FeedbackKind::Preference}) {
    n[k] = build(t, exhaustive("cliffwalking", k)).snapshots.size();
  }
  const double secs = seconds_since(t0);
  check(n[FeedbackKind::Action] == 37, "action count");
  check(n[FeedbackKind::Goal] == 37, "goal count");
  check(n[FeedbackKind::Binary] == 148, "binary count");
  check(n[FeedbackKind::Preference] == 444, "preference count");
  check(secs < kTable2Seconds, fmt("took %.2fs", secs));
  return fmt("action 37, goal 37, binary 148, preference 444 in %.3fs", secs);
}

// 2. Per-state multipliers on sampled builds.
std::string count_identities() {
  std::string detail;
  for (auto [domain, per_binary, per_pref] :
       std::vector<std::tuple<std::string, std::size_t, std::size_t>>{
           {"doorkey-5x5", 5, 20}, {"fourrooms", 3, 6}}) {
    const std::size_t states = domain == "fourrooms" ? 500 : 30;
    for (auto policy : {SamplingPolicyKind::HalfExpert, SamplingPolicyKind::Random}) {
      DatasetSpec s;
      s.domain = domain;
      s.policy = policy;
      s.states = states;
      s.seed = 1;
      s.downsample = 0;
      s.exclude_ties = false;
      s.kind = FeedbackKind::Binary;
      const auto b = build(tables(domain), s);
      s.kind = FeedbackKind::Preference;
      const auto p = build(tables(domain), s);
      check(b.states == p.states, domain + " state sets differ");
      check(b.snapshots.size() == b.states * per_binary, domain + " binary");
      check(p.snapshots.size() == p.states * per_pref, domain + " preference");
      if (policy == SamplingPolicyKind::HalfExpert) {
        detail += domain + " " + std::to_string(b.states) + "->" +
                  std::to_string(b.snapshots.size()) + "->" +
                  std::to_string(p.snapshots.size()) + "; ";
      }
    }
  }
  return detail.substr(0, detail.size() - 2);
}

// 3. BFS against value iteration.
std::string solver_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t total = 0;
  for (const char* domain : {"cliffwalking", "doorkey-5x5", "fourrooms", "craftworld"}) {
    const OracleTables& t = tables(domain);
    const Environment& env = t.env();
    const auto vi = value_iteration(env, t.graph());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const int id = static_cast<int>(i);
      const State& s = t.graph().states[i];
      check(vi.distance[i] == t.distance(id), std::string(domain) + " d*");
      const double v = t.value(s);
      check(std::isinf(v) ? std::isinf(vi.value[i]) : std::abs(vi.value[i] - v) < 1e-9,
            std::string(domain) + " V*");
      if (t.graph().terminal[i] || !t.solvable(s)) continue;
      for (const auto& [a, next] : t.edges(id)) {
        const double q_vi = -1.0 + vi.value[next];
        const double q = t.q(s, a);
        check(std::isinf(q) ? std::isinf(q_vi) : std::abs(q - q_vi) < 1e-9,
              std::string(domain) + " Q*");
      }
      check(vi.optimal[i] == t.optimal_actions(s), std::string(domain) + " argmax");
    }
    total += t.size();
  }
  const double secs = seconds_since(t0);
  check(secs < kSolverSeconds, fmt("took %.1fs", secs));
  return std::to_string(total) + " states agree in " + fmt("%.1fs", secs);
}

// 4. Seeded property suites over random (state, action) draws.
std::string properties() {
  const std::vector<std::string> domains = {"cliffwalking", "doorkey-5x5", "fourrooms",
                                            "craftworld", "gripperlift"};
  Rng rng(2024);
  int antisym = 0, consistency = 0, goal = 0, advantage = 0;
  while (std::min({antisym, consistency, goal, advantage}) < kPropertyCases) {
    const OracleTables& t = tables(domains[uniform_index(rng, domains.size())]);
    const Environment& env = t.env();
    const State& s = t.graph().states[uniform_index(rng, t.size())];
    if (t.terminal(s) || !t.solvable(s)) continue;
    const auto legal = env.legal_actions(s);
    const auto opt = gt_action(t, s);
    auto is_opt = [&](int a) { return std::count(opt.begin(), opt.end(), a) > 0; };
    const int a = legal[uniform_index(rng, legal.size())];
    const int b = legal[uniform_index(rng, legal.size())];
    // Antisymmetry.
    check(gt_preference(t, s, a, b) == -gt_preference(t, s, b, a), "antisymmetry");
    ++antisym;
    // Preference agrees with binary: an optimal action never loses.
    const int pa = gt_preference(t, s, a, b);
    if (is_opt(a) && is_opt(b)) check(pa == 0, "optimal pair not tied");
    if (is_opt(a) && !is_opt(b)) check(pa == 1, "optimal action loses");
    if (!is_opt(a) && is_opt(b)) check(pa == -1, "optimal action loses");
    check(gt_binary(t, s, a) == (is_opt(a) ? 1 : -1), "binary vs action set");
    ++consistency;
    // Advantage.
    const double adv = t.advantage(s, a);
    check(adv <= 1e-12, "positive advantage");
    check((std::abs(adv) < 1e-12) == is_opt(a), "zero advantage off the optimal set");
    ++advantage;
    // Goal set is the image of the optimal action set.
    std::vector<State> image;
    for (int o : opt) {
      const State n = env.step(s, o);
      if (std::find(image.begin(), image.end(), n) == image.end()) image.push_back(n);
    }
    check(gt_goal(t, s) == image, "goal set differs from action image");
    ++goal;
  }
  return std::to_string(antisym) + " antisymmetry, " + std::to_string(consistency) +
         " consistency, " + std::to_string(goal) + " goal-image, " +
         std::to_string(advantage) + " advantage cases, 0 violations";
}

// 5. Oracle model through prompt -> query -> parse -> score.
std::string oracle_identity() {
  ScriptedOracle oracle;
  std::size_t cells = 0, scored = 0;
  for (const auto& domain : domain_names()) {
    const OracleTables& t = tables(domain);
    for (FeedbackKind kind : t.env().feedback_kinds()) {
      DatasetSpec s;
      s.domain = domain;
      s.kind = kind;
      s.policy = SamplingPolicyKind::HalfExpert;
      s.states = 60;
      s.seed = 5;
      s.downsample = 400;
      const auto snaps = build(t, s).snapshots;
      const auto recs = run_model(oracle, snaps, s.stem());
      const Report rep = aggregate(recs);
      check(rep.cells.size() == 1 && rep.cells[0].accuracy == 1.0,
            domain + "/" + std::string(to_string(kind)) + " below 1.000");
      ++cells;
      scored += recs.size();
    }
  }
  return std::to_string(cells) + " (domain, kind) cells at 1.000 over " +
         std::to_string(scored) + " snapshots";
}

// 6. Constant answers expose position and base-rate effects.
std::string bias_harness() {
  const OracleTables& t = tables("cliffwalking");
  DatasetSpec pref = exhaustive("cliffwalking", FeedbackKind::Preference);
  pref.mirror = true;
  const auto pairs = build(t, pref).snapshots;
  const Cell c = aggregate(run_model(Constant("FIRST"), pairs, pref.stem())).cells.at(0);
  check(c.accuracy == 0.5, fmt("accuracy %.6f", c.accuracy));
  check(c.position && c.position->gap == 1.0, "gap is not 1");

  const auto bin = build(t, exhaustive("cliffwalking", FeedbackKind::Binary)).snapshots;
  std::size_t optimal = 0;
  for (const auto& s : bin) optimal += s.label.sign > 0;
  const Cell y = aggregate(run_model(Constant("YES"), bin, "bin")).cells.at(0);
  const double frac = static_cast<double>(optimal) / static_cast<double>(bin.size());
  check(y.binary->recall == 1.0, "recall");
  check(y.binary->precision == frac, "precision");
  return fmt("FIRST: accuracy %.3f gap %.3f (n=%g); ", c.accuracy, c.position->gap,
             static_cast<double>(c.n)) +
         fmt("YES: recall %.3f precision %.4f = %g/148", y.binary->recall,
             y.binary->precision, static_cast<double>(optimal));
}

// 7. Noisy(p) accuracy tracks 1 - p.
std::string noise_calibration() {
  DatasetSpec s;
  s.domain = "fourrooms";
  s.kind = FeedbackKind::Binary;
  s.policy = SamplingPolicyKind::HalfExpert;
  s.states = 400;
  s.seed = 7;
  s.downsample = kNoiseN;
  const auto snaps = build(tables("fourrooms"), s).snapshots;
  check(snaps.size() == kNoiseN, "dataset size");
  std::string detail;
  for (double p : {0.1, 0.25, 0.5}) {
    const Cell c = aggregate(run_model(Noisy(p, 11), snaps, s.stem())).cells.at(0);
    const double sigma = std::sqrt(p * (1 - p) / kNoiseN);
    const double z = (c.accuracy - (1 - p)) / sigma;
    check(std::abs(z) <= kNoiseSigmas, fmt("p=%.2f accuracy %.3f (z=%.2f)", p, c.accuracy, z));
    detail += fmt("p=%.2f: %.3f (z=%+.2f) ", p, c.accuracy, z);
  }
  return detail + "n=1000";
}

// 8. Baseline prompts byte-match the stored transcriptions.
std::string golden_prompts() {
  const fs::path dir = fs::path(FBH_TEST_DATA) / "golden";
  std::set<std::pair<std::string, std::string>> covered;
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    const json side = json::parse(slurp(e.path()));
    const auto& t = tables(side.at("domain").get<std::string>());
    const Environment& env = t.env();
    Snapshot s;
    s.id = "golden";
    s.domain = env.name();
    s.kind = *parse_feedback_kind(side.at("kind").get<std::string>());
    s.state = side.at("state");
    for (int a : env.legal_actions(env.decode(s.state))) s.actions.push_back(env.action_name(a));
    if (side.contains("action")) s.action = side["action"].get<std::string>();
    if (side.contains("action_pair")) {
      s.action_pair = std::pair{side["action_pair"][0].get<std::string>(),
                                side["action_pair"][1].get<std::string>()};
    }
    for (const auto& h : side.value("history", json::array())) {
      s.history.push_back({h[0], h[1].get<std::string>()});
    }
    s.label = derive_label(t, s);
    const ConditionSet c = ConditionSet::from_json(side.value("condition", json::object()));
    auto txt = e.path();
    txt.replace_extension(".txt");
    const std::string want = slurp(txt);
    check(PromptBuilder(env, &t).build(s, c).text == want,
          e.path().filename().string() + " differs");
    if (c == ConditionSet{}) covered.insert({template_family(env.name()),
                                             std::string(to_string(s.kind))});
    if (s.kind == FeedbackKind::Binary) {
      check(want.find("Where <FEEDBACK> is one of \"YES\" or \"NO\"") != std::string::npos,
            "binary footer");
    }
    ++files;
  }
  int expected = 0;
  for (const auto& domain : domain_names()) {
    for (FeedbackKind k : tables(domain).env().feedback_kinds()) {
      ++expected;
      check(covered.count({template_family(domain), std::string(to_string(k))}) > 0,
            "no baseline golden for " + domain + "/" + std::string(to_string(k)));
    }
  }
  return std::to_string(files) + " transcriptions match, " + std::to_string(expected) +
         " baseline (domain, kind) pairs covered";
}

// 9. Scripted expert and delta threshold.
std::string gripper() {
  const auto& env = dynamic_cast<const GripperLift&>(tables("gripperlift").env());
  const auto starts = env.initial_states();
  int success = 0, longest = 0, accepted = 0, rejected = 0;
  for (int ep = 0; ep < kExpertEpisodes; ++ep) {
    Rng rng(derive_seed(ep, "gripper-episode"));
    State s = starts[uniform_index(rng, starts.size())];
    int steps = 0;
    while (!env.is_terminal(s) && steps < kExpertSteps) {
      const int a = env.scripted_expert(s);
      const DeltaLabel label = gt_delta(env, s, a, kDeltaEpsilon);
      check(label.delta == std::array<double, 3>{0, 0, 0}, "expert delta not zero");
      check(delta_accepts(label, {0, 0, 0}, label.close), "expert rejected");
      ++accepted;
      for (int axis = 0; axis < 3; ++axis) {
        for (double sign : {1.0, -1.0}) {
          for (double dev : {kDeltaEpsilon + 1e-6, 0.3, 0.56}) {
            std::array<double, 3> d{};
            d[axis] = sign * dev;
            check(!delta_accepts(label, d, label.close), "deviation accepted");
            ++rejected;
          }
        }
      }
      s = env.step(s, a);
      ++steps;
    }
    success += env.is_terminal(s);
    longest = std::max(longest, steps);
  }
  check(success == kExpertEpisodes, std::to_string(success) + "/100 episodes lifted");
  return std::to_string(success) + "/100 lifted (max " + std::to_string(longest) +
         " steps); " + std::to_string(accepted) + " expert actions accepted, " +
         std::to_string(rejected) + " deviations > 0.28 rejected";
}

// 10. Byte-identical reruns and resume.
std::string determinism() {
  const json cfg = json::parse(R"({
    "seed": 17,
    "datasets": [
      {"domain": "cliffwalking", "kinds": ["binary", "action", "goal"], "downsample": 0},
      {"domain": "cliffwalking", "kind": "preference", "downsample": 0,
       "exclude_ties": false, "mirror": true},
      {"domain": "fourrooms", "kind": "binary", "policy": "half-expert",
       "states": 100, "downsample": 200},
      {"domain": "gripperlift", "kind": "delta", "policy": "half-expert",
       "states": 40, "downsample": 100}
    ],
    "conditions": [{}, {"icl": 3, "icl_generated": true}],
    "models": [{"type": "oracle"}, {"type": "noisy", "p": 0.2, "seed": 1},
               {"type": "constant", "answer": "FIRST"}, {"type": "malformed"}]
  })");
  auto run = [&](const fs::path& dir, int concurrency, bool interrupt) {
    RunConfig c = RunConfig::from_json(cfg);
    c.output_dir = dir;
    c.concurrency = concurrency;
    cmd_gen(c);
    if (interrupt) {
      EvalOptions o;
      o.stop_after = 700;
      cmd_eval(c, o);
      o.stop_after = 1300;
      cmd_eval(c, o);
    }
    cmd_eval(c);
    cmd_report(dir);
  };
  const auto a = scratch("a"), b = scratch("b"), r = scratch("resume");
  run(a, 1, false);
  run(b, 3, false);
  run(r, 2, true);
  const auto ta = tree(a), tb = tree(b), tr = tree(r);
  check(ta == tb, "reruns differ");
  check(ta == tr, "resumed run differs");
  for (const auto& d : {a, b, r}) fs::remove_all(d);
  return std::to_string(ta.size()) + " files byte-identical across two runs and an "
                                     "interrupted-then-resumed run";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
      {"Cliff Walking dataset counts", table2},
      {"DoorKey/FourRooms count identities", count_identities},
      {"BFS and value iteration agree", solver_equivalence},
      {"oracle property suites", properties},
      {"oracle model end to end", oracle_identity},
      {"bias harness", bias_harness},
      {"noise calibration", noise_calibration},
      {"golden prompts", golden_prompts},
      {"GripperLift expert and delta threshold", gripper},
      {"determinism and resume", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, fn] = criteria[i];
    std::string status = "PASS", detail;
    try {
      detail = fn();
    } catch (const Failure& f) {
      status = "FAIL";
      detail = f.what;
    } catch (const std::exception& e) {
      status = "FAIL";
      detail = std::string("exception: ") + e.what();
    }
    failed += status == "FAIL";
    std::printf("%s %2zu %s: %s\n", status.c_str(), i + 1, name.c_str(), detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
