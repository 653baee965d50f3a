#include "fbharness/evaluator.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "fbharness/errors.hpp"
#include "fbharness/response.hpp"
#include "fbharness/rng.hpp"

namespace fbh {

namespace fs = std::filesystem;

std::string content_version(std::string_view bytes) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

bool scorable(const Snapshot& s) {
  return !(s.kind == FeedbackKind::Preference && s.label.sign == 0);
}

EvalRecord score_response(const EvalJob& job, const Snapshot& s,
                          const std::string& raw, bool transport_failed) {
  EvalRecord r;
  r.snapshot_id = s.id;
  r.dataset = job.dataset;
  r.dataset_version = job.dataset_version;
  r.domain = s.domain;
  r.kind = s.kind;
  r.policy = s.policy;
  r.condition = job.condition.label();
  r.model = job.model->id();
  r.transcript = job.transcript.filename().string();
  if (s.kind == FeedbackKind::Binary) r.positive = s.label.sign > 0;
  r.gt_position = s.gt_position;
  r.pair_id = s.pair_id;

  if (transport_failed) {
    r.error = ErrorClass::Format;
    r.parsed = nullptr;
    return r;
  }
  const ParsedFeedback p = parse_feedback(s.kind, raw, s, *job.env);
  const Score sc = score(p, s);
  r.error = p.error;
  r.parsed = p.ok() ? p.to_json() : json(nullptr);
  r.correct = sc.correct;
  return r;
}

namespace {

struct Outcome {
  EvalRecord record;
  json transcript;
};

// Keeps the complete, well-formed lines of a JSONL file and drops a torn
// tail, so appends continue from a clean boundary.
std::vector<std::string> clean_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    for (const auto& l : lines) out << l << '\n';
  }
  fs::rename(tmp, path);
}

}  // namespace

EvalSummary evaluate(const EvalJob& job) {
  if (!job.snapshots || !job.env || !job.model) {
    throw ConfigError("evaluation job is incomplete");
  }
  const std::string condition = job.condition.label();
  const std::string model_id = job.model->id();
  const PromptBuilder builder(*job.env, job.tables);

  EvalSummary sum;
  std::vector<const Snapshot*> todo_all;
  std::unordered_map<std::string, std::size_t> order;
  for (const auto& s : *job.snapshots) {
    if (!scorable(s)) {
      ++sum.skipped_ties;
      continue;
    }
    order.emplace(s.id, todo_all.size());
    todo_all.push_back(&s);
  }
  sum.total = todo_all.size();
  if (!todo_all.empty()) builder.validate(todo_all.front()->kind, job.condition);

  // Resume: keep records of this (condition, model) for known snapshots.
  auto record_lines = clean_lines(job.records);
  auto transcript_lines = clean_lines(job.transcript);
  std::set<std::string> done;
  {
    std::vector<std::string> kept;
    std::size_t line_no = 0;
    for (const auto& line : record_lines) {
      ++line_no;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        if (line_no == record_lines.size()) break;  // torn final line
        throw SchemaError(job.records.string() + ": line " +
                              std::to_string(line_no) + " is not JSON",
                          line_no, "<record>");
      }
      EvalRecord r = record_from_json(j, line_no);
      if (r.dataset_version != job.dataset_version) {
        throw ConfigError(job.records.string() +
                          " was produced from another dataset version");
      }
      if (r.condition != condition || r.model != model_id ||
          !order.count(r.snapshot_id) || !done.insert(r.snapshot_id).second) {
        continue;
      }
      kept.push_back(line);
    }
    record_lines = std::move(kept);
    std::vector<std::string> tkept;
    std::set<std::string> tseen;
    for (const auto& line : transcript_lines) {
      try {
        const json j = json::parse(line);
        const auto id = j.at("snapshot_id").get<std::string>();
        if (done.count(id) && tseen.insert(id).second) tkept.push_back(line);
      } catch (const json::exception&) {
      }
    }
    transcript_lines = std::move(tkept);
  }
  sum.resumed = done.size();
  write_lines(job.records, record_lines);
  write_lines(job.transcript, transcript_lines);

  std::vector<const Snapshot*> pending;
  for (const Snapshot* s : todo_all) {
    if (!done.count(s->id)) pending.push_back(s);
  }
  if (!pending.empty() && job.model->remote()) job.model->probe();

  std::ofstream rec_out(job.records, std::ios::binary | std::ios::app);
  std::ofstream tr_out(job.transcript, std::ios::binary | std::ios::app);
  if (!rec_out || !tr_out) throw ConfigError("cannot append to eval outputs");

  std::mutex io;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> written{0};
  std::atomic<std::size_t> failures{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;

  auto worker = [&] {
    while (!stop) {
      const std::size_t i = next++;
      if (i >= pending.size()) return;
      const Snapshot& s = *pending[i];
      try {
        const PromptBundle bundle = builder.build(s, job.condition);
        std::string raw;
        std::string transport_error;
        try {
          raw = job.model->query(bundle, QueryContext{s, *job.env});
        } catch (const TransportError& e) {
          transport_error = e.what();
          ++failures;
        }
        EvalRecord r = score_response(job, s, raw, !transport_error.empty());
        json t{{"snapshot_id", s.id},
               {"condition", condition},
               {"model", model_id},
               {"prompt", bundle.text},
               {"response", raw}};
        if (!transport_error.empty()) t["transport_error"] = transport_error;
        std::lock_guard lock(io);
        if (stop) return;
        tr_out << t.dump() << '\n';
        tr_out.flush();
        rec_out << to_json(r).dump() << '\n';
        rec_out.flush();
        if (++written >= job.stop_after) stop = true;
      } catch (...) {
        std::lock_guard lock(io);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(job.concurrency, static_cast<int>(pending.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  rec_out.close();
  tr_out.close();
  if (first_error) std::rethrow_exception(first_error);
  sum.written = written;
  sum.transport_failures = failures;
  if (sum.resumed + sum.written < sum.total) return sum;

  // Canonical form: dataset order, independent of thread timing and of
  // how many times the run was interrupted.
  auto sort_by_dataset = [&](std::vector<std::string> lines) {
    std::vector<std::pair<std::size_t, std::string>> keyed;
    for (auto& l : lines) {
      const auto id = json::parse(l).at("snapshot_id").get<std::string>();
      keyed.emplace_back(order.at(id), std::move(l));
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> out;
    for (auto& [k, l] : keyed) out.push_back(std::move(l));
    return out;
  };
  write_lines(job.records, sort_by_dataset(clean_lines(job.records)));
  write_lines(job.transcript, sort_by_dataset(clean_lines(job.transcript)));
  sum.complete = true;
  return sum;
}

}  // namespace fbh
