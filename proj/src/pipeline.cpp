#include "fbharness/pipeline.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "fbharness/errors.hpp"
#include "fbharness/feedback_model.hpp"
#include "fbharness/json_util.hpp"
#include "fbharness/oracle.hpp"
#include "fbharness/registry.hpp"

namespace fbh {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

// -- RunConfig ------------------------------------------------------------------

RunConfig RunConfig::from_json(const json& j) {
  const std::string ctx = "run config";
  require_known_keys(j,
                     {"seed", "output_dir", "datasets", "conditions", "models",
                      "concurrency"},
                     ctx);
  RunConfig c;
  c.seed = get_field_or<std::uint64_t>(j, "seed", 0, ctx);
  c.output_dir = get_field_or<std::string>(j, "output_dir", "runs/default", ctx);
  c.concurrency = get_field_or<int>(j, "concurrency", 4, ctx);
  if (c.concurrency < 1) throw ConfigError(ctx + ": concurrency must be >= 1");

  const json datasets = get_field<json>(j, "datasets", ctx);
  if (!datasets.is_array() || datasets.empty()) {
    throw ConfigError(ctx + ": 'datasets' must be a non-empty list");
  }
  std::set<std::string> stems;
  for (const auto& entry : datasets) {
    if (!entry.is_object()) throw ConfigError(ctx + ": dataset must be an object");
    auto list = [&](const char* many, const char* one) {
      std::vector<std::string> out;
      if (entry.contains(many) && entry.contains(one)) {
        throw ConfigError(ctx + ": give either '" + many + "' or '" + one + "'");
      }
      if (entry.contains(many)) {
        out = get_field<std::vector<std::string>>(entry, many, ctx);
      } else {
        out.push_back(get_field<std::string>(entry, one, ctx));
      }
      if (out.empty()) throw ConfigError(ctx + ": empty '" + many + "'");
      return out;
    };
    const auto domains = list("domains", "domain");
    const auto kinds = list("kinds", "kind");
    for (const auto& d : domains) {
      if (std::find(domain_names().begin(), domain_names().end(), d) ==
          domain_names().end()) {
        throw ConfigError(ctx + ": unknown domain '" + d + "'");
      }
      for (const auto& k : kinds) {
        json one = entry;
        one.erase("domains");
        one.erase("kinds");
        one["domain"] = d;
        one["kind"] = k;
        if (!one.contains("seed")) one["seed"] = c.seed;
        DatasetSpec spec = DatasetSpec::from_json(one);
        if (!shared_environment(d)->supports(spec.kind)) {
          throw ConfigError(ctx + ": " + d + " has no " + k + " feedback");
        }
        if (!stems.insert(spec.stem()).second) {
          throw ConfigError(ctx + ": dataset " + spec.stem() + " listed twice");
        }
        c.datasets.push_back(std::move(spec));
      }
    }
  }

  if (j.contains("conditions")) {
    c.conditions.clear();
    std::set<std::string> labels;
    for (const auto& cj : get_field<json>(j, "conditions", ctx)) {
      ConditionSet cs = ConditionSet::from_json(cj);
      if (!labels.insert(cs.label()).second) {
        throw ConfigError(ctx + ": condition " + cs.label() + " listed twice");
      }
      c.conditions.push_back(cs);
    }
    if (c.conditions.empty()) throw ConfigError(ctx + ": no conditions");
  }
  if (j.contains("models")) {
    c.models.clear();
    std::set<std::string> ids;
    for (const auto& mj : get_field<json>(j, "models", ctx)) {
      const auto model = make_model(mj);  // validates the descriptor
      if (!ids.insert(model->id()).second) {
        throw ConfigError(ctx + ": model " + model->id() + " listed twice");
      }
      c.models.push_back(mj);
    }
    if (c.models.empty()) throw ConfigError(ctx + ": no models");
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j{{"seed", seed},
         {"output_dir", output_dir.string()},
         {"concurrency", concurrency},
         {"datasets", json::array()},
         {"conditions", json::array()},
         {"models", models}};
  for (const auto& d : datasets) j["datasets"].push_back(d.to_json());
  for (const auto& c : conditions) j["conditions"].push_back(c.to_json());
  return j;
}

// -- solve ----------------------------------------------------------------------

json SolveSummary::to_json() const {
  return json{{"domain", domain},
              {"states", states},
              {"terminal", terminal},
              {"solvable_nonterminal", solvable_nonterminal},
              {"max_distance", max_distance}};
}

SolveSummary cmd_solve(const std::string& domain,
                       const std::optional<fs::path>& out_dir) {
  const auto tables = solve(shared_environment(domain));
  SolveSummary s;
  s.domain = domain;
  s.states = tables.size();
  for (char t : tables.graph().terminal) s.terminal += t != 0;
  s.solvable_nonterminal = tables.solvable_nonterminal_count();
  s.max_distance = tables.max_distance();
  if (out_dir) {
    std::ostringstream dump;
    tables.dump_jsonl(dump);
    write_file(*out_dir / (domain + ".tables.jsonl"), dump.str());
    write_file(*out_dir / (domain + ".summary.json"), s.to_json().dump(2) + "\n");
  }
  return s;
}

// -- gen ------------------------------------------------------------------------

namespace {

class TableCache {
 public:
  const OracleTables& get(const std::string& domain) {
    auto it = tables_.find(domain);
    if (it == tables_.end()) {
      it = tables_
               .emplace(domain, std::make_unique<OracleTables>(
                                    solve(shared_environment(domain))))
               .first;
    }
    return *it->second;
  }

 private:
  std::map<std::string, std::unique_ptr<OracleTables>> tables_;
};

fs::path dataset_path(const fs::path& out, const std::string& stem) {
  return out / "datasets" / (stem + ".jsonl");
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return s;
}

}  // namespace

json cmd_gen(const RunConfig& config) {
  TableCache cache;
  json manifest{{"seed", config.seed}, {"datasets", json::array()}};
  std::string all_versions;
  for (const auto& spec : config.datasets) {
    const auto& tables = cache.get(spec.domain);
    const BuildResult res = build(tables, spec);
    const std::string text = to_jsonl(res.snapshots);
    const fs::path file = dataset_path(config.output_dir, spec.stem());
    write_file(file, text);
    std::size_t n_scorable = 0;
    for (const auto& s : res.snapshots) n_scorable += scorable(s);
    const std::string version = content_version(text);
    all_versions += version;
    manifest["datasets"].push_back(
        {{"stem", spec.stem()},
         {"file", fs::path("datasets") / (spec.stem() + ".jsonl")},
         {"count", res.snapshots.size()},
         {"scorable", n_scorable},
         {"states", res.states},
         {"enumerated", res.enumerated},
         {"ties_excluded", res.ties_excluded},
         {"filtered", res.filtered},
         {"version", version},
         {"spec", spec.to_json()}});
  }
  manifest["version"] = content_version(all_versions);
  write_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

// -- eval -----------------------------------------------------------------------

namespace {

json load_manifest(const fs::path& out) {
  const fs::path path = out / "manifest.json";
  if (!fs::exists(path)) {
    throw ConfigError("no manifest at " + path.string() + "; run gen first");
  }
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

const json& manifest_entry(const json& manifest, const std::string& stem) {
  for (const auto& d : manifest.at("datasets")) {
    if (d.at("stem") == stem) return d;
  }
  throw ConfigError("dataset " + stem + " is not in the manifest; run gen");
}

}  // namespace

std::vector<EvalRun> cmd_eval(const RunConfig& config,
                              const EvalOptions& options) {
  const json manifest = load_manifest(config.output_dir);
  std::vector<std::unique_ptr<FeedbackModel>> models;
  for (const auto& d : config.models) {
    auto m = make_model(d);
    if (options.only_models.empty() ||
        std::find(options.only_models.begin(), options.only_models.end(),
                  m->id()) != options.only_models.end()) {
      models.push_back(std::move(m));
    }
  }
  if (models.empty()) throw ConfigError("no model selected");
  // Endpoints are checked before any work so a bad key costs nothing.
  for (const auto& m : models) {
    if (m->remote()) m->probe();
  }

  TableCache cache;
  std::vector<EvalRun> runs;
  std::size_t budget = options.stop_after;
  for (const auto& spec : config.datasets) {
    const json& entry = manifest_entry(manifest, spec.stem());
    const fs::path file = config.output_dir / entry.at("file").get<std::string>();
    const std::string text = read_file(file);
    const std::string version = content_version(text);
    if (version != entry.at("version").get<std::string>()) {
      throw ConfigError(file.string() + " changed since gen (version mismatch)");
    }
    const auto snapshots = parse_jsonl(text);
    const auto env = shared_environment(spec.domain);
    const OracleTables& tables = cache.get(spec.domain);
    const PromptBuilder builder(*env, &tables);
    for (const auto& cond : config.conditions) {
      for (const auto& model : models) {
        EvalRun run;
        run.dataset = spec.stem();
        run.condition = cond.label();
        run.model = model->id();
        const fs::path dir = config.output_dir / "records" / spec.stem() /
                             safe_name(cond.label());
        run.records = dir / (safe_name(model->id()) + ".jsonl");
        try {
          builder.validate(spec.kind, cond);
        } catch (const ConfigError& e) {
          run.skipped = e.what();
          runs.push_back(std::move(run));
          continue;
        }
        if (budget == 0) return runs;
        EvalJob job;
        job.dataset = spec.stem();
        job.dataset_version = version;
        job.snapshots = &snapshots;
        job.env = env.get();
        job.tables = &tables;
        job.condition = cond;
        job.model = model.get();
        job.records = run.records;
        job.transcript = dir / (safe_name(model->id()) + ".transcript.jsonl");
        job.concurrency = options.concurrency.value_or(config.concurrency);
        job.stop_after = budget;
        run.summary = evaluate(job);
        if (budget != std::numeric_limits<std::size_t>::max()) {
          budget -= std::min(budget, run.summary.written);
        }
        const bool done = run.summary.complete;
        runs.push_back(std::move(run));
        if (!done) return runs;  // interrupted
      }
    }
  }
  return runs;
}

// -- report ---------------------------------------------------------------------

namespace {

void write_reports(const Report& report, const fs::path& dir,
                   const std::string& baseline) {
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(dir / "report.txt", report.text_table());
  write_file(dir / "report.csv", report.csv());

  std::set<std::string> conditions;
  for (const auto& c : report.cells) conditions.insert(c.key.condition);
  if (!conditions.count(baseline) || conditions.size() < 2) return;
  const Report base = select_condition(report, baseline);
  json all = json::array();
  std::string text;
  for (const auto& cond : conditions) {
    if (cond == baseline) continue;
    const auto deltas = diff_reports(base, select_condition(report, cond));
    for (auto& d : to_json(deltas)) all.push_back(std::move(d));
    text += cond + " vs " + baseline + "\n" + diff_table(deltas) + "\n";
  }
  write_file(dir / "diff.json", all.dump(2) + "\n");
  write_file(dir / "diff.txt", text);
}

}  // namespace

Report cmd_report_files(const std::vector<fs::path>& files,
                        const fs::path& reports_dir,
                        const std::string& baseline) {
  std::vector<EvalRecord> records;
  for (const auto& f : files) {
    auto part = read_records(f);
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  if (records.empty()) throw ConfigError("no records found");
  const Report report = aggregate(records);
  write_reports(report, reports_dir, baseline);
  return report;
}

Report cmd_report(const fs::path& output_dir, const std::string& baseline) {
  const fs::path root = output_dir / "records";
  std::vector<fs::path> files;
  if (fs::exists(root)) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && e.path().extension() == ".jsonl" &&
          name.find(".transcript.") == std::string::npos) {
        files.push_back(e.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no record files under " + root.string());

  std::vector<EvalRecord> records;
  for (const auto& f : files) {
    auto part = read_records(f);
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  if (records.empty()) throw ConfigError("no records found");
  const Report report = aggregate(records);
  if (fs::exists(output_dir / "manifest.json")) {
    const json manifest = load_manifest(output_dir);
    for (const auto& c : report.cells) {
      const json& entry = manifest_entry(manifest, c.dataset);
      if (entry.at("version") != report.dataset_versions.at(c.dataset)) {
        throw ConfigError("records for " + c.dataset +
                          " belong to an older dataset version");
      }
      const auto expected = entry.at("scorable").get<std::size_t>();
      if (c.n != expected) {
        throw ConfigError("cell " + c.dataset + " / " + c.key.condition +
                          " / " + c.key.model + " has " + std::to_string(c.n) +
                          " records, expected " + std::to_string(expected) +
                          " (incomplete eval?)");
      }
    }
  }
  write_reports(report, output_dir / "reports", baseline);
  return report;
}

// -- verbalize ------------------------------------------------------------------

std::string cmd_verbalize(const fs::path& dataset_file,
                          const std::string& snapshot_id,
                          const ConditionSet& condition) {
  const auto snapshots = read_jsonl(dataset_file);
  for (const auto& s : snapshots) {
    if (s.id != snapshot_id) continue;
    const auto env = shared_environment(s.domain);
    std::optional<OracleTables> tables;
    if (condition.icl > 0 && condition.icl_generated) tables.emplace(solve(env));
    const PromptBuilder builder(*env, tables ? &*tables : nullptr);
    return builder.build(s, condition).text;
  }
  throw ConfigError("no snapshot '" + snapshot_id + "' in " +
                    dataset_file.string());
}

}  // namespace fbh
