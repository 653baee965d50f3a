// Command-line driver: solve, gen, eval, report, verbalize.

#include <iostream>

#include <CLI11.hpp>

#include "fbharness/errors.hpp"
#include "fbharness/pipeline.hpp"
#include "fbharness/registry.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kEndpoint = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fbh::RunConfig load_config(const std::string& path,
                           const std::string& output_dir,
                           const std::optional<std::uint64_t>& seed) {
  fbh::json j;
  try {
    j = fbh::json::parse(fbh::read_file(path));
  } catch (const fbh::json::parse_error& e) {
    throw fbh::ConfigError(path + ": " + e.what());
  }
  // Flags override config scalars. The seed also flows into datasets that
  // do not pin their own.
  if (seed) j["seed"] = *seed;
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  return fbh::RunConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback-model evaluation harness"};
  app.require_subcommand(1);

  std::string domain, out, config_path, output_dir, baseline = "baseline";
  std::string dataset, snapshot_id, condition_text = "{}";
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
  std::size_t stop_after = 0;
  std::vector<std::string> models, record_files;

  auto* solve = app.add_subcommand("solve", "Solve a domain and dump its tables");
  solve->add_option("domain", domain, "Domain name")->required();
  solve->add_option("-o,--out", out, "Directory for the table dump");

  auto* gen = app.add_subcommand("gen", "Build the datasets of a run config");
  gen->add_option("config", config_path, "Run config (JSON)")
      ->required()->check(CLI::ExistingFile);
  gen->add_option("--output-dir", output_dir, "Override output_dir");
  gen->add_option("--seed", seed, "Override the global seed");

  auto* eval = app.add_subcommand("eval", "Query models on generated datasets");
  eval->add_option("config", config_path, "Run config (JSON)")
      ->required()->check(CLI::ExistingFile);
  eval->add_option("--output-dir", output_dir, "Override output_dir");
  eval->add_option("--concurrency", concurrency, "Parallel queries")
      ->check(CLI::PositiveNumber);
  eval->add_option("--model", models, "Only evaluate these model ids");
  eval->add_option("--stop-after", stop_after,
                   "Stop after this many new records (resume later)");

  auto* report = app.add_subcommand("report", "Aggregate records into reports");
  report->add_option("run_dir", out, "Run output directory");
  report->add_option("--records", record_files, "Explicit record files")
      ->check(CLI::ExistingFile);
  report->add_option("--reports-dir", output_dir,
                     "Where to write reports for --records");
  report->add_option("--baseline", baseline, "Condition label to diff against");

  auto* verbalize = app.add_subcommand("verbalize", "Print the prompt of a snapshot");
  verbalize->add_option("dataset", dataset, "Dataset JSONL file")
      ->required()->check(CLI::ExistingFile);
  verbalize->add_option("snapshot_id", snapshot_id, "Snapshot id")->required();
  verbalize->add_option("--condition", condition_text,
                        "Condition set as JSON, e.g. '{\"icl\": 3}'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*solve) {
      const auto& names = fbh::domain_names();
      if (std::find(names.begin(), names.end(), domain) == names.end()) {
        std::string known;
        for (const auto& n : names) known += " " + n;
        throw UsageError("unknown domain '" + domain + "'; known:" + known);
      }
      std::optional<fbh::fs::path> dir;
      if (!out.empty()) dir = out;
      std::cout << fbh::cmd_solve(domain, dir).to_json().dump(2) << "\n";
    } else if (*gen) {
      const auto config = load_config(config_path, output_dir, seed);
      const auto manifest = fbh::cmd_gen(config);
      for (const auto& d : manifest["datasets"]) {
        std::cout << d["stem"].get<std::string>() << ": " << d["count"]
                  << " snapshots from " << d["states"] << " states\n";
      }
      std::cout << "manifest: " << (config.output_dir / "manifest.json").string()
                << "\n";
    } else if (*eval) {
      const auto config = load_config(config_path, output_dir, std::nullopt);
      fbh::EvalOptions opt;
      opt.concurrency = concurrency;
      opt.only_models = models;
      if (stop_after > 0) opt.stop_after = stop_after;
      for (const auto& r : fbh::cmd_eval(config, opt)) {
        std::cout << r.dataset << " [" << r.condition << "] " << r.model << ": ";
        if (!r.skipped.empty()) {
          std::cout << "skipped (" << r.skipped << ")\n";
          continue;
        }
        std::cout << r.summary.resumed + r.summary.written << "/"
                  << r.summary.total << " records";
        if (r.summary.resumed) std::cout << " (" << r.summary.resumed << " resumed)";
        if (r.summary.transport_failures) {
          std::cout << ", " << r.summary.transport_failures
                    << " transport failures";
        }
        std::cout << (r.summary.complete ? "" : ", interrupted") << "\n";
      }
    } else if (*report) {
      fbh::Report rep;
      if (!record_files.empty()) {
        std::vector<fbh::fs::path> files(record_files.begin(), record_files.end());
        rep = fbh::cmd_report_files(files, output_dir.empty() ? "." : output_dir,
                                    baseline);
      } else if (!out.empty()) {
        rep = fbh::cmd_report(out, baseline);
      } else {
        throw UsageError("report needs a run directory or --records");
      }
      std::cout << rep.text_table();
    } else if (*verbalize) {
      fbh::json cj;
      try {
        cj = fbh::json::parse(condition_text);
      } catch (const fbh::json::parse_error& e) {
        throw UsageError(std::string("--condition is not JSON: ") + e.what());
      }
      std::cout << fbh::cmd_verbalize(dataset, snapshot_id,
                                      fbh::ConditionSet::from_json(cj));
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fbh::TransportError& e) {
    std::cerr << "endpoint error: " << e.what() << "\n";
    return kEndpoint;
  } catch (const fbh::SchemaError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fbh::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
