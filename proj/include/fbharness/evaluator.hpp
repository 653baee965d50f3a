#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fbharness/feedback_model.hpp"
#include "fbharness/metrics.hpp"
#include "fbharness/prompting.hpp"

namespace fbh {

class OracleTables;

struct EvalJob {
  std::string dataset;          // stem
  std::string dataset_version;
  const std::vector<Snapshot>* snapshots = nullptr;
  const Environment* env = nullptr;
  const OracleTables* tables = nullptr;  // for generated ICL examples
  ConditionSet condition;
  const FeedbackModel* model = nullptr;
  std::filesystem::path records;     // record JSONL
  std::filesystem::path transcript;  // raw prompt/response JSONL
  int concurrency = 1;
  /// Stop after this many new records without finalizing, as if killed.
  std::size_t stop_after = std::numeric_limits<std::size_t>::max();
};

struct EvalSummary {
  std::size_t total = 0;     // scorable snapshots
  std::size_t resumed = 0;   // already present on disk
  std::size_t written = 0;   // produced by this call
  std::size_t skipped_ties = 0;
  std::size_t transport_failures = 0;
  bool complete = false;
};

/// Tied preference pairs have no correct answer and are not queried.
bool scorable(const Snapshot& s);

/// Prompts, parses and scores every pending snapshot. Records already in
/// `job.records` are kept, so an interrupted run continues where it
/// stopped. On completion both files are rewritten in dataset order.
/// A remote model is probed first; TransportError aborts before any query.
EvalSummary evaluate(const EvalJob& job);

/// Scores one raw response (no I/O).
EvalRecord score_response(const EvalJob& job, const Snapshot& snapshot,
                          const std::string& raw, bool transport_failed);

/// FNV-1a of the bytes, as 16 hex digits.
std::string content_version(std::string_view bytes);

}  // namespace fbh
