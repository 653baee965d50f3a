#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "fbharness/mdp.hpp"
#include "fbharness/snapshot.hpp"

namespace fbh {

enum class ErrorClass { Format, IllegalValue };
std::string_view to_string(ErrorClass e);
std::optional<ErrorClass> parse_error_class(std::string_view text);

/// Feedback extracted from a raw model response. Exactly one of `error`
/// and the kind's payload fields is meaningful.
struct ParsedFeedback {
  FeedbackKind kind = FeedbackKind::Binary;
  std::optional<ErrorClass> error;
  std::string text;  // YES/NO, FIRST/SECOND, or an action name
  int row = 0, column = 0;
  int index = -1;    // delta: chosen action id
  std::array<double, 3> delta{};
  bool close = false;

  bool ok() const { return !error; }
  json to_json() const;
};

/// The last top-level JSON object in `text`, if any parses.
std::optional<json> last_json_object(std::string_view text);

/// Total over text: malformed answers come back as error classes.
ParsedFeedback parse_feedback(FeedbackKind kind, std::string_view raw,
                              const Snapshot& snapshot,
                              const Environment& env);

struct Score {
  bool correct = false;
  std::optional<ErrorClass> error;
};
/// Throws Error when the parse and the label disagree on the kind.
Score score(const ParsedFeedback& parsed, const Snapshot& snapshot);

/// A response the ground truth would accept, in the answer contract's JSON.
std::string oracle_answer(const Snapshot& snapshot,
                          std::string_view reasoning = "");

/// Collapses runs of whitespace and trims both ends.
std::string normalize_space(std::string_view s);

}  // namespace fbh
