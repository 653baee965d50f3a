#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace fbh {

enum class FeedbackKind { Binary, Action, Preference, Goal, Delta };

enum class SamplingPolicyKind { Expert, Random, HalfExpert, Exhaustive };

inline constexpr std::array kAllFeedbackKinds = {
    FeedbackKind::Binary, FeedbackKind::Action, FeedbackKind::Preference,
    FeedbackKind::Goal, FeedbackKind::Delta};

// Wire spellings are fixed by docs/schema.md.
std::string_view to_string(FeedbackKind kind);
std::string_view to_string(SamplingPolicyKind policy);

std::optional<FeedbackKind> parse_feedback_kind(std::string_view text);
std::optional<SamplingPolicyKind> parse_policy(std::string_view text);

/// Which snapshot fields a feedback kind requires.
inline bool needs_single_action(FeedbackKind k) {
  return k == FeedbackKind::Binary || k == FeedbackKind::Delta;
}
inline bool needs_action_pair(FeedbackKind k) {
  return k == FeedbackKind::Preference;
}

}  // namespace fbh
