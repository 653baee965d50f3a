#include "fbharness/types.hpp"

namespace fbh {

std::string_view to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::Binary: return "binary";
    case FeedbackKind::Action: return "action";
    case FeedbackKind::Preference: return "preference";
    case FeedbackKind::Goal: return "goal";
    case FeedbackKind::Delta: return "delta";
  }
  return "?";
}

std::string_view to_string(SamplingPolicyKind policy) {
  switch (policy) {
    case SamplingPolicyKind::Expert: return "expert";
    case SamplingPolicyKind::Random: return "random";
    case SamplingPolicyKind::HalfExpert: return "half-expert";
    case SamplingPolicyKind::Exhaustive: return "exhaustive";
  }
  return "?";
}

std::optional<FeedbackKind> parse_feedback_kind(std::string_view text) {
  for (FeedbackKind k : kAllFeedbackKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::optional<SamplingPolicyKind> parse_policy(std::string_view text) {
  for (auto p : {SamplingPolicyKind::Expert, SamplingPolicyKind::Random,
                 SamplingPolicyKind::HalfExpert,
                 SamplingPolicyKind::Exhaustive}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

}  // namespace fbh
