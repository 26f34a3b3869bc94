#include "lethe/privacy.hpp"

#include <algorithm>

#include "lethe/error.hpp"

namespace lethe {

void Sample::validate() const {
  for (const FeatureToken& token : tokens) {
    if (token.index >= static_cast<std::size_t>(features.size())) {
      fail(Errc::MalformedRequest,
           "token index " + std::to_string(token.index) + " is outside a feature "
               "vector of length " + std::to_string(features.size()));
    }
  }
  if (!features.allFinite()) fail(Errc::MalformedRequest, "features must be finite");
}

std::string_view to_string(GateMode mode) noexcept {
  return mode == GateMode::Training ? "TRAINING" : "INFERENCE";
}

std::string_view to_string(GateAction action) noexcept {
  switch (action) {
    case GateAction::Accept: return "ACCEPT";
    case GateAction::Reject: return "REJECT";
    case GateAction::AcceptAndScheduleErasure: return "ACCEPT_AND_SCHEDULE_ERASURE";
  }
  return "UNKNOWN";
}

SensitivityMask detect_sensitive(const Sample& sample, const PrivacyPolicy& policy) {
  SensitivityMask mask;
  std::set<std::string> rules;
  std::set<Eigen::Index> flagged;
  for (const std::string& category : sample.categories) {
    if (policy.excluded_categories.count(category)) {
      rules.insert("category:" + category);
      for (Eigen::Index i = 0; i < sample.features.size(); ++i) flagged.insert(i);
    }
  }
  for (const FeatureToken& token : sample.tokens) {
    if (policy.sensitive_lexicon.count(token.label)) {
      rules.insert("lexicon:" + token.label);
      flagged.insert(static_cast<Eigen::Index>(token.index));
    }
  }
  mask.indices.assign(flagged.begin(), flagged.end());
  mask.matched_rules.assign(rules.begin(), rules.end());
  return mask;
}

double privacy_loss(const Sample& sample, const SensitivityMask& mask, double lambda) {
  return privacy_loss(sample.features, mask.indices, lambda);
}

GateDecision gate(const Sample& sample, const PrivacyPolicy& policy, GateMode mode) {
  policy.validate();
  sample.validate();
  GateDecision decision;
  decision.policy_id = policy.subject_id;
  decision.mask = detect_sensitive(sample, policy);
  decision.privacy_loss = privacy_loss(sample, decision.mask, policy.lambda);
  if (decision.privacy_loss > policy.theta) {
    decision.action = mode == GateMode::Training ? GateAction::Reject
                                                 : GateAction::AcceptAndScheduleErasure;
  }
  return decision;
}

}  // namespace lethe
