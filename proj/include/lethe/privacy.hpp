#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lethe/policy.hpp"

namespace lethe {

struct FeatureToken {
  std::size_t index = 0;
  std::string label;
};

// An incoming data sample: a feature vector plus label annotations.
struct Sample {
  std::string subject_id;
  Eigen::VectorXd features;
  std::vector<FeatureToken> tokens;
  std::set<std::string> categories;

  // Throws MalformedRequest when a token points past the feature vector.
  void validate() const;
};

struct SensitivityMask {
  std::vector<Eigen::Index> indices;  // ascending, unique
  std::vector<std::string> matched_rules;
};

enum class GateMode { Training, Inference };
enum class GateAction { Accept, Reject, AcceptAndScheduleErasure };

std::string_view to_string(GateMode mode) noexcept;
std::string_view to_string(GateAction action) noexcept;

struct GateDecision {
  double privacy_loss = 0.0;
  GateAction action = GateAction::Accept;
  std::string policy_id;
  SensitivityMask mask;
};

// Lexicon rule: a token whose label is in the policy lexicon flags its index
// (rule id "lexicon:<label>"). Category rule: any sample category in the
// policy's excluded set flags every index (rule id "category:<name>").
SensitivityMask detect_sensitive(const Sample& sample, const PrivacyPolicy& policy);

// lambda * squared norm of the features selected by `indices`.
template <typename Derived>
typename Derived::Scalar privacy_loss(const Eigen::MatrixBase<Derived>& features,
                                      const std::vector<Eigen::Index>& indices,
                                      typename Derived::Scalar lambda) {
  if (indices.empty()) return typename Derived::Scalar(0);
  return lambda * features(indices).squaredNorm();
}

double privacy_loss(const Sample& sample, const SensitivityMask& mask, double lambda);

// ACCEPT when the loss does not exceed theta; otherwise REJECT in training
// mode and ACCEPT_AND_SCHEDULE_ERASURE in inference mode. Pure: logging and
// queueing belong to the caller.
GateDecision gate(const Sample& sample, const PrivacyPolicy& policy, GateMode mode);

}  // namespace lethe
