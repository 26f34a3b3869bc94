#pragma once

#include <span>
#include <utility>
#include <vector>

#include "lethe/model.hpp"

namespace lethe {

// Probes for one erasure target: `forget` exercises the unwanted concept,
// `related` exercises neighbouring knowledge that must survive.
struct ProbeSet {
  ConceptId target;
  std::vector<Probe> forget;
  std::vector<Probe> related;
};

struct ProbeFailure {
  Probe probe;
  ConceptId actual;
};

struct ConflictReport {
  double score = 0.0;
  std::size_t total = 0;
  std::size_t passed = 0;
  std::vector<ProbeFailure> failures;
};

// Fraction of related probes whose prediction matches the expected output.
// Throws EmptyProbeSet: the score is undefined for an empty set.
ConflictReport conflict_score(const AssociationModel& model,
                              std::span<const Probe> related);

/// Synthetic probes derived from the fact base, in fact order.
///
/// forget:  one probe per fact incident to `target` (subject -> object).
/// related: one probe per fact that shares a category with some target fact,
///          does not involve the target, and is predicted correctly by the
///          current model. Its conflict score on `model` is therefore 1.
///
/// Throws UnknownConcept or TargetHasNoFacts.
ProbeSet generate_probes(const AssociationModel& model, ConceptId target);

}  // namespace lethe
