#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lethe/conflict.hpp"
#include "lethe/model.hpp"

namespace lethe {

struct UnlearnConfig {
  double alpha = 0.1;
  int max_iters = 500;
  // Target influence; nullopt means chance level ln(1 / (|V| - 1)).
  std::optional<double> influence_threshold;
  // false: raw gradient steps, a single normalization of the final embedding.
  bool normalize_each_step = true;

  // Throws InvalidConfig.
  void validate() const;
  double threshold_for(const AssociationModel& model) const;
};

enum class StopReason { AlreadyForgotten, Converged, BudgetExhausted, NoProgress };

std::string_view to_string(StopReason reason) noexcept;

struct UnlearnReport {
  ConceptId target;
  int iterations_run = 0;
  double initial_influence = 0.0;
  double final_influence = 0.0;
  double threshold = 0.0;
  double alpha = 0.0;
  bool converged = false;
  StopReason stop_reason = StopReason::BudgetExhausted;
  // Step halvings taken across the whole run.
  int halvings = 0;
  // Influence after each accepted step (excludes the initial value).
  std::vector<double> trace;
  // nullopt when the related probe set is empty (vacuous evaluation).
  std::optional<ConflictReport> conflict;
};

// Maximum consecutive halvings before a step is declared NoProgress.
inline constexpr int kMaxHalvings = 20;

/// One corruption step: e_c <- normalize(e_c - alpha * grad L(e_c)).
/// Every other embedding is copied bit-for-bit. Throws DegenerateStep when
/// the update is the zero vector, plus the errors of influence().
AssociationModel eco_step(const AssociationModel& model, ConceptId target,
                          std::span<const Probe> forget_probes, double alpha);

/// Repeats corruption steps until influence <= threshold or the iteration
/// budget runs out. A step that does not strictly lower influence is retried
/// with half the step size, up to kMaxHalvings times; after that the run stops
/// with StopReason::NoProgress. Only the target embedding differs in the
/// returned model and final_influence <= initial_influence.
std::pair<AssociationModel, UnlearnReport> unlearn_concept(
    const AssociationModel& model, ConceptId target, const ProbeSet& probes,
    const UnlearnConfig& config);

struct RefinementPolicy {
  double conflict_floor = 0.9;
  int max_rounds = 3;
};

struct RefinedUnlearn {
  AssociationModel model;
  UnlearnReport report;
  // Re-runs after the first attempt, each from the input model with alpha halved.
  int refinement_rounds = 0;
  // false when the conflict score stayed below the floor after every round.
  bool conflict_resolved = true;
};

// unlearn_concept followed by conflict-driven refinement: while the score of
// the related probes is below the floor, redo the erasure from `model` with
// half the previous alpha, at most policy.max_rounds times. An empty related
// set does not trigger refinement.
RefinedUnlearn unlearn_with_refinement(const AssociationModel& model,
                                       ConceptId target, const ProbeSet& probes,
                                       const UnlearnConfig& config,
                                       const RefinementPolicy& policy);

}  // namespace lethe
