#include "lethe/unlearn.hpp"

#include <cmath>

#include "lethe/error.hpp"
#include "lethe/kernels.hpp"

namespace lethe {

void UnlearnConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    fail(Errc::InvalidConfig, "alpha must be positive");
  }
  if (max_iters < 0) fail(Errc::InvalidConfig, "max_iters must be non-negative");
  if (influence_threshold &&
      !(*influence_threshold < 0.0 && std::isfinite(*influence_threshold))) {
    fail(Errc::InvalidConfig, "influence_threshold must be negative");
  }
}

double UnlearnConfig::threshold_for(const AssociationModel& model) const {
  return influence_threshold ? *influence_threshold : chance_level(model);
}

std::string_view to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::AlreadyForgotten: return "ALREADY_FORGOTTEN";
    case StopReason::Converged: return "CONVERGED";
    case StopReason::BudgetExhausted: return "BUDGET_EXHAUSTED";
    case StopReason::NoProgress: return "NO_PROGRESS";
  }
  return "UNKNOWN";
}

AssociationModel eco_step(const AssociationModel& model, ConceptId target,
                          std::span<const Probe> forget_probes, double alpha) {
  if (!(alpha > 0.0)) fail(Errc::InvalidConfig, "alpha must be positive");
  const Vector grad = grad_influence(model, target, forget_probes);
  Vector next;
  if (!kernels::corruption_step(model.embedding(target), grad, alpha, next)) {
    fail(Errc::DegenerateStep, "corruption step produced the zero vector for " +
                                   model.name(target));
  }
  return model.with_embedding(target, next);
}

std::pair<AssociationModel, UnlearnReport> unlearn_concept(
    const AssociationModel& model, ConceptId target, const ProbeSet& probes,
    const UnlearnConfig& config) {
  config.validate();
  model.check(target);
  const std::span<const Probe> forget = probes.forget;

  UnlearnReport report;
  report.target = target;
  report.alpha = config.alpha;
  report.threshold = config.threshold_for(model);
  report.initial_influence = influence(model, target, forget);

  // `iterate` is the carried embedding (unit norm unless the literal
  // normalize-at-end mode is on); `unit` is its normalized form, on which
  // influence is always measured.
  Vector iterate = model.embedding(target);
  Vector unit = iterate;
  double current = report.initial_influence;

  if (current <= report.threshold) {
    report.stop_reason = StopReason::AlreadyForgotten;
  } else {
    report.stop_reason = StopReason::BudgetExhausted;
    while (report.iterations_run < config.max_iters) {
      const Vector grad = grad_influence_at(model, target, iterate, forget);
      double step = config.alpha;
      bool accepted = false;
      for (int halving = 0; halving <= kMaxHalvings; ++halving) {
        if (halving > 0) {
          step *= 0.5;
          ++report.halvings;
        }
        Vector raw = iterate - step * grad;
        const double norm = raw.norm();
        if (norm == 0.0 || !std::isfinite(norm)) continue;  // degenerate: halve
        Vector candidate_unit = raw / norm;
        const double candidate = influence_at(model, target, candidate_unit, forget);
        if (candidate < current) {
          iterate = config.normalize_each_step ? candidate_unit : std::move(raw);
          unit = std::move(candidate_unit);
          current = candidate;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        report.stop_reason = StopReason::NoProgress;
        break;
      }
      ++report.iterations_run;
      report.trace.push_back(current);
      if (current <= report.threshold) {
        report.stop_reason = StopReason::Converged;
        break;
      }
    }
  }

  AssociationModel out =
      report.iterations_run == 0 ? model : model.with_embedding(target, unit);
  report.final_influence = current;
  report.converged = report.final_influence <= report.threshold;
  if (!probes.related.empty()) {
    report.conflict = conflict_score(out, probes.related);
  }
  return {std::move(out), std::move(report)};
}

RefinedUnlearn unlearn_with_refinement(const AssociationModel& model,
                                       ConceptId target, const ProbeSet& probes,
                                       const UnlearnConfig& config,
                                       const RefinementPolicy& policy) {
  UnlearnConfig attempt = config;
  auto [first_model, first_report] = unlearn_concept(model, target, probes, attempt);
  RefinedUnlearn result{std::move(first_model), std::move(first_report), 0, true};
  while (result.report.conflict &&
         result.report.conflict->score < policy.conflict_floor) {
    if (result.refinement_rounds >= policy.max_rounds) {
      result.conflict_resolved = false;
      break;
    }
    attempt.alpha *= 0.5;
    ++result.refinement_rounds;
    auto [next_model, next_report] = unlearn_concept(model, target, probes, attempt);
    result.model = std::move(next_model);
    result.report = std::move(next_report);
  }
  return result;
}

}  // namespace lethe
