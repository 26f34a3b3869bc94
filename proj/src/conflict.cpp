#include "lethe/conflict.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "lethe/error.hpp"

namespace lethe {

ConflictReport conflict_score(const AssociationModel& model,
                              std::span<const Probe> related) {
  if (related.empty()) {
    fail(Errc::EmptyProbeSet, "conflict score is undefined for an empty related set");
  }
  ConflictReport report;
  report.total = related.size();
  for (const Probe& probe : related) {
    const ConceptId actual = predict(model, probe.subject);
    if (actual == probe.expected) {
      ++report.passed;
    } else {
      report.failures.push_back({probe, actual});
    }
  }
  report.score =
      static_cast<double>(report.passed) / static_cast<double>(report.total);
  return report;
}

ProbeSet generate_probes(const AssociationModel& model, ConceptId target) {
  model.check(target);
  ProbeSet probes{target, {}, {}};
  std::set<std::string> target_categories;
  for (const Fact& f : model.facts()) {
    if (f.subject == target || f.object == target) {
      probes.forget.push_back({f.subject, f.object});
      target_categories.insert(f.categories.begin(), f.categories.end());
    }
  }
  if (probes.forget.empty()) {
    fail(Errc::TargetHasNoFacts, "no facts involve " + model.name(target));
  }
  for (const Fact& f : model.facts()) {
    if (f.subject == target || f.object == target) continue;
    const bool shares_category =
        std::any_of(f.categories.begin(), f.categories.end(),
                    [&](const std::string& c) { return target_categories.count(c) > 0; });
    if (shares_category && predict(model, f.subject) == f.object) {
      probes.related.push_back({f.subject, f.object});
    }
  }
  return probes;
}

}  // namespace lethe
