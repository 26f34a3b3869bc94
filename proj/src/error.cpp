#include "lethe/error.hpp"

namespace lethe {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyFactBase: return "EmptyFactBase";
    case Errc::UnknownConcept: return "UnknownConcept";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::SelfQuery: return "SelfQuery";
    case Errc::EmptyProbeSet: return "EmptyProbeSet";
    case Errc::ProbeUnrelatedToConcept: return "ProbeUnrelatedToConcept";
    case Errc::DegenerateStep: return "DegenerateStep";
    case Errc::NoProgress: return "NoProgress";
    case Errc::TargetHasNoFacts: return "TargetHasNoFacts";
    case Errc::InvalidPolicy: return "InvalidPolicy";
    case Errc::PolicyNotFound: return "PolicyNotFound";
    case Errc::NonCanonicalizable: return "NonCanonicalizable";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::ChainCorrupt: return "ChainCorrupt";
    case Errc::MalformedRequest: return "MalformedRequest";
    case Errc::DuplicateRequest: return "DuplicateRequest";
    case Errc::ConflictUnresolved: return "ConflictUnresolved";
    case Errc::NotConverged: return "NotConverged";
    case Errc::NotFound: return "NotFound";
  }
  return "Unknown";
}

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownConcept:
    case Errc::NotFound:
    case Errc::PolicyNotFound:
      return 404;
    case Errc::DuplicateRequest:
    case Errc::ConflictUnresolved:
    case Errc::NotConverged:
      return 409;
    case Errc::TargetHasNoFacts:
    case Errc::NoProgress:
      return 422;
    case Errc::StorageFailure:
    case Errc::ChainCorrupt:
      return 500;
    default:
      return 400;
  }
}

}  // namespace lethe
