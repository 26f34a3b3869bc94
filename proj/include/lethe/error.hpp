#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lethe {

enum class Errc {
  EmptyFactBase,
  UnknownConcept,
  InvalidConfig,
  SelfQuery,
  EmptyProbeSet,
  ProbeUnrelatedToConcept,
  DegenerateStep,
  NoProgress,
  TargetHasNoFacts,
  InvalidPolicy,
  PolicyNotFound,
  NonCanonicalizable,
  StorageFailure,
  ChainCorrupt,
  MalformedRequest,
  DuplicateRequest,
  ConflictUnresolved,
  NotConverged,
  NotFound,
};

std::string_view to_string(Errc code) noexcept;

// HTTP-equivalent status for an error code (400, 404, 409, 422, 500).
int http_status(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lethe
