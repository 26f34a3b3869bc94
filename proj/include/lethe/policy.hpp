#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lethe/canonical.hpp"
#include "lethe/ledger.hpp"

namespace lethe {

// Subject id of the engine-wide policy backing subjects without their own.
inline const std::string kDefaultPolicyId = "default";

struct PrivacyPolicy {
  std::string subject_id;
  // nullopt is UNLIMITED retention.
  std::optional<std::int64_t> retention_seconds;
  std::set<std::string> excluded_categories;
  std::set<std::string> sensitive_lexicon;
  double theta = 1.0;
  double lambda = 1.0;

  // Throws InvalidPolicy.
  void validate() const;

  // theta and lambda are written as decimal strings so the document can be
  // hashed; retention_seconds is an integer or the string "UNLIMITED".
  Json to_json() const;
  static PrivacyPolicy from_json(const Json& doc);

  friend bool operator==(const PrivacyPolicy&, const PrivacyPolicy&) = default;
};

// Engine default: unlimited retention, lambda = theta = 1 and a lexicon of
// common identifier labels.
PrivacyPolicy default_policy();

/// Per-subject policies backed by a mandatory default. Reads may run
/// concurrently; writes are exclusive.
class PolicyStore {
 public:
  explicit PolicyStore(PrivacyPolicy fallback = default_policy());
  PolicyStore(const PolicyStore& other);
  PolicyStore& operator=(const PolicyStore& other);

  // Upsert by subject_id; putting kDefaultPolicyId replaces the default.
  void put(PrivacyPolicy policy);
  std::optional<PrivacyPolicy> get(const std::string& subject_id) const;
  // The subject's own policy, or the default.
  PrivacyPolicy resolve(const std::string& subject_id) const;

  Json to_json() const;
  static PolicyStore from_json(const Json& doc);

 private:
  mutable std::shared_mutex mutex_;
  PrivacyPolicy default_;
  std::map<std::string, PrivacyPolicy> policies_;
};

struct RetentionRecord {
  std::string record_id;
  std::string subject_id;
  std::vector<std::string> concepts;
  std::int64_t ingested_at = 0;
  // Set once a sweep has emitted an erasure request for this record.
  bool erasure_requested = false;

  Json to_json() const;
  static RetentionRecord from_json(const Json& doc);
};

/// Emits one RETENTION_EXPIRED request per record whose deadline
/// ingested_at + retention_seconds is at or before `now`, ordered by
/// (ingested_at, record_id), and marks those records so a later sweep skips
/// them. Records under UNLIMITED retention never expire. Request ids are
/// derived from the record id.
std::vector<ErasureRequest> sweep_expired(std::vector<RetentionRecord>& records,
                                          const PolicyStore& policies,
                                          std::int64_t now);

}  // namespace lethe
