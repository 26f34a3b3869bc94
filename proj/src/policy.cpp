#include "lethe/policy.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <tuple>

#include "lethe/error.hpp"

namespace lethe {
namespace {

std::set<std::string> string_set(const Json& doc, const char* field) {
  std::set<std::string> out;
  auto it = doc.find(field);
  if (it == doc.end()) return out;
  if (!it->is_array()) {
    fail(Errc::InvalidPolicy, std::string(field) + " must be a list of strings");
  }
  for (const Json& item : *it) {
    if (!item.is_string()) {
      fail(Errc::InvalidPolicy, std::string(field) + " must be a list of strings");
    }
    out.insert(item.get<std::string>());
  }
  return out;
}

}  // namespace

void PrivacyPolicy::validate() const {
  if (subject_id.empty()) fail(Errc::InvalidPolicy, "subject_id must be non-empty");
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    fail(Errc::InvalidPolicy, "theta must be a finite non-negative number");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(Errc::InvalidPolicy, "lambda must be a finite non-negative number");
  }
  if (retention_seconds && *retention_seconds <= 0) {
    fail(Errc::InvalidPolicy, "retention_seconds must be positive or UNLIMITED");
  }
}

Json PrivacyPolicy::to_json() const {
  Json doc{{"subject_id", subject_id},
           {"excluded_categories", excluded_categories},
           {"sensitive_lexicon", sensitive_lexicon},
           {"theta", decimal_string(theta)},
           {"lambda", decimal_string(lambda)}};
  if (retention_seconds) {
    doc["retention_seconds"] = *retention_seconds;
  } else {
    doc["retention_seconds"] = "UNLIMITED";
  }
  return doc;
}

PrivacyPolicy PrivacyPolicy::from_json(const Json& doc) {
  if (!doc.is_object()) fail(Errc::InvalidPolicy, "policy must be an object");
  PrivacyPolicy policy;
  if (auto it = doc.find("subject_id"); it != doc.end()) {
    if (!it->is_string()) fail(Errc::InvalidPolicy, "subject_id must be a string");
    policy.subject_id = it->get<std::string>();
  }
  if (auto it = doc.find("retention_seconds"); it != doc.end()) {
    if (it->is_number_integer()) {
      policy.retention_seconds = it->get<std::int64_t>();
    } else if (!(it->is_string() && *it == "UNLIMITED") && !it->is_null()) {
      fail(Errc::InvalidPolicy, "retention_seconds must be an integer or UNLIMITED");
    }
  }
  policy.excluded_categories = string_set(doc, "excluded_categories");
  policy.sensitive_lexicon = string_set(doc, "sensitive_lexicon");
  try {
    if (auto it = doc.find("theta"); it != doc.end()) {
      policy.theta = parse_decimal(*it, "theta");
    }
    if (auto it = doc.find("lambda"); it != doc.end()) {
      policy.lambda = parse_decimal(*it, "lambda");
    }
  } catch (const Error& e) {
    fail(Errc::InvalidPolicy, e.what());
  }
  policy.validate();
  return policy;
}

PrivacyPolicy default_policy() {
  PrivacyPolicy policy;
  policy.subject_id = kDefaultPolicyId;
  policy.sensitive_lexicon = {"address", "dob", "email", "phone", "ssn"};
  return policy;
}

PolicyStore::PolicyStore(PrivacyPolicy fallback) : default_(std::move(fallback)) {
  default_.subject_id = kDefaultPolicyId;
  default_.validate();
}

PolicyStore::PolicyStore(const PolicyStore& other) {
  std::shared_lock lock(other.mutex_);
  default_ = other.default_;
  policies_ = other.policies_;
}

PolicyStore& PolicyStore::operator=(const PolicyStore& other) {
  if (this != &other) {
    PolicyStore copy(other);
    std::unique_lock lock(mutex_);
    default_ = std::move(copy.default_);
    policies_ = std::move(copy.policies_);
  }
  return *this;
}

void PolicyStore::put(PrivacyPolicy policy) {
  policy.validate();
  std::unique_lock lock(mutex_);
  if (policy.subject_id == kDefaultPolicyId) {
    default_ = std::move(policy);
  } else {
    policies_.insert_or_assign(policy.subject_id, std::move(policy));
  }
}

std::optional<PrivacyPolicy> PolicyStore::get(const std::string& subject_id) const {
  std::shared_lock lock(mutex_);
  if (subject_id == kDefaultPolicyId) return default_;
  auto it = policies_.find(subject_id);
  if (it == policies_.end()) return std::nullopt;
  return it->second;
}

PrivacyPolicy PolicyStore::resolve(const std::string& subject_id) const {
  std::shared_lock lock(mutex_);
  auto it = policies_.find(subject_id);
  return it == policies_.end() ? default_ : it->second;
}

Json PolicyStore::to_json() const {
  std::shared_lock lock(mutex_);
  Json subjects = Json::object();
  for (const auto& [id, policy] : policies_) subjects[id] = policy.to_json();
  return Json{{"default", default_.to_json()}, {"subjects", std::move(subjects)}};
}

PolicyStore PolicyStore::from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("default")) {
    fail(Errc::InvalidPolicy, "policy store document needs a default policy");
  }
  PolicyStore store(PrivacyPolicy::from_json(doc["default"]));
  if (auto it = doc.find("subjects"); it != doc.end()) {
    for (const auto& [id, policy] : it->items()) store.put(PrivacyPolicy::from_json(policy));
  }
  return store;
}

Json RetentionRecord::to_json() const {
  return Json{{"record_id", record_id},
              {"subject_id", subject_id},
              {"concepts", concepts},
              {"ingested_at", ingested_at},
              {"erasure_requested", erasure_requested}};
}

RetentionRecord RetentionRecord::from_json(const Json& doc) {
  RetentionRecord record;
  try {
    record.record_id = doc.at("record_id").get<std::string>();
    record.subject_id = doc.at("subject_id").get<std::string>();
    record.concepts = doc.at("concepts").get<std::vector<std::string>>();
    record.ingested_at = doc.at("ingested_at").get<std::int64_t>();
    record.erasure_requested = doc.value("erasure_requested", false);
  } catch (const Json::exception& e) {
    fail(Errc::StorageFailure, std::string("malformed retention record: ") + e.what());
  }
  return record;
}

std::vector<ErasureRequest> sweep_expired(std::vector<RetentionRecord>& records,
                                          const PolicyStore& policies,
                                          std::int64_t now) {
  std::vector<RetentionRecord*> expired;
  for (RetentionRecord& record : records) {
    if (record.erasure_requested) continue;
    const auto retention = policies.resolve(record.subject_id).retention_seconds;
    if (retention && now >= record.ingested_at + *retention) expired.push_back(&record);
  }
  std::sort(expired.begin(), expired.end(), [](const auto* a, const auto* b) {
    return std::tie(a->ingested_at, a->record_id) < std::tie(b->ingested_at, b->record_id);
  });
  std::vector<ErasureRequest> requests;
  requests.reserve(expired.size());
  for (RetentionRecord* record : expired) {
    record->erasure_requested = true;
    requests.push_back({uuid_from("retention:" + record->record_id), record->subject_id,
                        record->concepts, ErasureReason::RetentionExpired, now});
  }
  return requests;
}

}  // namespace lethe
