#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lethe/canonical.hpp"
#include "lethe/error.hpp"
#include "lethe/ledger.hpp"
#include "lethe/model.hpp"
#include "lethe/policy.hpp"
#include "lethe/privacy.hpp"
#include "lethe/unlearn.hpp"

namespace lethe {

struct EngineConfig {
  double alpha = 0.1;
  int max_iters = 500;
  std::optional<double> influence_threshold;  // nullopt: chance level
  bool normalize_each_step = true;
  double conflict_floor = 0.9;
  int max_refinements = 3;

  UnlearnConfig unlearn() const;
  RefinementPolicy refinement() const;
  Json to_json() const;
};

// Seconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;
Clock system_clock();
Clock fixed_clock(std::int64_t epoch_seconds);

// Files inside a data directory.
struct DataLayout {
  std::filesystem::path root;

  std::filesystem::path model() const { return root / "model.json"; }
  std::filesystem::path ledger() const { return root / "ledger.jsonl"; }
  std::filesystem::path policies() const { return root / "policies.json"; }
  std::filesystem::path records() const { return root / "records.json"; }
  std::filesystem::path queue() const { return root / "queue.json"; }
};

// Lifecycle of an erasure request as seen by clients.
struct ErasureStatus {
  ErasureRequest request;
  std::string status;  // QUEUED, SUBMITTED, RUNNING, COMPLETED, FAILED
  Json reports = Json::array();
  std::optional<Errc> error;
  std::string message;

  Json to_json() const;
};

struct IngestOutcome {
  GateDecision decision;
  GateMode mode = GateMode::Training;
  std::size_t fact_count = 0;
  std::optional<std::string> record_id;
  std::optional<std::string> scheduled_request_id;

  Json to_json() const;
};

struct SweepOutcome {
  std::int64_t now = 0;
  std::vector<std::string> emitted;
  std::vector<ErasureStatus> processed;

  Json to_json() const;
};

struct InfluenceView {
  std::string concept_name;
  double influence = 0.0;
  double threshold = 0.0;
  std::size_t forget_probes = 0;
  std::size_t related_probes = 0;
  std::string predicted;

  Json to_json() const;
};

/// The compliance engine: owns the committed model snapshot, policies,
/// retention records, erasure queue and audit ledger of one data directory.
///
/// Every mutation (erasure, ingestion, policy write, sweep) runs under a
/// single writer lock, so ledger order is the linearization order. Readers
/// take the last committed model snapshot and never wait on the writer.
class Engine {
 public:
  // Opens a seeded data directory. Throws StorageFailure when model.json is
  // missing or unreadable.
  explicit Engine(std::filesystem::path data_dir, EngineConfig config = {},
                  Clock clock = system_clock());

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Writes model.json (atomically) and default policy/record/queue files
  // that do not exist yet. Existing ledgers are left untouched.
  static void initialize(const std::filesystem::path& data_dir,
                         const AssociationModel& model);

  std::shared_ptr<const AssociationModel> model() const;
  const EngineConfig& config() const { return config_; }
  const DataLayout& layout() const { return layout_; }

  // Validation failures (MalformedRequest, DuplicateRequest) throw before
  // anything is logged. Failures after submission are logged and returned in
  // the status; the committed model is left as it was before the request.
  ErasureStatus submit_erasure(const Json& body);
  ErasureStatus submit_erasure(ErasureRequest request);
  std::optional<ErasureStatus> erasure(const std::string& request_id) const;

  IngestOutcome ingest(const Json& body);

  void put_policy(const PrivacyPolicy& policy);
  std::optional<PrivacyPolicy> get_policy(const std::string& subject_id) const;
  PrivacyPolicy resolve_policy(const std::string& subject_id) const;

  SweepOutcome sweep(std::int64_t now);
  std::vector<RetentionRecord> records() const;
  std::vector<ErasureRequest> queued() const;

  VerifyResult verify_audit() const;
  std::vector<LedgerEntry> audit_entries() const;
  const Ledger& ledger() const { return ledger_; }

  InfluenceView influence_of(std::string_view concept_name) const;

  std::int64_t now() const { return clock_(); }

 private:
  ErasureStatus execute(const ErasureRequest& request);
  void log_submission(const ErasureRequest& request, Json extra = Json::object());
  void set_status(const ErasureStatus& status);
  void persist_records();
  void persist_queue();
  void persist_policies();
  void commit_model(std::shared_ptr<const AssociationModel> model);
  void rebuild_statuses();
  std::string timestamp() const;
  std::string fresh_id(std::string_view kind, const Json& content) const;

  DataLayout layout_;
  EngineConfig config_;
  Clock clock_;

  std::mutex writer_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const AssociationModel> model_;

  mutable std::mutex state_mutex_;
  std::map<std::string, ErasureStatus> statuses_;
  std::vector<RetentionRecord> records_;
  std::deque<ErasureRequest> queue_;

  PolicyStore policies_;
  Ledger ledger_;
};

// Parses the ingestion body's sample part.
Sample sample_from_json(const Json& body);

}  // namespace lethe
