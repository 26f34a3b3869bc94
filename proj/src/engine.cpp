#include "lethe/engine.hpp"

#include <chrono>
#include <set>

#include "lethe/conflict.hpp"
#include "lethe/snapshot.hpp"

namespace lethe {
namespace {

DataLayout checked_layout(std::filesystem::path root) {
  DataLayout layout{std::move(root)};
  if (!std::filesystem::exists(layout.model())) {
    fail(Errc::StorageFailure, "no model snapshot in " + layout.root.string() +
                                   " (run `lethe seed` first)");
  }
  return layout;
}

Json read_json(const std::filesystem::path& path) {
  Json doc = Json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) fail(Errc::StorageFailure, "malformed JSON in " + path.string());
  return doc;
}

std::vector<std::string> string_list(const Json& body, const char* field) {
  std::vector<std::string> out;
  auto it = body.find(field);
  if (it == body.end()) return out;
  if (!it->is_array()) {
    fail(Errc::MalformedRequest, std::string(field) + " must be a list of strings");
  }
  for (const Json& item : *it) {
    if (!item.is_string()) {
      fail(Errc::MalformedRequest, std::string(field) + " must be a list of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

Json error_json(Errc code, const std::string& message) {
  return Json{{"code", std::string(to_string(code))}, {"message", message}};
}

Json decision_to_json(const GateDecision& d) {
  return Json{{"privacy_loss", decimal_string(d.privacy_loss)},
              {"action", std::string(to_string(d.action))},
              {"policy_id", d.policy_id},
              {"sensitive_indices", d.mask.indices},
              {"matched_rules", d.mask.matched_rules}};
}

}  // namespace

UnlearnConfig EngineConfig::unlearn() const {
  return UnlearnConfig{alpha, max_iters, influence_threshold, normalize_each_step};
}

RefinementPolicy EngineConfig::refinement() const {
  return RefinementPolicy{conflict_floor, max_refinements};
}

Json EngineConfig::to_json() const {
  return Json{{"alpha", decimal_string(alpha)},
              {"max_iters", max_iters},
              {"influence_threshold", influence_threshold
                                          ? Json(decimal_string(*influence_threshold))
                                          : Json("CHANCE")},
              {"normalize_each_step", normalize_each_step},
              {"conflict_floor", decimal_string(conflict_floor)},
              {"max_refinements", max_refinements}};
}

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

Clock fixed_clock(std::int64_t epoch_seconds) {
  return [epoch_seconds] { return epoch_seconds; };
}

Json ErasureStatus::to_json() const {
  Json doc{{"request_id", request.request_id},
           {"status", status},
           {"request", request.to_json()},
           {"reports", reports}};
  if (error) doc["error"] = error_json(*error, message);
  return doc;
}

Json IngestOutcome::to_json() const {
  Json doc{{"action", std::string(to_string(decision.action))},
           {"privacy_loss", decimal_string(decision.privacy_loss)},
           {"policy_id", decision.policy_id},
           {"matched_rules", decision.mask.matched_rules},
           {"mode", std::string(to_string(mode))},
           {"fact_count", fact_count}};
  if (record_id) doc["record_id"] = *record_id;
  if (scheduled_request_id) doc["scheduled_request_id"] = *scheduled_request_id;
  return doc;
}

Json SweepOutcome::to_json() const {
  Json processed_docs = Json::array();
  for (const auto& s : processed) processed_docs.push_back(s.to_json());
  return Json{{"now", now}, {"emitted", emitted}, {"processed", std::move(processed_docs)}};
}

Json InfluenceView::to_json() const {
  return Json{{"concept", concept_name},
              {"influence", decimal_string(influence)},
              {"influence_threshold", decimal_string(threshold)},
              {"forget_probes", forget_probes},
              {"related_probes", related_probes},
              {"predicted", predicted}};
}

Sample sample_from_json(const Json& body) {
  if (!body.is_object()) fail(Errc::MalformedRequest, "sample must be a JSON object");
  Sample sample;
  auto subject = body.find("subject_id");
  if (subject == body.end() || !subject->is_string() ||
      subject->get_ref<const std::string&>().empty()) {
    fail(Errc::MalformedRequest, "subject_id must be a non-empty string");
  }
  sample.subject_id = subject->get<std::string>();

  auto features = body.find("features");
  if (features == body.end() || !features->is_array()) {
    fail(Errc::MalformedRequest, "features must be a list of numbers");
  }
  sample.features.resize(static_cast<Eigen::Index>(features->size()));
  for (std::size_t i = 0; i < features->size(); ++i) {
    sample.features(static_cast<Eigen::Index>(i)) = parse_decimal((*features)[i], "features");
  }

  if (auto tokens = body.find("tokens"); tokens != body.end()) {
    if (!tokens->is_array()) fail(Errc::MalformedRequest, "tokens must be a list");
    for (const Json& t : *tokens) {
      const Json* index = nullptr;
      const Json* label = nullptr;
      if (t.is_array() && t.size() == 2) {
        index = &t[0];
        label = &t[1];
      } else if (t.is_object() && t.contains("index") && t.contains("label")) {
        index = &t["index"];
        label = &t["label"];
      }
      if (!index || !index->is_number_integer() || index->get<std::int64_t>() < 0 ||
          !label->is_string()) {
        fail(Errc::MalformedRequest, "token must be [index, label] with index >= 0");
      }
      sample.tokens.push_back({index->get<std::size_t>(), label->get<std::string>()});
    }
  }
  for (auto& c : string_list(body, "categories")) sample.categories.insert(std::move(c));
  sample.validate();
  return sample;
}

Engine::Engine(std::filesystem::path data_dir, EngineConfig config, Clock clock)
    : layout_(checked_layout(std::move(data_dir))),
      config_(config),
      clock_(std::move(clock)),
      ledger_(layout_.ledger()) {
  config_.unlearn().validate();
  model_ = std::make_shared<const AssociationModel>(load_model(layout_.model()));
  if (std::filesystem::exists(layout_.policies())) {
    policies_ = PolicyStore::from_json(read_json(layout_.policies()));
  }
  if (std::filesystem::exists(layout_.records())) {
    for (const Json& r : read_json(layout_.records())) {
      records_.push_back(RetentionRecord::from_json(r));
    }
  }
  if (std::filesystem::exists(layout_.queue())) {
    for (const Json& q : read_json(layout_.queue())) {
      queue_.push_back(ErasureRequest::from_json(q));
    }
  }
  rebuild_statuses();
}

void Engine::initialize(const std::filesystem::path& data_dir,
                        const AssociationModel& model) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir, ec);
  if (ec) fail(Errc::StorageFailure, "cannot create " + data_dir.string());
  const DataLayout layout{data_dir};
  save_model(model, layout.model());
  if (!std::filesystem::exists(layout.policies())) {
    write_file_atomic(layout.policies(), canonical_encode(PolicyStore().to_json()));
  }
  if (!std::filesystem::exists(layout.records())) {
    write_file_atomic(layout.records(), "[]");
  }
  if (!std::filesystem::exists(layout.queue())) {
    write_file_atomic(layout.queue(), "[]");
  }
}

void Engine::rebuild_statuses() {
  std::set<std::string> queued;
  for (const auto& q : queue_) queued.insert(q.request_id);
  for (const LedgerEntry& e : ledger_.entries()) {
    if (!e.payload.is_object() || !e.payload.contains("request_id")) continue;
    const std::string id = e.payload["request_id"].get<std::string>();
    switch (e.event_type) {
      case EventType::RequestSubmitted: {
        ErasureStatus s;
        s.request = ErasureRequest::from_json(e.payload);
        s.status = queued.count(id) ? "QUEUED" : "SUBMITTED";
        statuses_[id] = std::move(s);
        break;
      }
      case EventType::UnlearnStarted:
        if (auto it = statuses_.find(id); it != statuses_.end()) it->second.status = "RUNNING";
        break;
      case EventType::UnlearnCompleted:
        if (auto it = statuses_.find(id); it != statuses_.end()) {
          it->second.status = "COMPLETED";
          it->second.reports = e.payload.value("reports", Json::array());
        }
        break;
      case EventType::UnlearnFailed:
        if (auto it = statuses_.find(id); it != statuses_.end()) {
          it->second.status = "FAILED";
          it->second.reports = e.payload.value("reports", Json::array());
          const Json err = e.payload.value("error", Json::object());
          it->second.message = err.value("message", "");
          it->second.error = Errc::NotFound;
          for (int c = 0; c <= static_cast<int>(Errc::NotFound); ++c) {
            if (to_string(static_cast<Errc>(c)) == err.value("code", "")) {
              it->second.error = static_cast<Errc>(c);
            }
          }
        }
        break;
      default:
        break;
    }
  }
}

std::shared_ptr<const AssociationModel> Engine::model() const {
  std::lock_guard lock(snapshot_mutex_);
  return model_;
}

std::string Engine::timestamp() const { return iso8601_utc(clock_()); }

std::string Engine::fresh_id(std::string_view kind, const Json& content) const {
  std::size_t local = 0;
  {
    std::lock_guard lock(state_mutex_);
    local = records_.size() + queue_.size() + statuses_.size();
  }
  return uuid_from(std::string(kind) + ":" + ledger_.head_hash() + ":" +
                   std::to_string(ledger_.size()) + ":" + std::to_string(local) + ":" +
                   compact_encode(content));
}

void Engine::set_status(const ErasureStatus& status) {
  std::lock_guard lock(state_mutex_);
  statuses_[status.request.request_id] = status;
}

void Engine::persist_records() {
  Json doc = Json::array();
  {
    std::lock_guard lock(state_mutex_);
    for (const auto& r : records_) doc.push_back(r.to_json());
  }
  write_file_atomic(layout_.records(), canonical_encode(doc));
}

void Engine::persist_queue() {
  Json doc = Json::array();
  {
    std::lock_guard lock(state_mutex_);
    for (const auto& q : queue_) doc.push_back(q.to_json());
  }
  write_file_atomic(layout_.queue(), canonical_encode(doc));
}

void Engine::persist_policies() {
  write_file_atomic(layout_.policies(), canonical_encode(policies_.to_json()));
}

void Engine::commit_model(std::shared_ptr<const AssociationModel> model) {
  std::lock_guard lock(snapshot_mutex_);
  model_ = std::move(model);
}

void Engine::log_submission(const ErasureRequest& request, Json extra) {
  Json payload = request.to_json();
  for (auto& [key, value] : extra.items()) payload[key] = value;
  ledger_.append(EventType::RequestSubmitted, std::move(payload), timestamp());
}

ErasureStatus Engine::submit_erasure(const Json& body) {
  return submit_erasure(ErasureRequest::from_json(body));
}

ErasureStatus Engine::submit_erasure(ErasureRequest request) {
  if (request.concepts.empty()) {
    fail(Errc::MalformedRequest, "concepts must be a non-empty list of names");
  }
  if (!request.request_id.empty() && !is_uuid(request.request_id)) {
    fail(Errc::MalformedRequest, "request_id must be a lowercase UUID");
  }
  std::lock_guard writer(writer_);
  if (request.submitted_at == 0) request.submitted_at = clock_();
  if (request.request_id.empty()) {
    Json content = request.to_json();
    request.request_id = fresh_id("erasure", content);
  }
  {
    std::lock_guard lock(state_mutex_);
    if (statuses_.count(request.request_id)) {
      fail(Errc::DuplicateRequest, "request_id already used: " + request.request_id);
    }
  }
  log_submission(request);
  set_status({request, "SUBMITTED"});
  return execute(request);
}

ErasureStatus Engine::execute(const ErasureRequest& request) {
  const std::shared_ptr<const AssociationModel> before = model();
  ErasureStatus status{request, "RUNNING"};

  auto fail_request = [&](Errc code, const std::string& message) {
    status.status = "FAILED";
    status.error = code;
    status.message = message;
    ledger_.append(EventType::UnlearnFailed,
                   Json{{"request_id", request.request_id},
                        {"error", error_json(code, message)},
                        {"reports", status.reports}},
                   timestamp());
    set_status(status);
    return status;
  };

  std::vector<ConceptId> targets;
  for (const std::string& name : request.concepts) {
    auto id = before->find(name);
    if (!id) return fail_request(Errc::UnknownConcept, "unknown concept: " + name);
    targets.push_back(*id);
  }

  ledger_.append(EventType::UnlearnStarted,
                 Json{{"request_id", request.request_id},
                      {"concepts", request.concepts},
                      {"config", config_.to_json()}},
                 timestamp());
  set_status(status);

  AssociationModel working = *before;
  for (ConceptId target : targets) {
    try {
      const ProbeSet probes = generate_probes(working, target);
      RefinedUnlearn result = unlearn_with_refinement(working, target, probes,
                                                      config_.unlearn(), config_.refinement());
      Json report = unlearn_report_to_json(working, result.report);
      report["refinement_rounds"] = result.refinement_rounds;
      report["conflict_status"] = !result.report.conflict ? "VACUOUS"
                                  : result.conflict_resolved ? "PASSED"
                                                             : "UNRESOLVED";
      status.reports.push_back(std::move(report));
      if (!result.conflict_resolved) {
        return fail_request(Errc::ConflictUnresolved,
                            "conflict score for " + working.name(target) +
                                " stayed below the floor; erasure rolled back");
      }
      if (!result.report.converged) {
        return fail_request(Errc::NotConverged,
                            "influence of " + working.name(target) +
                                " did not reach the threshold (" +
                                std::string(to_string(result.report.stop_reason)) +
                                "); erasure rolled back");
      }
      working = std::move(result.model);
    } catch (const Error& e) {
      if (e.code() == Errc::StorageFailure || e.code() == Errc::ChainCorrupt) throw;
      return fail_request(e.code(), e.what());
    }
  }

  // Stage the snapshot, log completion, then swap it in with a rename.
  std::filesystem::path staged = layout_.model();
  staged += ".staged";
  write_file_atomic(staged, compact_encode(model_to_json(working)));
  ledger_.append(EventType::UnlearnCompleted,
                 Json{{"request_id", request.request_id}, {"reports", status.reports}},
                 timestamp());
  std::error_code ec;
  std::filesystem::rename(staged, layout_.model(), ec);
  if (ec) fail(Errc::StorageFailure, "cannot commit model snapshot");
  commit_model(std::make_shared<const AssociationModel>(std::move(working)));

  status.status = "COMPLETED";
  set_status(status);
  return status;
}

std::optional<ErasureStatus> Engine::erasure(const std::string& request_id) const {
  std::lock_guard lock(state_mutex_);
  auto it = statuses_.find(request_id);
  if (it == statuses_.end()) return std::nullopt;
  return it->second;
}

IngestOutcome Engine::ingest(const Json& body) {
  Sample sample = sample_from_json(body);
  GateMode mode = GateMode::Training;
  if (auto it = body.find("mode"); it != body.end()) {
    if (*it == "INFERENCE") {
      mode = GateMode::Inference;
    } else if (*it != "TRAINING") {
      fail(Errc::MalformedRequest, "mode must be TRAINING or INFERENCE");
    }
  }
  std::optional<std::string> record_id;
  if (auto it = body.find("record_id"); it != body.end()) {
    if (!it->is_string() || it->get_ref<const std::string&>().empty()) {
      fail(Errc::MalformedRequest, "record_id must be a non-empty string");
    }
    record_id = it->get<std::string>();
  }

  std::lock_guard writer(writer_);
  const std::shared_ptr<const AssociationModel> current = model();

  std::vector<Fact> new_facts;
  std::vector<std::string> implicated;
  auto implicate = [&](const std::string& name) {
    if (std::find(implicated.begin(), implicated.end(), name) == implicated.end()) {
      implicated.push_back(name);
    }
  };
  if (auto facts = body.find("facts"); facts != body.end()) {
    if (!facts->is_array()) fail(Errc::MalformedRequest, "facts must be a list");
    for (const Json& f : *facts) {
      if (!f.is_object() || !f.contains("subject") || !f.contains("object") ||
          !f["subject"].is_string() || !f["object"].is_string()) {
        fail(Errc::MalformedRequest, "fact must have subject and object names");
      }
      Fact fact{current->require(f["subject"].get<std::string>()),
                current->require(f["object"].get<std::string>()),
                sample.categories};
      if (f.contains("categories")) {
        fact.categories.clear();
        for (auto& c : string_list(f, "categories")) fact.categories.insert(std::move(c));
      }
      if (fact.subject == fact.object) {
        fail(Errc::MalformedRequest, "fact relates a concept to itself");
      }
      implicate(current->name(fact.subject));
      implicate(current->name(fact.object));
      new_facts.push_back(std::move(fact));
    }
  }
  for (const std::string& name : string_list(body, "concepts")) {
    current->require(name);
    implicate(name);
  }

  IngestOutcome outcome;
  outcome.mode = mode;
  outcome.decision = gate(sample, policies_.resolve(sample.subject_id), mode);
  outcome.fact_count = current->facts().size();

  switch (outcome.decision.action) {
    case GateAction::Accept: {
      if (mode == GateMode::Inference || new_facts.empty()) break;
      std::vector<Fact> facts = current->facts();
      facts.insert(facts.end(), new_facts.begin(), new_facts.end());
      auto updated = std::make_shared<const AssociationModel>(current->with_facts(facts));
      RetentionRecord record{
          record_id.value_or(fresh_id("record", body)), sample.subject_id,
          implicated, clock_(), false};
      {
        std::lock_guard lock(state_mutex_);
        records_.push_back(record);
      }
      persist_records();
      save_model(*updated, layout_.model());
      commit_model(updated);
      outcome.record_id = record.record_id;
      outcome.fact_count = facts.size();
      break;
    }
    case GateAction::Reject:
      ledger_.append(EventType::GateRejected,
                     Json{{"subject_id", sample.subject_id},
                          {"mode", std::string(to_string(mode))},
                          {"decision", decision_to_json(outcome.decision)}},
                     timestamp());
      break;
    case GateAction::AcceptAndScheduleErasure: {
      if (implicated.empty()) {
        ledger_.append(EventType::GateRejected,
                       Json{{"subject_id", sample.subject_id},
                            {"mode", std::string(to_string(mode))},
                            {"decision", decision_to_json(outcome.decision)},
                            {"scheduled_request_id", nullptr}},
                       timestamp());
        break;
      }
      ErasureRequest request{"", sample.subject_id, implicated,
                             ErasureReason::GateTriggered, clock_()};
      request.request_id = fresh_id("gate", request.to_json());
      log_submission(request, Json{{"gate_decision", decision_to_json(outcome.decision)}});
      {
        std::lock_guard lock(state_mutex_);
        queue_.push_back(request);
        statuses_[request.request_id] = ErasureStatus{request, "QUEUED"};
      }
      persist_queue();
      outcome.scheduled_request_id = request.request_id;
      break;
    }
  }
  return outcome;
}

void Engine::put_policy(const PrivacyPolicy& policy) {
  policy.validate();
  std::lock_guard writer(writer_);
  ledger_.append(EventType::PolicyUpdated, policy.to_json(), timestamp());
  policies_.put(policy);
  persist_policies();
}

std::optional<PrivacyPolicy> Engine::get_policy(const std::string& subject_id) const {
  return policies_.get(subject_id);
}

PrivacyPolicy Engine::resolve_policy(const std::string& subject_id) const {
  return policies_.resolve(subject_id);
}

SweepOutcome Engine::sweep(std::int64_t now) {
  if (now < 0) fail(Errc::MalformedRequest, "now must be non-negative");
  std::lock_guard writer(writer_);
  SweepOutcome outcome;
  outcome.now = now;

  std::vector<ErasureRequest> expired;
  {
    std::lock_guard lock(state_mutex_);
    expired = sweep_expired(records_, policies_, now);
  }
  for (const ErasureRequest& request : expired) {
    bool seen = false;
    {
      std::lock_guard lock(state_mutex_);
      seen = statuses_.count(request.request_id) > 0;
    }
    if (seen) continue;
    log_submission(request);
    std::lock_guard lock(state_mutex_);
    queue_.push_back(request);
    statuses_[request.request_id] = ErasureStatus{request, "QUEUED"};
    outcome.emitted.push_back(request.request_id);
  }
  persist_records();
  persist_queue();

  for (;;) {
    ErasureRequest next;
    {
      std::lock_guard lock(state_mutex_);
      if (queue_.empty()) break;
      next = queue_.front();
      queue_.pop_front();
    }
    outcome.processed.push_back(execute(next));
    persist_queue();
  }
  return outcome;
}

std::vector<RetentionRecord> Engine::records() const {
  std::lock_guard lock(state_mutex_);
  return records_;
}

std::vector<ErasureRequest> Engine::queued() const {
  std::lock_guard lock(state_mutex_);
  return {queue_.begin(), queue_.end()};
}

VerifyResult Engine::verify_audit() const { return ledger_.verify(); }

std::vector<LedgerEntry> Engine::audit_entries() const { return ledger_.entries(); }

InfluenceView Engine::influence_of(std::string_view concept_name) const {
  const auto snapshot = model();
  const ConceptId id = snapshot->require(concept_name);
  const ProbeSet probes = generate_probes(*snapshot, id);
  InfluenceView view;
  view.concept_name = std::string(concept_name);
  view.influence = influence(*snapshot, id, probes.forget);
  view.threshold = config_.unlearn().threshold_for(*snapshot);
  view.forget_probes = probes.forget.size();
  view.related_probes = probes.related.size();
  view.predicted = snapshot->name(predict(*snapshot, id));
  return view;
}

}  // namespace lethe
