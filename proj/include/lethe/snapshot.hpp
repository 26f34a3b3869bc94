#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lethe/canonical.hpp"
#include "lethe/conflict.hpp"
#include "lethe/model.hpp"
#include "lethe/unlearn.hpp"

namespace lethe {

inline constexpr int kSnapshotFormatVersion = 1;

// Model snapshot document: format_version, config, vocabulary, embeddings
// (one array per concept, shortest round-trip decimals) and facts.
Json model_to_json(const AssociationModel& model);
// Throws StorageFailure on a malformed or unsupported document and the
// model's own errors when invariants fail.
AssociationModel model_from_json(const Json& doc);

void save_model(const AssociationModel& model, const std::filesystem::path& path);
AssociationModel load_model(const std::filesystem::path& path);

// Writes to a sibling temporary file, syncs it, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Report documents in hash-safe form (reals as decimal strings).
Json probe_to_json(const AssociationModel& model, const Probe& probe);
Json conflict_to_json(const AssociationModel& model, const ConflictReport& report);
Json probe_set_to_json(const AssociationModel& model, const ProbeSet& probes);
Json unlearn_report_to_json(const AssociationModel& model, const UnlearnReport& report,
                            bool include_trace = false);

}  // namespace lethe
