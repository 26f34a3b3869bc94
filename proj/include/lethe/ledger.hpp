#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lethe/canonical.hpp"

namespace lethe {

enum class ErasureReason { GdprArt17, RetentionExpired, GateTriggered, UserPreference };

std::string_view to_string(ErasureReason reason) noexcept;
std::optional<ErasureReason> parse_erasure_reason(std::string_view text);

// A right-to-be-forgotten request. Concepts are carried by name.
struct ErasureRequest {
  std::string request_id;
  std::string subject_id;
  std::vector<std::string> concepts;
  ErasureReason reason = ErasureReason::GdprArt17;
  std::int64_t submitted_at = 0;

  Json to_json() const;
  static ErasureRequest from_json(const Json& doc);
};

// 8-4-4-4-12 lowercase hex.
bool is_uuid(std::string_view text);

// Name-based UUID: the first 16 bytes of SHA-256(seed) with version 5 and
// RFC 4122 variant bits set.
std::string uuid_from(std::string_view seed);

enum class EventType {
  RequestSubmitted,
  UnlearnStarted,
  UnlearnCompleted,
  UnlearnFailed,
  GateRejected,
  PolicyUpdated,
};

std::string_view to_string(EventType type) noexcept;
std::optional<EventType> parse_event_type(std::string_view text);

inline const std::string kGenesisHash(64, '0');

struct LedgerEntry {
  std::uint64_t index = 0;
  std::string timestamp;
  EventType event_type = EventType::RequestSubmitted;
  Json payload;
  std::string prev_hash;
  std::string entry_hash;

  // Every field except entry_hash.
  Json hashed_fields() const;
  Json to_json() const;
};

// Canonical bytes of an entry without its entry_hash. Throws
// NonCanonicalizable for payloads carrying floating-point numbers.
std::string canonical_encode(const LedgerEntry& entry);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

// Throws StorageFailure if the hash primitive fails its empty-string vector.
void sha256_self_test();

struct VerifyResult {
  bool valid = true;
  std::optional<std::uint64_t> first_invalid_index;
  std::uint64_t entry_count = 0;
};

// Verifies line-delimited ledger bytes: every line must be the canonical
// encoding of a well-formed entry with the right index, link and hash.
VerifyResult verify_chain(std::string_view contents);

/// Append-only, hash-chained ledger persisted one canonical entry per line.
///
/// Opening verifies the whole file; appending refuses to extend a file whose
/// size or last entry no longer matches what this handle wrote.
class Ledger {
 public:
  explicit Ledger(std::filesystem::path path);

  LedgerEntry append(EventType type, Json payload, std::string timestamp);

  VerifyResult verify() const;
  std::vector<LedgerEntry> entries() const;
  std::uint64_t size() const;
  std::string head_hash() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::string read_file() const;

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::uint64_t count_ = 0;
  std::string head_hash_ = kGenesisHash;
  std::uintmax_t file_size_ = 0;
  bool corrupt_ = false;
};

}  // namespace lethe
