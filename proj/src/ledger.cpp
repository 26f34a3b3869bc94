#include "lethe/ledger.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>
#include <unistd.h>

#include "lethe/error.hpp"

namespace lethe {
namespace {

constexpr std::array<std::pair<EventType, std::string_view>, 6> kEventNames{{
    {EventType::RequestSubmitted, "REQUEST_SUBMITTED"},
    {EventType::UnlearnStarted, "UNLEARN_STARTED"},
    {EventType::UnlearnCompleted, "UNLEARN_COMPLETED"},
    {EventType::UnlearnFailed, "UNLEARN_FAILED"},
    {EventType::GateRejected, "GATE_REJECTED"},
    {EventType::PolicyUpdated, "POLICY_UPDATED"},
}};

constexpr std::array<std::pair<ErasureReason, std::string_view>, 4> kReasonNames{{
    {ErasureReason::GdprArt17, "GDPR_ART17"},
    {ErasureReason::RetentionExpired, "RETENTION_EXPIRED"},
    {ErasureReason::GateTriggered, "GATE_TRIGGERED"},
    {ErasureReason::UserPreference, "USER_PREFERENCE"},
}};

bool is_lower_hex(std::string_view s, std::size_t length) {
  return s.size() == length && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::string to_hex(const unsigned char* bytes, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kDigits[bytes[i] >> 4];
    out[2 * i + 1] = kDigits[bytes[i] & 0x0f];
  }
  return out;
}

std::array<unsigned char, 32> sha256_raw(std::string_view bytes) {
  std::array<unsigned char, 32> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1 ||
      length != digest.size()) {
    fail(Errc::StorageFailure, "SHA-256 computation failed");
  }
  return digest;
}

// Parses and checks one ledger line; returns the entry on success.
std::optional<LedgerEntry> check_line(std::string_view line, std::uint64_t index,
                                      const std::string& prev_hash) {
  Json doc = Json::parse(line.begin(), line.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.size() != 6) return std::nullopt;
  for (const char* key :
       {"entry_hash", "event_type", "index", "payload", "prev_hash", "timestamp"}) {
    if (!doc.contains(key)) return std::nullopt;
  }
  if (!doc["index"].is_number_unsigned() || !doc["event_type"].is_string() ||
      !doc["timestamp"].is_string() || !doc["prev_hash"].is_string() ||
      !doc["entry_hash"].is_string()) {
    return std::nullopt;
  }
  LedgerEntry entry;
  entry.index = doc["index"].get<std::uint64_t>();
  auto type = parse_event_type(doc["event_type"].get_ref<const std::string&>());
  if (!type || entry.index != index) return std::nullopt;
  entry.event_type = *type;
  entry.timestamp = doc["timestamp"].get<std::string>();
  entry.payload = std::move(doc["payload"]);
  entry.prev_hash = doc["prev_hash"].get<std::string>();
  entry.entry_hash = doc["entry_hash"].get<std::string>();
  if (entry.prev_hash != prev_hash || !is_lower_hex(entry.entry_hash, 64)) {
    return std::nullopt;
  }
  try {
    if (sha256_hex(canonical_encode(entry)) != entry.entry_hash) return std::nullopt;
    if (canonical_encode(entry.to_json()) != line) return std::nullopt;
  } catch (const Error&) {
    return std::nullopt;
  }
  return entry;
}

// Calls `visit(line, index)` for each newline-terminated line; a trailing
// fragment without a newline is reported with terminated = false.
template <typename Visit>
void for_each_line(std::string_view contents, Visit&& visit) {
  std::uint64_t index = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    const std::size_t end = contents.find('\n', start);
    const bool terminated = end != std::string_view::npos;
    const std::size_t stop = terminated ? end : contents.size();
    if (!visit(contents.substr(start, stop - start), index, terminated)) return;
    ++index;
    start = stop + 1;
  }
}

}  // namespace

std::string_view to_string(ErasureReason reason) noexcept {
  for (const auto& [value, name] : kReasonNames) {
    if (value == reason) return name;
  }
  return "UNKNOWN";
}

std::optional<ErasureReason> parse_erasure_reason(std::string_view text) {
  for (const auto& [value, name] : kReasonNames) {
    if (name == text) return value;
  }
  return std::nullopt;
}

std::string_view to_string(EventType type) noexcept {
  for (const auto& [value, name] : kEventNames) {
    if (value == type) return name;
  }
  return "UNKNOWN";
}

std::optional<EventType> parse_event_type(std::string_view text) {
  for (const auto& [value, name] : kEventNames) {
    if (name == text) return value;
  }
  return std::nullopt;
}

Json ErasureRequest::to_json() const {
  return Json{{"request_id", request_id},
              {"subject_id", subject_id},
              {"concepts", concepts},
              {"reason", std::string(to_string(reason))},
              {"submitted_at", submitted_at}};
}

ErasureRequest ErasureRequest::from_json(const Json& doc) {
  if (!doc.is_object()) fail(Errc::MalformedRequest, "erasure request must be an object");
  ErasureRequest request;
  const auto concepts = doc.find("concepts");
  if (concepts == doc.end() || !concepts->is_array() || concepts->empty()) {
    fail(Errc::MalformedRequest, "concepts must be a non-empty list of names");
  }
  for (const Json& c : *concepts) {
    if (!c.is_string() || c.get_ref<const std::string&>().empty()) {
      fail(Errc::MalformedRequest, "concept names must be non-empty strings");
    }
    request.concepts.push_back(c.get<std::string>());
  }
  const auto subject = doc.find("subject_id");
  if (subject == doc.end() || !subject->is_string() ||
      subject->get_ref<const std::string&>().empty()) {
    fail(Errc::MalformedRequest, "subject_id must be a non-empty string");
  }
  request.subject_id = subject->get<std::string>();
  if (auto it = doc.find("request_id"); it != doc.end()) {
    if (!it->is_string() || !is_uuid(it->get_ref<const std::string&>())) {
      fail(Errc::MalformedRequest, "request_id must be a lowercase UUID");
    }
    request.request_id = it->get<std::string>();
  }
  if (auto it = doc.find("reason"); it != doc.end()) {
    auto reason = it->is_string() ? parse_erasure_reason(it->get<std::string>())
                                  : std::nullopt;
    if (!reason) fail(Errc::MalformedRequest, "unknown erasure reason");
    request.reason = *reason;
  }
  if (auto it = doc.find("submitted_at"); it != doc.end()) {
    if (!it->is_number_integer()) {
      fail(Errc::MalformedRequest, "submitted_at must be an integer");
    }
    request.submitted_at = it->get<std::int64_t>();
  }
  return request;
}

bool is_uuid(std::string_view text) {
  if (text.size() != 36) return false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (c != '-') return false;
    } else if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      return false;
    }
  }
  return true;
}

std::string uuid_from(std::string_view seed) {
  auto digest = sha256_raw(seed);
  digest[6] = static_cast<unsigned char>((digest[6] & 0x0f) | 0x50);
  digest[8] = static_cast<unsigned char>((digest[8] & 0x3f) | 0x80);
  const std::string hex = to_hex(digest.data(), 16);
  return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
         hex.substr(16, 4) + "-" + hex.substr(20, 12);
}

Json LedgerEntry::hashed_fields() const {
  return Json{{"index", index},
              {"timestamp", timestamp},
              {"event_type", std::string(to_string(event_type))},
              {"payload", payload},
              {"prev_hash", prev_hash}};
}

Json LedgerEntry::to_json() const {
  Json doc = hashed_fields();
  doc["entry_hash"] = entry_hash;
  return doc;
}

std::string canonical_encode(const LedgerEntry& entry) {
  return canonical_encode(entry.hashed_fields());
}

std::string sha256_hex(std::string_view bytes) {
  const auto digest = sha256_raw(bytes);
  return to_hex(digest.data(), digest.size());
}

void sha256_self_test() {
  if (sha256_hex("") !=
      "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855") {
    fail(Errc::StorageFailure, "SHA-256 self-test failed");
  }
}

VerifyResult verify_chain(std::string_view contents) {
  VerifyResult result;
  std::string prev = kGenesisHash;
  for_each_line(contents, [&](std::string_view line, std::uint64_t index,
                              bool terminated) {
    result.entry_count = index + 1;
    auto entry = terminated ? check_line(line, index, prev) : std::nullopt;
    if (!entry) {
      result.valid = false;
      result.first_invalid_index = index;
      return false;
    }
    prev = entry->entry_hash;
    return true;
  });
  if (!result.valid) {
    // Count the remaining lines so entry_count reflects the file.
    result.entry_count = static_cast<std::uint64_t>(
        std::count(contents.begin(), contents.end(), '\n') +
        (contents.empty() || contents.back() == '\n' ? 0 : 1));
  }
  return result;
}

Ledger::Ledger(std::filesystem::path path) : path_(std::move(path)) {
  sha256_self_test();
  if (!std::filesystem::exists(path_)) {
    std::ofstream create(path_, std::ios::binary);
    if (!create) fail(Errc::StorageFailure, "cannot create ledger " + path_.string());
  }
  const std::string contents = read_file();
  const VerifyResult result = verify_chain(contents);
  file_size_ = contents.size();
  if (!result.valid) {
    corrupt_ = true;
    return;
  }
  count_ = result.entry_count;
  for_each_line(contents, [&](std::string_view line, std::uint64_t index, bool) {
    if (index + 1 == count_) {
      head_hash_ = Json::parse(line)["entry_hash"].get<std::string>();
    }
    return true;
  });
}

std::string Ledger::read_file() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) fail(Errc::StorageFailure, "cannot read ledger " + path_.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

LedgerEntry Ledger::append(EventType type, Json payload, std::string timestamp) {
  std::lock_guard lock(mutex_);
  std::error_code ec;
  const auto on_disk = std::filesystem::file_size(path_, ec);
  if (ec) fail(Errc::StorageFailure, "cannot stat ledger " + path_.string());
  if (corrupt_ || on_disk != file_size_) {
    const std::string contents = read_file();
    const VerifyResult result = verify_chain(contents);
    if (!result.valid) {
      corrupt_ = true;
      fail(Errc::ChainCorrupt, "ledger failed verification at index " +
                                   std::to_string(*result.first_invalid_index));
    }
    corrupt_ = false;
    count_ = result.entry_count;
    file_size_ = contents.size();
    head_hash_ = kGenesisHash;
    if (count_ > 0) {
      const std::size_t last = contents.rfind('\n', contents.size() - 2);
      const std::size_t begin = last == std::string::npos ? 0 : last + 1;
      head_hash_ = Json::parse(contents.substr(begin))["entry_hash"].get<std::string>();
    }
  }

  LedgerEntry entry;
  entry.index = count_;
  entry.timestamp = std::move(timestamp);
  entry.event_type = type;
  entry.payload = std::move(payload);
  entry.prev_hash = head_hash_;
  entry.entry_hash = sha256_hex(canonical_encode(entry));
  const std::string line = canonical_encode(entry.to_json()) + "\n";

  std::FILE* file = std::fopen(path_.c_str(), "ab");
  if (!file) fail(Errc::StorageFailure, "cannot open ledger " + path_.string());
  const bool ok = std::fwrite(line.data(), 1, line.size(), file) == line.size() &&
                  std::fflush(file) == 0 && ::fdatasync(fileno(file)) == 0;
  std::fclose(file);
  if (!ok) fail(Errc::StorageFailure, "write to ledger failed");

  ++count_;
  head_hash_ = entry.entry_hash;
  file_size_ += line.size();
  return entry;
}

VerifyResult Ledger::verify() const {
  std::lock_guard lock(mutex_);
  return verify_chain(read_file());
}

std::vector<LedgerEntry> Ledger::entries() const {
  std::string contents;
  {
    std::lock_guard lock(mutex_);
    contents = read_file();
  }
  std::vector<LedgerEntry> out;
  std::string prev = kGenesisHash;
  for_each_line(contents, [&](std::string_view line, std::uint64_t index, bool terminated) {
    auto entry = terminated ? check_line(line, index, prev) : std::nullopt;
    if (!entry) return false;
    prev = entry->entry_hash;
    out.push_back(std::move(*entry));
    return true;
  });
  return out;
}

std::uint64_t Ledger::size() const {
  std::lock_guard lock(mutex_);
  return count_;
}

std::string Ledger::head_hash() const {
  std::lock_guard lock(mutex_);
  return head_hash_;
}

}  // namespace lethe
