#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lethe/error.hpp"
#include "lethe/ledger.hpp"
#include "lethe/snapshot.hpp"
#include "support.hpp"

using namespace lethe;
using lethe::testing::TempDir;

#ifndef LETHE_GOLDEN_DIR
#error "LETHE_GOLDEN_DIR must point at tests/golden"
#endif

namespace {

std::string golden(const std::string& name) {
  return read_file(std::filesystem::path(LETHE_GOLDEN_DIR) / name);
}

void fill(Ledger& ledger, int n) {
  for (int i = 0; i < n; ++i) {
    ledger.append(i % 2 ? EventType::UnlearnStarted : EventType::RequestSubmitted,
                  Json{{"i", i}, {"name", "entry-" + std::to_string(i)}, {"ok", true}},
                  iso8601_utc(1700000000 + i));
  }
}

std::uint64_t line_of(const std::string& text, std::size_t pos) {
  return static_cast<std::uint64_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

}  // namespace

TEST(Ledger, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(Ledger, CanonicalEncodingIgnoresKeyOrder) {
  const Json a = Json::parse(R"({"b":1,"a":{"y":[1,2,{"q":"x","p":null}],"x":true},"é":"ü"})");
  const Json b = Json::parse(R"({"é":"ü","a":{"x":true,"y":[1,2,{"p":null,"q":"x"}]},"b":1})");
  EXPECT_EQ(canonical_encode(a), canonical_encode(b));
  EXPECT_EQ(canonical_encode(a), R"({"a":{"x":true,"y":[1,2,{"p":null,"q":"x"}]},"b":1,"é":"ü"})");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<std::string, int>> fields;
    for (int i = 0; i < 8; ++i) fields.emplace_back("k" + std::to_string(rng() % 50), i);
    std::string forward = "{", backward = "{";
    std::map<std::string, int> dedup(fields.begin(), fields.end());
    bool first = true;
    for (const auto& [k, v] : dedup) {
      forward += (first ? "\"" : ",\"") + k + "\":" + std::to_string(v);
      first = false;
    }
    first = true;
    for (auto it = dedup.rbegin(); it != dedup.rend(); ++it) {
      backward += (first ? "\"" : ",\"") + it->first + "\":" + std::to_string(it->second);
      first = false;
    }
    EXPECT_EQ(canonical_encode(Json::parse(forward + "}")),
              canonical_encode(Json::parse(backward + "}")));
  }
}

TEST(Ledger, FloatsAreNotCanonicalizable) {
  try {
    canonical_encode(Json{{"x", 0.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonCanonicalizable);
  }
}

TEST(Ledger, MatchesGoldenFile) {
  TempDir dir;
  Ledger ledger(dir / "ledger.jsonl");
  for (const Json& item : Json::parse(golden("fixture_entries.json"))) {
    ledger.append(*parse_event_type(item["event_type"].get<std::string>()), item["payload"],
                  item["timestamp"].get<std::string>());
  }
  EXPECT_EQ(read_file(dir / "ledger.jsonl"), golden("golden_ledger.jsonl"));
  EXPECT_TRUE(verify_chain(golden("golden_ledger.jsonl")).valid);
}

TEST(Ledger, EmptyLedgerIsValid) {
  const auto result = verify_chain("");
  EXPECT_TRUE(result.valid);
  EXPECT_EQ(result.entry_count, 0u);
}

TEST(Ledger, LinksAndIndices) {
  TempDir dir;
  Ledger ledger(dir / "l.jsonl");
  fill(ledger, 5);
  const auto entries = ledger.entries();
  ASSERT_EQ(entries.size(), 5u);
  EXPECT_EQ(entries[0].prev_hash, kGenesisHash);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    EXPECT_EQ(entries[i].index, i);
    EXPECT_EQ(entries[i].entry_hash, sha256_hex(canonical_encode(entries[i])));
    if (i > 0) {
      EXPECT_EQ(entries[i].prev_hash, entries[i - 1].entry_hash);
    }
  }
  EXPECT_EQ(ledger.head_hash(), entries.back().entry_hash);
}

TEST(Ledger, AppendOnlyPrefix) {
  TempDir dir;
  Ledger ledger(dir / "l.jsonl");
  fill(ledger, 10);
  const std::string before = read_file(ledger.path());
  fill(ledger, 10);
  const std::string after = read_file(ledger.path());
  EXPECT_EQ(after.compare(0, before.size(), before), 0);
  EXPECT_EQ(verify_chain(after).entry_count, 20u);
  // Reopening continues the chain.
  Ledger reopened(dir / "l.jsonl");
  EXPECT_EQ(reopened.size(), 20u);
  reopened.append(EventType::PolicyUpdated, Json::object(), iso8601_utc(0));
  EXPECT_TRUE(reopened.verify().valid);
}

TEST(Ledger, SingleBitTampersAreLocated) {
  TempDir dir;
  Ledger ledger(dir / "l.jsonl");
  fill(ledger, 40);
  const std::string clean = read_file(ledger.path());
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text = clean;
    const std::size_t pos = rng() % text.size();
    text[pos] = static_cast<char>(text[pos] ^ (1 << (rng() % 8)));
    const auto result = verify_chain(text);
    ASSERT_FALSE(result.valid) << "pos " << pos;
    EXPECT_EQ(*result.first_invalid_index, line_of(clean, pos)) << "pos " << pos;
  }
}

TEST(Ledger, StructuralTampersAreDetected) {
  TempDir dir;
  Ledger ledger(dir / "l.jsonl");
  fill(ledger, 4);
  const std::string clean = read_file(ledger.path());
  auto lines = [&] {
    std::vector<std::string> out;
    std::istringstream in(clean);
    for (std::string line; std::getline(in, line);) out.push_back(line + "\n");
    return out;
  }();
  // Dropped entry.
  EXPECT_EQ(*verify_chain(lines[0] + lines[2] + lines[3]).first_invalid_index, 1u);
  // Swapped entries.
  EXPECT_EQ(*verify_chain(lines[0] + lines[2] + lines[1] + lines[3]).first_invalid_index, 1u);
  // Re-encoded with whitespace: same JSON value, different bytes.
  Json doc = Json::parse(lines[2]);
  EXPECT_EQ(*verify_chain(lines[0] + lines[1] + doc.dump(1) + "\n" + lines[3]).first_invalid_index,
            2u);
  // Missing trailing newline.
  EXPECT_FALSE(verify_chain(clean.substr(0, clean.size() - 1)).valid);
}

TEST(Ledger, RefusesToAppendToCorruptChain) {
  TempDir dir;
  {
    Ledger ledger(dir / "l.jsonl");
    fill(ledger, 3);
  }
  std::string text = read_file(dir / "l.jsonl");
  text[text.find("entry-1")] = 'E';
  std::ofstream(dir / "l.jsonl", std::ios::binary) << text;
  Ledger ledger(dir / "l.jsonl");
  EXPECT_FALSE(ledger.verify().valid);
  try {
    ledger.append(EventType::PolicyUpdated, Json::object(), iso8601_utc(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ChainCorrupt);
  }
  EXPECT_EQ(read_file(dir / "l.jsonl"), text);
}

TEST(Ledger, DetectsExternalTamperBeforeAppend) {
  TempDir dir;
  Ledger ledger(dir / "l.jsonl");
  fill(ledger, 3);
  std::ofstream(dir / "l.jsonl", std::ios::binary | std::ios::app) << "{}\n";
  EXPECT_THROW(ledger.append(EventType::PolicyUpdated, Json::object(), iso8601_utc(0)), Error);
}

TEST(Ledger, ErasureRequestJson) {
  const Json doc{{"subject_id", "alice"}, {"concepts", {"c1"}}, {"reason", "USER_PREFERENCE"}};
  const auto request = ErasureRequest::from_json(doc);
  EXPECT_EQ(request.reason, ErasureReason::UserPreference);
  EXPECT_THROW(ErasureRequest::from_json(Json{{"subject_id", "a"}, {"concepts", Json::array()}}),
               Error);
  EXPECT_THROW(ErasureRequest::from_json(Json{{"subject_id", "a"},
                                              {"concepts", {"c1"}},
                                              {"request_id", "not-a-uuid"}}),
               Error);
  EXPECT_TRUE(is_uuid(uuid_from("x")));
  EXPECT_EQ(uuid_from("x"), uuid_from("x"));
  EXPECT_NE(uuid_from("x"), uuid_from("y"));
}
