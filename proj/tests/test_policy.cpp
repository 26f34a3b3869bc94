#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "lethe/error.hpp"
#include "lethe/policy.hpp"

using namespace lethe;

namespace {

struct World {
  PolicyStore store;
  std::vector<RetentionRecord> records;
};

World random_world(std::mt19937_64& rng) {
  World w;
  PrivacyPolicy fallback = default_policy();
  fallback.retention_seconds = rng() % 3 == 0 ? std::nullopt
                                              : std::optional<std::int64_t>(1 + rng() % 100);
  w.store = PolicyStore(fallback);
  for (int s = 0; s < 4; ++s) {
    if (rng() % 2) continue;
    PrivacyPolicy p = default_policy();
    p.subject_id = "s" + std::to_string(s);
    p.retention_seconds = rng() % 4 == 0 ? std::nullopt
                                         : std::optional<std::int64_t>(1 + rng() % 100);
    w.store.put(p);
  }
  const std::size_t n = rng() % 30;
  for (std::size_t i = 0; i < n; ++i) {
    RetentionRecord r;
    r.record_id = "r" + std::to_string(rng() % 1000) + "-" + std::to_string(i);
    r.subject_id = "s" + std::to_string(rng() % 6);
    r.concepts = {"c" + std::to_string(rng() % 10)};
    r.ingested_at = static_cast<std::int64_t>(rng() % 100);
    r.erasure_requested = rng() % 8 == 0;
    w.records.push_back(r);
  }
  return w;
}

// Filter, then sort, over copies.
std::vector<RetentionRecord> oracle_expired(const World& w, std::int64_t now) {
  std::vector<RetentionRecord> out;
  for (const auto& r : w.records) {
    if (r.erasure_requested) continue;
    const auto explicit_policy = w.store.get(r.subject_id);
    const auto retention = explicit_policy ? explicit_policy->retention_seconds
                                           : w.store.resolve("nobody-has-this-id").retention_seconds;
    if (!retention) continue;
    if (r.ingested_at + *retention <= now) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.ingested_at != b.ingested_at) return a.ingested_at < b.ingested_at;
    return a.record_id < b.record_id;
  });
  return out;
}

}  // namespace

TEST(Sweep, MatchesFilterAndSortOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    World w = random_world(rng);
    const std::int64_t now = static_cast<std::int64_t>(rng() % 220);
    const auto expected = oracle_expired(w, now);
    const auto requests = sweep_expired(w.records, w.store, now);
    ASSERT_EQ(requests.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(requests[i].subject_id, expected[i].subject_id);
      EXPECT_EQ(requests[i].concepts, expected[i].concepts);
      EXPECT_EQ(requests[i].reason, ErasureReason::RetentionExpired);
      EXPECT_EQ(requests[i].submitted_at, now);
      EXPECT_EQ(requests[i].request_id, uuid_from("retention:" + expected[i].record_id));
    }
    // Idempotent at fixed now.
    EXPECT_TRUE(sweep_expired(w.records, w.store, now).empty());
  }
}

TEST(Sweep, BoundaryIsInclusive) {
  PolicyStore store;
  PrivacyPolicy p = default_policy();
  p.subject_id = "alice";
  p.retention_seconds = 10;
  store.put(p);
  std::vector<RetentionRecord> records{{"r1", "alice", {"c1"}, 100, false}};
  EXPECT_TRUE(sweep_expired(records, store, 109).empty());
  EXPECT_EQ(sweep_expired(records, store, 110).size(), 1u);
}

TEST(Sweep, UnlimitedNeverExpires) {
  PolicyStore store;
  std::vector<RetentionRecord> records{{"r1", "bob", {"c1"}, 0, false}};
  EXPECT_TRUE(sweep_expired(records, store, INT64_MAX / 2).empty());
}

TEST(Sweep, ExpiredSetGrowsWithNow) {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 200; ++trial) {
    const World w = random_world(rng);
    std::set<std::string> previous;
    for (std::int64_t now = 0; now < 220; now += 20) {
      auto copy = w.records;
      std::set<std::string> ids;
      for (const auto& r : sweep_expired(copy, w.store, now)) ids.insert(r.request_id);
      EXPECT_TRUE(std::includes(ids.begin(), ids.end(), previous.begin(), previous.end()));
      previous = ids;
    }
  }
}

TEST(Policy, JsonRoundTrip) {
  PrivacyPolicy p = default_policy();
  p.subject_id = "zoë";
  p.retention_seconds = 3600;
  p.excluded_categories = {"health"};
  p.theta = 0.1;
  p.lambda = 2.5;
  EXPECT_EQ(PrivacyPolicy::from_json(p.to_json()), p);
  p.retention_seconds.reset();
  EXPECT_EQ(p.to_json()["retention_seconds"], "UNLIMITED");
  EXPECT_EQ(PrivacyPolicy::from_json(p.to_json()), p);
}

TEST(Policy, ValidationAndResolution) {
  PrivacyPolicy p = default_policy();
  p.theta = -1;
  EXPECT_THROW(p.validate(), Error);
  p = default_policy();
  p.retention_seconds = -5;
  EXPECT_THROW(p.validate(), Error);
  PolicyStore store;
  EXPECT_FALSE(store.get("carol"));
  EXPECT_EQ(store.resolve("carol").subject_id, kDefaultPolicyId);
  p = default_policy();
  p.subject_id = "carol";
  p.theta = 3;
  store.put(p);
  EXPECT_EQ(store.resolve("carol").theta, 3);
  const PolicyStore copy = PolicyStore::from_json(store.to_json());
  EXPECT_EQ(copy.get("carol"), p);
}
