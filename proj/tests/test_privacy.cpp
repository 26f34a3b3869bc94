#include <random>

#include <gtest/gtest.h>

#include "lethe/error.hpp"
#include "lethe/privacy.hpp"

using namespace lethe;

namespace {

const std::vector<std::string> kLabels{"email", "phone", "ssn", "color", "city", "dob"};
const std::vector<std::string> kCategories{"health", "finance", "sports", "music"};

Sample random_sample(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  Sample s;
  s.subject_id = "s" + std::to_string(rng() % 5);
  s.features.resize(static_cast<Eigen::Index>(1 + rng() % 12));
  for (Eigen::Index i = 0; i < s.features.size(); ++i) s.features(i) = value(rng);
  const std::size_t tokens = rng() % 6;
  for (std::size_t t = 0; t < tokens; ++t) {
    s.tokens.push_back({static_cast<std::size_t>(rng() % s.features.size()),
                        kLabels[rng() % kLabels.size()]});
  }
  if (rng() % 4 == 0) s.categories.insert(kCategories[rng() % kCategories.size()]);
  return s;
}

PrivacyPolicy random_policy(std::mt19937_64& rng) {
  PrivacyPolicy p;
  p.subject_id = "default";
  for (const auto& label : kLabels) {
    if (rng() % 2) p.sensitive_lexicon.insert(label);
  }
  if (rng() % 3 == 0) p.excluded_categories.insert(kCategories[rng() % kCategories.size()]);
  p.lambda = 0.1 + static_cast<double>(rng() % 100) / 10.0;
  p.theta = static_cast<double>(rng() % 200) / 10.0;
  return p;
}

// Sum over the distinct flagged coordinates, by explicit loops.
double oracle_loss(const Sample& s, const PrivacyPolicy& p) {
  std::vector<bool> flagged(static_cast<std::size_t>(s.features.size()), false);
  for (const auto& c : s.categories) {
    if (p.excluded_categories.count(c)) flagged.assign(flagged.size(), true);
  }
  for (const auto& t : s.tokens) {
    if (p.sensitive_lexicon.count(t.label)) flagged[t.index] = true;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    if (flagged[i]) sum += s.features(static_cast<Eigen::Index>(i)) * s.features(static_cast<Eigen::Index>(i));
  }
  return p.lambda * sum;
}

}  // namespace

TEST(Privacy, LossMatchesLoopOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const Sample s = random_sample(rng);
    const PrivacyPolicy p = random_policy(rng);
    const GateDecision d = gate(s, p, GateMode::Training);
    const double expected = oracle_loss(s, p);
    EXPECT_NEAR(d.privacy_loss, expected, 1e-12 * (1.0 + expected));
    EXPECT_EQ(d.action, expected > p.theta && d.privacy_loss > p.theta ? GateAction::Reject
                                                                       : GateAction::Accept);
  }
}

TEST(Privacy, LossIsMonotoneInMask) {
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    const Sample s = random_sample(rng);
    std::vector<Eigen::Index> indices;
    double previous = 0.0;
    for (Eigen::Index i = 0; i < s.features.size(); ++i) {
      indices.push_back(i);
      const double loss = privacy_loss(s.features, indices, 2.0);
      EXPECT_GE(loss, previous);
      previous = loss;
    }
  }
}

TEST(Privacy, BoundaryAcceptsAndStrictExcessRejects) {
  Sample s;
  s.subject_id = "alice";
  s.features = Eigen::VectorXd::Zero(3);
  s.features(1) = 2.0;
  s.tokens = {{1, "email"}};
  PrivacyPolicy p = default_policy();
  p.lambda = 0.25;
  p.theta = 1.0;  // L_p = 0.25 * 4 = 1 exactly
  EXPECT_EQ(gate(s, p, GateMode::Training).action, GateAction::Accept);
  EXPECT_EQ(gate(s, p, GateMode::Inference).action, GateAction::Accept);
  p.theta = std::nextafter(1.0, 0.0);
  EXPECT_EQ(gate(s, p, GateMode::Training).action, GateAction::Reject);
  EXPECT_EQ(gate(s, p, GateMode::Inference).action, GateAction::AcceptAndScheduleErasure);
}

TEST(Privacy, MaskReportsRulesAndUniqueIndices) {
  Sample s;
  s.features = Eigen::VectorXd::Ones(4);
  s.tokens = {{2, "email"}, {2, "phone"}, {0, "color"}};
  s.categories = {"sports"};
  PrivacyPolicy p = default_policy();
  auto mask = detect_sensitive(s, p);
  EXPECT_EQ(mask.indices, (std::vector<Eigen::Index>{2}));
  EXPECT_EQ(mask.matched_rules, (std::vector<std::string>{"lexicon:email", "lexicon:phone"}));
  p.excluded_categories = {"sports"};
  mask = detect_sensitive(s, p);
  EXPECT_EQ(mask.indices, (std::vector<Eigen::Index>{0, 1, 2, 3}));
  EXPECT_EQ(mask.matched_rules.front(), "category:sports");
}

TEST(Privacy, EmptyMaskHasZeroLoss) {
  Sample s;
  s.features = Eigen::VectorXd::Constant(5, 100.0);
  const auto d = gate(s, default_policy(), GateMode::Training);
  EXPECT_EQ(d.privacy_loss, 0.0);
  EXPECT_EQ(d.action, GateAction::Accept);
}

TEST(Privacy, MalformedSamplesRejected) {
  Sample s;
  s.features = Eigen::VectorXd::Ones(2);
  s.tokens = {{5, "email"}};
  EXPECT_THROW(gate(s, default_policy(), GateMode::Training), Error);
  s.tokens.clear();
  s.features(0) = std::nan("");
  EXPECT_THROW(gate(s, default_policy(), GateMode::Training), Error);
}
