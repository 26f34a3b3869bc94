#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace lethe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Index of a concept in a model's vocabulary.
struct ConceptId {
  std::size_t value = 0;

  friend auto operator<=>(const ConceptId&, const ConceptId&) = default;
};

struct ModelConfig {
  Eigen::Index dim = 16;
  double temperature = 0.2;
  std::uint64_t seed = 42;
  int train_epochs = 300;
  double train_rate = 1.0;

  // Throws InvalidConfig.
  void validate() const;
};

struct Fact {
  ConceptId subject;
  ConceptId object;
  std::set<std::string> categories;

  friend bool operator==(const Fact&, const Fact&) = default;
};

// A (subject -> expected) query against the model.
struct Probe {
  ConceptId subject;
  ConceptId expected;

  friend bool operator==(const Probe&, const Probe&) = default;
};

/// Concept-association model: one unit-norm embedding per concept and a
/// softmax head scoring candidate objects by e_subject . e_object / T.
///
/// Values are immutable snapshots; the `with_*` members return modified
/// copies and leave the receiver untouched.
class AssociationModel {
 public:
  // Validates every invariant (unique non-empty names, one unit-norm column
  // per concept, facts reference known concepts). Throws InvalidConfig,
  // UnknownConcept or EmptyFactBase.
  static AssociationModel from_parts(ModelConfig config,
                                     std::vector<std::string> vocabulary,
                                     Matrix embeddings, std::vector<Fact> facts);

  const ModelConfig& config() const { return config_; }
  std::size_t size() const { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const Matrix& embeddings() const { return embeddings_; }
  const std::vector<Fact>& facts() const { return facts_; }

  auto embedding(ConceptId c) const {
    return embeddings_.col(static_cast<Eigen::Index>(c.value));
  }

  const std::string& name(ConceptId c) const;
  std::optional<ConceptId> find(std::string_view name) const;
  // Throws UnknownConcept naming the missing concept.
  ConceptId require(std::string_view name) const;
  // Throws UnknownConcept when out of range.
  void check(ConceptId c) const;

  AssociationModel with_embedding(ConceptId c, const Vector& vector) const;
  AssociationModel with_facts(std::vector<Fact> facts) const;

 private:
  AssociationModel() = default;

  ModelConfig config_;
  std::vector<std::string> vocabulary_;
  Matrix embeddings_;
  std::vector<Fact> facts_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Tolerance of the at-rest unit-norm invariant.
inline constexpr double kUnitNormTolerance = 1e-9;

// Deterministic initialization: coordinates drawn from std::mt19937_64 seeded
// with config.seed, each mapped to [-1, 1) from its top 53 bits, then every
// column normalized. Training is full-batch gradient ascent on the mean
// log-probability of each fact's object given its subject, re-normalizing all
// embeddings after each epoch.
AssociationModel build_model(std::vector<std::string> vocabulary,
                             std::vector<Fact> facts, const ModelConfig& config);

// Untrained, seeded initial embeddings (dim x vocabulary_size).
Matrix initial_embeddings(std::size_t vocabulary_size, const ModelConfig& config);

// Mean log-probability of the facts under the model (the training objective).
double mean_fact_log_prob(const AssociationModel& model);

// ln p(object | subject), softmax over all candidates other than the subject.
double log_prob(const AssociationModel& model, ConceptId subject, ConceptId object);

// Full candidate distribution for a subject; entry `subject` is 0.
Vector candidate_probabilities(const AssociationModel& model, ConceptId subject);

// argmax over o != subject of e_subject . e_o, ties to the lowest id.
ConceptId predict(const AssociationModel& model, ConceptId subject);

// L(e_c): mean log-probability of forget-probe targets. Every probe must
// have `target` as its subject or expected output.
double influence(const AssociationModel& model, ConceptId target,
                 std::span<const Probe> forget_probes);

// Analytic gradient of influence() with respect to the embedding of target.
Vector grad_influence(const AssociationModel& model, ConceptId target,
                      std::span<const Probe> forget_probes);

// Influence evaluated with the target's embedding replaced by `vector`
// (which need not be unit norm).
double influence_at(const AssociationModel& model, ConceptId target,
                    const Vector& vector, std::span<const Probe> forget_probes);

Vector grad_influence_at(const AssociationModel& model, ConceptId target,
                         const Vector& vector, std::span<const Probe> forget_probes);

// Chance-level log-probability ln(1 / (|V| - 1)).
double chance_level(const AssociationModel& model);

}  // namespace lethe

template <>
struct std::hash<lethe::ConceptId> {
  std::size_t operator()(const lethe::ConceptId& c) const noexcept {
    return std::hash<std::size_t>{}(c.value);
  }
};
