#include "lethe/model.hpp"

#include <cmath>
#include <random>

#include "lethe/error.hpp"
#include "lethe/kernels.hpp"

namespace lethe {
namespace {

double influence_impl(const Matrix& embeddings, double temperature,
                      std::span<const Probe> probes) {
  double total = 0.0;
  for (const Probe& p : probes) {
    const auto s = static_cast<Eigen::Index>(p.subject.value);
    const auto o = static_cast<Eigen::Index>(p.expected.value);
    const Vector logits =
        kernels::candidate_logits(embeddings, embeddings.col(s), s, temperature);
    total += logits(o) - kernels::log_sum_exp(logits);
  }
  return total / static_cast<double>(probes.size());
}

Vector grad_impl(const Matrix& embeddings, double temperature, ConceptId target,
                 std::span<const Probe> probes) {
  const auto c = static_cast<Eigen::Index>(target.value);
  Vector grad = Vector::Zero(embeddings.rows());
  for (const Probe& p : probes) {
    const auto s = static_cast<Eigen::Index>(p.subject.value);
    const auto o = static_cast<Eigen::Index>(p.expected.value);
    const Vector probs = kernels::softmax(
        kernels::candidate_logits(embeddings, embeddings.col(s), s, temperature));
    if (s == c) {
      grad += kernels::query_gradient(embeddings, probs, o, temperature);
    } else {
      grad += kernels::candidate_gradient(embeddings.col(s), probs(c), o == c,
                                          temperature);
    }
  }
  return grad / static_cast<double>(probes.size());
}

void check_probes(const AssociationModel& model, ConceptId target,
                  std::span<const Probe> probes) {
  model.check(target);
  if (probes.empty()) fail(Errc::EmptyProbeSet, "forget probe set is empty");
  for (const Probe& p : probes) {
    model.check(p.subject);
    model.check(p.expected);
    if (p.subject == p.expected) {
      fail(Errc::SelfQuery, "probe subject equals its expected output: " +
                                model.name(p.subject));
    }
    if (p.subject != target && p.expected != target) {
      fail(Errc::ProbeUnrelatedToConcept,
           "probe " + model.name(p.subject) + "->" + model.name(p.expected) +
               " does not involve " + model.name(target));
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (dim < 2) fail(Errc::InvalidConfig, "dim must be at least 2");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(Errc::InvalidConfig, "temperature must be positive");
  }
  if (train_epochs < 1) fail(Errc::InvalidConfig, "train_epochs must be positive");
  if (!(train_rate > 0.0) || !std::isfinite(train_rate)) {
    fail(Errc::InvalidConfig, "train_rate must be positive");
  }
}

AssociationModel AssociationModel::from_parts(ModelConfig config,
                                              std::vector<std::string> vocabulary,
                                              Matrix embeddings,
                                              std::vector<Fact> facts) {
  config.validate();
  if (vocabulary.size() < 2) {
    fail(Errc::InvalidConfig, "vocabulary needs at least two concepts");
  }
  AssociationModel model;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i].empty()) fail(Errc::InvalidConfig, "empty concept name");
    if (!model.index_.emplace(vocabulary[i], i).second) {
      fail(Errc::InvalidConfig, "duplicate concept name: " + vocabulary[i]);
    }
  }
  if (embeddings.rows() != config.dim ||
      embeddings.cols() != static_cast<Eigen::Index>(vocabulary.size())) {
    fail(Errc::InvalidConfig, "embedding matrix shape does not match config");
  }
  for (Eigen::Index k = 0; k < embeddings.cols(); ++k) {
    if (std::abs(embeddings.col(k).norm() - 1.0) > kUnitNormTolerance) {
      fail(Errc::InvalidConfig, "embedding of " + vocabulary[k] + " is not unit norm");
    }
  }
  model.config_ = config;
  model.vocabulary_ = std::move(vocabulary);
  model.embeddings_ = std::move(embeddings);
  for (const Fact& f : facts) {
    model.check(f.subject);
    model.check(f.object);
    if (f.subject == f.object) {
      fail(Errc::InvalidConfig, "fact relates a concept to itself: " +
                                    model.name(f.subject));
    }
  }
  model.facts_ = std::move(facts);
  return model;
}

const std::string& AssociationModel::name(ConceptId c) const {
  check(c);
  return vocabulary_[c.value];
}

std::optional<ConceptId> AssociationModel::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return ConceptId{it->second};
}

ConceptId AssociationModel::require(std::string_view name) const {
  if (auto c = find(name)) return *c;
  fail(Errc::UnknownConcept, "unknown concept: " + std::string(name));
}

void AssociationModel::check(ConceptId c) const {
  if (c.value >= vocabulary_.size()) {
    fail(Errc::UnknownConcept, "concept id out of range: " + std::to_string(c.value));
  }
}

AssociationModel AssociationModel::with_embedding(ConceptId c,
                                                  const Vector& vector) const {
  check(c);
  if (vector.size() != embeddings_.rows() ||
      std::abs(vector.norm() - 1.0) > kUnitNormTolerance) {
    fail(Errc::InvalidConfig, "replacement embedding must be unit norm of size dim");
  }
  AssociationModel out = *this;
  out.embeddings_.col(static_cast<Eigen::Index>(c.value)) = vector;
  return out;
}

AssociationModel AssociationModel::with_facts(std::vector<Fact> facts) const {
  return from_parts(config_, vocabulary_, embeddings_, std::move(facts));
}

Matrix initial_embeddings(std::size_t vocabulary_size, const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  auto draw = [&rng] {
    return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
  };
  Matrix embeddings(config.dim, static_cast<Eigen::Index>(vocabulary_size));
  for (Eigen::Index k = 0; k < embeddings.cols(); ++k) {
    do {
      for (Eigen::Index i = 0; i < embeddings.rows(); ++i) embeddings(i, k) = draw();
    } while (embeddings.col(k).squaredNorm() == 0.0);
    embeddings.col(k).normalize();
  }
  return embeddings;
}

AssociationModel build_model(std::vector<std::string> vocabulary,
                             std::vector<Fact> facts, const ModelConfig& config) {
  config.validate();
  if (facts.empty()) fail(Errc::EmptyFactBase, "fact base is empty");
  // Validates names and fact references before training.
  Matrix initial = initial_embeddings(vocabulary.size(), config);
  AssociationModel model = AssociationModel::from_parts(
      config, std::move(vocabulary), std::move(initial), std::move(facts));

  Matrix embeddings = model.embeddings();
  const double temperature = config.temperature;
  const double scale = config.train_rate / static_cast<double>(model.facts().size());
  Matrix grad(embeddings.rows(), embeddings.cols());
  Vector weights(embeddings.cols());
  for (int epoch = 0; epoch < config.train_epochs; ++epoch) {
    grad.setZero();
    for (const Fact& f : model.facts()) {
      const auto s = static_cast<Eigen::Index>(f.subject.value);
      const auto o = static_cast<Eigen::Index>(f.object.value);
      const Vector probs = kernels::softmax(
          kernels::candidate_logits(embeddings, embeddings.col(s), s, temperature));
      grad.col(s) += kernels::query_gradient(embeddings, probs, o, temperature);
      // Candidate columns: (1[k = o] - p_k) e_s / T; column s has weight 0.
      weights = -probs;
      weights(o) += 1.0;
      grad.noalias() += embeddings.col(s) * (weights.transpose() / temperature);
    }
    embeddings += scale * grad;
    kernels::normalize_columns(embeddings);
  }
  return AssociationModel::from_parts(config, model.vocabulary(), std::move(embeddings),
                                      model.facts());
}

double mean_fact_log_prob(const AssociationModel& model) {
  if (model.facts().empty()) fail(Errc::EmptyFactBase, "fact base is empty");
  std::vector<Probe> probes;
  probes.reserve(model.facts().size());
  for (const Fact& f : model.facts()) probes.push_back({f.subject, f.object});
  return influence_impl(model.embeddings(), model.config().temperature, probes);
}

Vector candidate_probabilities(const AssociationModel& model, ConceptId subject) {
  model.check(subject);
  const auto s = static_cast<Eigen::Index>(subject.value);
  return kernels::softmax(kernels::candidate_logits(
      model.embeddings(), model.embeddings().col(s), s, model.config().temperature));
}

double log_prob(const AssociationModel& model, ConceptId subject, ConceptId object) {
  model.check(subject);
  model.check(object);
  if (subject == object) {
    fail(Errc::SelfQuery, "subject and object are the same concept: " +
                              model.name(subject));
  }
  const Probe probe{subject, object};
  return influence_impl(model.embeddings(), model.config().temperature, {&probe, 1});
}

ConceptId predict(const AssociationModel& model, ConceptId subject) {
  model.check(subject);
  const auto s = static_cast<Eigen::Index>(subject.value);
  const Vector scores = model.embeddings().transpose() * model.embeddings().col(s);
  Eigen::Index best = -1;
  for (Eigen::Index k = 0; k < scores.size(); ++k) {
    if (k == s) continue;
    if (best < 0 || scores(k) > scores(best)) best = k;
  }
  return ConceptId{static_cast<std::size_t>(best)};
}

double influence(const AssociationModel& model, ConceptId target,
                 std::span<const Probe> forget_probes) {
  check_probes(model, target, forget_probes);
  return influence_impl(model.embeddings(), model.config().temperature, forget_probes);
}

double influence_at(const AssociationModel& model, ConceptId target,
                    const Vector& vector, std::span<const Probe> forget_probes) {
  check_probes(model, target, forget_probes);
  Matrix embeddings = model.embeddings();
  embeddings.col(static_cast<Eigen::Index>(target.value)) = vector;
  return influence_impl(embeddings, model.config().temperature, forget_probes);
}

Vector grad_influence(const AssociationModel& model, ConceptId target,
                      std::span<const Probe> forget_probes) {
  check_probes(model, target, forget_probes);
  return grad_impl(model.embeddings(), model.config().temperature, target,
                   forget_probes);
}

Vector grad_influence_at(const AssociationModel& model, ConceptId target,
                         const Vector& vector, std::span<const Probe> forget_probes) {
  check_probes(model, target, forget_probes);
  Matrix embeddings = model.embeddings();
  embeddings.col(static_cast<Eigen::Index>(target.value)) = vector;
  return grad_impl(embeddings, model.config().temperature, target, forget_probes);
}

double chance_level(const AssociationModel& model) {
  return std::log(1.0 / static_cast<double>(model.size() - 1));
}

}  // namespace lethe
