#include "lethe/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <utility>

#include "lethe/error.hpp"

namespace lethe {

KnowledgeBase synthetic_knowledge_base(std::size_t concepts, std::size_t facts,
                                       std::uint64_t seed) {
  if (concepts < 2) fail(Errc::InvalidConfig, "need at least two concepts");
  if (facts == 0) fail(Errc::EmptyFactBase, "need at least one fact");
  if (facts > concepts * (concepts - 1)) {
    fail(Errc::InvalidConfig, "more facts requested than distinct concept pairs");
  }
  const std::size_t topics = std::max<std::size_t>(1, concepts / 10);

  KnowledgeBase kb;
  kb.vocabulary.reserve(concepts);
  for (std::size_t i = 0; i < concepts; ++i) kb.vocabulary.push_back("c" + std::to_string(i));

  std::mt19937_64 rng(seed);
  auto below = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  // Members of topic t are t, t + topics, t + 2 * topics, ...
  auto topic_size = [&](std::size_t t) { return (concepts - t + topics - 1) / topics; };

  std::set<std::pair<std::size_t, std::size_t>> seen;
  while (kb.facts.size() < facts) {
    const std::size_t s = below(concepts);
    const std::size_t t = s % topics;
    std::size_t o = 0;
    if (below(4) < 3) {
      o = t + topics * below(topic_size(t));
    } else {
      o = below(concepts);
    }
    if (o == s || !seen.emplace(s, o).second) continue;
    kb.facts.push_back({ConceptId{s}, ConceptId{o}, {"topic" + std::to_string(t)}});
  }
  return kb;
}

}  // namespace lethe
