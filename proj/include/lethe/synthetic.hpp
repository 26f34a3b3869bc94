#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lethe/model.hpp"

namespace lethe {

struct KnowledgeBase {
  std::vector<std::string> vocabulary;
  std::vector<Fact> facts;
};

// Seeded synthetic knowledge base: concepts "c0".."c{n-1}" split round-robin
// into max(1, n / 10) topics "topic0".."topic{k-1}". Each fact draws a uniform
// subject and, with probability 3/4, an object from the subject's topic
// (otherwise any concept); self and duplicate pairs are redrawn. A fact is
// labelled with its subject's topic. Throws InvalidConfig when the requested
// fact count exceeds n * (n - 1) or n < 2.
KnowledgeBase synthetic_knowledge_base(std::size_t concepts, std::size_t facts,
                                       std::uint64_t seed);

}  // namespace lethe
