#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "synprobe/treebank.hpp"

namespace synprobe {

/// Small probabilistic grammar over English-like words. Several words are
/// ambiguous between categories (noun/verb, determiner/complementizer,
/// adjective under NP or ADJP) so that constituent labels above the POS level
/// depend on context.
struct SynthConfig {
  std::size_t max_depth = 7;     // recursive rules are disabled beyond this nesting
  std::size_t max_tokens = 30;   // longer samples are redrawn
};

struct SynthSentence {
  ConstituencyTree tree;
  DependencySentence dependencies;
};

/// `count` sentences with ids `<prefix>:<n>`, n from 1. Deterministic in
/// `seed`.
std::vector<SynthSentence> generate_synthetic(std::size_t count, std::uint64_t seed, std::string_view prefix,
                                              const SynthConfig& config = {});

/// Head-rule conversion of a constituency tree: S is headed by its VP, VP by
/// its first verb or modal, NP by its last noun or pronoun (else its first
/// NP), PP and SBAR by IN, ADJP by the adjective, ADVP by the adverb. Other
/// labels take their first child. Relations are the dependent's constituent
/// label in lower case, or "root".
DependencySentence head_dependencies(const ConstituencyTree& tree);

}  // namespace synprobe
