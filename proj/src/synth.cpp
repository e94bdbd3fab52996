#include "synprobe/synth.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>

#include "synprobe/error.hpp"
#include "synprobe/random.hpp"

namespace synprobe {
namespace {

using Words = std::vector<std::string_view>;

const Words kDeterminers = {"the", "a", "that", "this", "every", "some"};
const Words kNouns = {"dog", "cat", "man", "woman", "park", "house", "ball", "book", "fish",
                      "watch", "duck", "can", "plays", "runs", "saw", "bird", "tree", "car"};
const Words kVerbs = {"sees", "likes", "saw", "fish", "watch", "duck", "plays", "runs",
                      "takes", "finds", "knows", "thinks", "wants", "hears"};
const Words kAdjectives = {"big", "small", "red", "happy", "old", "new", "quick", "green"};
const Words kDegreeAdverbs = {"very", "quite", "really", "often"};
const Words kAdverbs = {"today", "often", "really", "yesterday", "now"};
const Words kModals = {"will", "can", "must", "may"};
const Words kNames = {"John", "Mary", "Monday", "Paris", "Alice", "Bob"};
const Words kPronouns = {"he", "she", "it", "they", "we"};
const Words kPrepositions = {"in", "on", "with", "near", "before", "after"};
const Words kComplementizers = {"that", "because", "before", "after", "since"};

class Generator {
 public:
  Generator(Rng& rng, const SynthConfig& config) : rng_(rng), config_(config) {}

  TreeNode sentence(std::size_t depth) {
    TreeNode s{"S", "", {}};
    if (rng_.uniform() < 0.2) s.children.push_back(leaf_phrase("ADVP", "RB", kAdverbs));
    s.children.push_back(noun_phrase(depth + 1));
    s.children.push_back(verb_phrase(depth + 1));
    return s;
  }

 private:
  static TreeNode leaf(std::string_view tag, std::string_view word) {
    return TreeNode{std::string(tag), std::string(word), {}};
  }

  TreeNode pick(std::string_view tag, const Words& words) {
    return leaf(tag, words[rng_.uniform_index(words.size())]);
  }

  TreeNode leaf_phrase(std::string_view label, std::string_view tag, const Words& words) {
    return TreeNode{std::string(label), "", {pick(tag, words)}};
  }

  bool recursion_allowed(std::size_t depth) const { return depth < config_.max_depth; }

  TreeNode noun_phrase(std::size_t depth) {
    TreeNode np{"NP", "", {}};
    double r = rng_.uniform();
    if (!recursion_allowed(depth)) r *= 0.85;
    if (r < 0.35) {
      np.children = {pick("DT", kDeterminers), pick("NN", kNouns)};
    } else if (r < 0.55) {
      np.children = {pick("DT", kDeterminers), pick("JJ", kAdjectives), pick("NN", kNouns)};
    } else if (r < 0.70) {
      np.children = {pick("NNP", kNames)};
    } else if (r < 0.85) {
      np.children = {pick("PRP", kPronouns)};
    } else {
      np.children = {noun_phrase(depth + 1), prepositional_phrase(depth + 1)};
    }
    return np;
  }

  TreeNode prepositional_phrase(std::size_t depth) {
    return TreeNode{"PP", "", {pick("IN", kPrepositions), noun_phrase(depth + 1)}};
  }

  TreeNode adjective_phrase() {
    TreeNode adjp{"ADJP", "", {}};
    if (rng_.uniform() < 0.4) adjp.children.push_back(pick("RB", kDegreeAdverbs));
    adjp.children.push_back(pick("JJ", kAdjectives));
    return adjp;
  }

  TreeNode verb_phrase(std::size_t depth) {
    TreeNode vp{"VP", "", {}};
    double r = rng_.uniform();
    if (!recursion_allowed(depth)) r *= 0.75;
    if (r < 0.35) {
      vp.children = {pick("VB", kVerbs), noun_phrase(depth + 1)};
    } else if (r < 0.50) {
      vp.children = {pick("VB", kVerbs), noun_phrase(depth + 1), prepositional_phrase(depth + 1)};
    } else if (r < 0.60) {
      vp.children = {pick("VB", kVerbs)};
    } else if (r < 0.75) {
      vp.children = {pick("VB", kVerbs), adjective_phrase()};
    } else if (r < 0.85) {
      vp.children = {pick("VB", kVerbs),
                     TreeNode{"SBAR", "", {pick("IN", kComplementizers), sentence(depth + 1)}}};
    } else {
      vp.children = {pick("MD", kModals), verb_phrase(depth + 1)};
    }
    return vp;
  }

  Rng& rng_;
  const SynthConfig& config_;
};

std::size_t count_leaves(const TreeNode& node) {
  if (node.is_preterminal()) return 1;
  std::size_t n = 0;
  for (const auto& c : node.children) n += count_leaves(c);
  return n;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::size_t head_child(const TreeNode& node) {
  const auto& kids = node.children;
  auto first = [&](auto pred) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (pred(kids[i].label)) return i;
    }
    return std::nullopt;
  };
  auto last = [&](auto pred) -> std::optional<std::size_t> {
    for (std::size_t i = kids.size(); i-- > 0;) {
      if (pred(kids[i].label)) return i;
    }
    return std::nullopt;
  };
  auto is = [](std::string_view want) { return [want](const std::string& l) { return l == want; }; };
  std::optional<std::size_t> h;
  if (node.label == "S") {
    h = first(is("VP"));
  } else if (node.label == "VP") {
    h = first([](const std::string& l) { return l == "MD" || starts_with(l, "VB"); });
  } else if (node.label == "NP") {
    h = last([](const std::string& l) { return starts_with(l, "NN") || l == "PRP"; });
    if (!h) h = first(is("NP"));
  } else if (node.label == "PP" || node.label == "SBAR") {
    h = first(is("IN"));
  } else if (node.label == "ADJP") {
    h = first([](const std::string& l) { return starts_with(l, "JJ"); });
  } else if (node.label == "ADVP") {
    h = first([](const std::string& l) { return starts_with(l, "RB"); });
  }
  return h.value_or(0);
}

// Returns the 1-based position of the node's lexical head and attaches the
// heads of non-head children to it.
int attach(const TreeNode& node, int& next_position, DependencySentence& out) {
  if (node.is_preterminal()) return ++next_position;
  const std::size_t head = head_child(node);
  std::vector<int> child_heads;
  child_heads.reserve(node.children.size());
  for (const auto& c : node.children) child_heads.push_back(attach(c, next_position, out));
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (i == head) continue;
    const auto dep = static_cast<std::size_t>(child_heads[i] - 1);
    out.heads[dep] = child_heads[head];
    std::string rel = node.children[i].label;
    std::transform(rel.begin(), rel.end(), rel.begin(), [](unsigned char ch) { return std::tolower(ch); });
    out.relations[dep] = rel;
  }
  return child_heads[head];
}

}  // namespace

DependencySentence head_dependencies(const ConstituencyTree& tree) {
  DependencySentence out;
  out.sentence_id = tree.sentence_id;
  out.tokens = tokens_of(tree);
  out.heads.assign(out.tokens.size(), 0);
  out.relations.assign(out.tokens.size(), "root");
  int position = 0;
  const int root = attach(tree.root, position, out);
  out.heads[static_cast<std::size_t>(root - 1)] = 0;
  out.relations[static_cast<std::size_t>(root - 1)] = "root";
  return out;
}

std::vector<SynthSentence> generate_synthetic(std::size_t count, std::uint64_t seed, std::string_view prefix,
                                              const SynthConfig& config) {
  if (config.max_tokens < 2) throw UsageError("max_tokens must be at least 2");
  Rng rng(seed);
  Generator gen(rng, config);
  std::vector<SynthSentence> out;
  out.reserve(count);
  while (out.size() < count) {
    TreeNode root = gen.sentence(0);
    if (count_leaves(root) > config.max_tokens) continue;
    ConstituencyTree tree{std::string(prefix) + ":" + std::to_string(out.size() + 1), std::move(root)};
    DependencySentence deps = head_dependencies(tree);
    out.push_back({std::move(tree), std::move(deps)});
  }
  return out;
}

}  // namespace synprobe
