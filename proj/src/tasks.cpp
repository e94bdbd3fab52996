#include "synprobe/tasks.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "synprobe/error.hpp"
#include "synprobe/random.hpp"

namespace synprobe {
namespace {

constexpr std::array<std::string_view, 4> kWordTaskNames = {"pos", "parent", "grandparent",
                                                            "greatgrandparent"};

void walk(const TreeNode& node, std::vector<const TreeNode*>& path, int level,
          const std::string& sentence_id, int& position, std::vector<WordExample>& out) {
  path.push_back(&node);
  if (node.is_preterminal()) {
    const int depth = static_cast<int>(path.size()) - 1;
    std::string label = level <= depth ? path[depth - level]->label : std::string(kRootSentinel);
    out.push_back({sentence_id, position++, std::move(label)});
  } else {
    for (const auto& child : node.children) walk(child, path, level, sentence_id, position, out);
  }
  path.pop_back();
}

}  // namespace

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  for (std::size_t i = 0; i < labels_.size(); ++i) index_.emplace(labels_[i], static_cast<int>(i));
}

int LabelVocabulary::index_of(std::string_view label) const {
  auto it = index_.find(label);
  return it == index_.end() ? kUnknown : it->second;
}

const std::string& LabelVocabulary::label(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= labels_.size()) {
    static const std::string unknown(kUnknownLabel);
    return unknown;
  }
  return labels_[static_cast<std::size_t>(index)];
}

WordLabelTask extract_word_labels(std::span<const ConstituencyTree> corpus, int level) {
  if (level < 0 || level > 3) throw UsageError("word task level must be in 0..3");
  WordLabelTask task;
  task.level = level;
  std::vector<const TreeNode*> path;
  for (const auto& tree : corpus) {
    int position = 0;
    walk(tree.root, path, level, tree.sentence_id, position, task.examples);
    task.sentences.emplace(tree.sentence_id, tokens_of(tree));
  }
  return task;
}

ArcPairTask generate_arc_pairs(std::span<const DependencySentence> corpus, std::uint64_t seed) {
  ArcPairTask task;
  task.seed = seed;
  Rng rng(seed);
  for (const auto& sentence : corpus) {
    task.sentences.emplace(sentence.sentence_id, sentence.tokens);
    const int n = static_cast<int>(sentence.size());
    for (int child = 1; child <= n; ++child) {
      const int head = sentence.heads[static_cast<std::size_t>(child - 1)];
      if (head == 0) {
        ++task.skipped.root_tokens;
        continue;
      }
      if (n < 3) {
        ++task.skipped.short_sentence_tokens;
        continue;
      }
      // Candidates are 1..n minus {child, head}: n - 2 of them.
      int pick = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - 2))) + 1;
      const int lo = std::min(child, head);
      const int hi = std::max(child, head);
      if (pick >= lo) ++pick;
      if (pick >= hi) ++pick;
      task.examples.push_back({sentence.sentence_id, child, head, true});
      task.examples.push_back({sentence.sentence_id, child, pick, false});
    }
  }
  return task;
}

LabelVocabulary build_vocabulary(const WordLabelTask& task) {
  if (task.examples.empty()) throw DataError("cannot build a label vocabulary from an empty task");
  std::vector<std::string> labels;
  labels.reserve(task.examples.size());
  for (const auto& ex : task.examples) labels.push_back(ex.label);
  return LabelVocabulary(std::move(labels));
}

LabelVocabulary arc_vocabulary() { return LabelVocabulary({"0", "1"}); }

std::string_view word_task_name(int level) {
  if (level < 0 || level > 3) throw std::out_of_range("word task level");
  return kWordTaskNames[static_cast<std::size_t>(level)];
}

std::optional<int> word_task_level(std::string_view name) {
  for (std::size_t i = 0; i < kWordTaskNames.size(); ++i) {
    if (kWordTaskNames[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string format_word_task(const WordLabelTask& task) {
  std::string out;
  for (const auto& ex : task.examples) {
    out += ex.sentence_id;
    out += '\t';
    out += std::to_string(ex.token_index);
    out += '\t';
    out += ex.label;
    out += '\n';
  }
  return out;
}

std::string format_arc_task(const ArcPairTask& task) {
  std::string out;
  for (const auto& ex : task.examples) {
    out += ex.sentence_id + '\t' + std::to_string(ex.child) + '\t' + std::to_string(ex.other) + '\t' +
           (ex.is_arc ? '1' : '0') + '\n';
  }
  return out;
}

}  // namespace synprobe
