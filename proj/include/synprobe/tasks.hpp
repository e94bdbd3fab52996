#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synprobe/treebank.hpp"

namespace synprobe {

/// Label used when a token has fewer ancestors than the requested level.
inline constexpr std::string_view kRootSentinel = "<ROOT>";

/// Ordered, deduplicated label set. Labels absent from it (seen only at
/// evaluation time) map to kUnknown, which no prediction can match.
class LabelVocabulary {
 public:
  static constexpr int kUnknown = -1;
  static constexpr std::string_view kUnknownLabel = "<UNK-LABEL>";

  LabelVocabulary() = default;
  /// Sorts and deduplicates.
  explicit LabelVocabulary(std::vector<std::string> labels);

  int index_of(std::string_view label) const;
  const std::string& label(int index) const;
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  friend bool operator==(const LabelVocabulary& a, const LabelVocabulary& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int, std::less<>> index_;
};

/// Token strings of every sentence a task draws from, used to check
/// representation alignment byte for byte.
using SentenceTokens = std::map<std::string, std::vector<std::string>, std::less<>>;

enum class WordTaskKind { kPos = 0, kParent = 1, kGrandparent = 2, kGreatGrandparent = 3 };

struct WordExample {
  std::string sentence_id;
  int token_index = 0;  // 0-based position in the sentence
  std::string label;

  friend bool operator==(const WordExample&, const WordExample&) = default;
};

struct WordLabelTask {
  int level = 0;
  std::vector<WordExample> examples;
  SentenceTokens sentences;
};

/// `child` and `other` are 1-based token positions, as in CoNLL-U.
struct ArcExample {
  std::string sentence_id;
  int child = 0;
  int other = 0;
  bool is_arc = false;

  friend bool operator==(const ArcExample&, const ArcExample&) = default;
};

struct ArcSkipSummary {
  std::size_t root_tokens = 0;
  std::size_t short_sentence_tokens = 0;
};

struct ArcPairTask {
  std::uint64_t seed = 0;
  std::vector<ArcExample> examples;
  SentenceTokens sentences;
  ArcSkipSummary skipped;
};

/// One example per leaf; the label is the node `level` steps above the
/// preterminal (level 0 is the POS tag itself), or kRootSentinel when the
/// walk leaves the tree.
WordLabelTask extract_word_labels(std::span<const ConstituencyTree> corpus, int level);

/// For each non-root token of each sentence with at least 3 tokens, emits the
/// gold (token, head) pair followed by one negative pair whose other token is
/// drawn uniformly from the sentence, excluding the token and its head.
ArcPairTask generate_arc_pairs(std::span<const DependencySentence> corpus, std::uint64_t seed);

/// Throws DataError on an empty task.
LabelVocabulary build_vocabulary(const WordLabelTask& task);

/// {"0", "1"}: index equals is_arc.
LabelVocabulary arc_vocabulary();

/// Task names used by the CLI and reports: pos, parent, grandparent,
/// greatgrandparent, arc.
std::string_view word_task_name(int level);
std::optional<int> word_task_level(std::string_view name);

/// `sentence_id \t token_index \t label` per line.
std::string format_word_task(const WordLabelTask& task);
/// `sentence_id \t child \t other \t {0,1}` per line.
std::string format_arc_task(const ArcPairTask& task);

}  // namespace synprobe
