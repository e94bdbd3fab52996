#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace synprobe {

/// Node of a constituency tree. A node with no children is a preterminal:
/// its label is the POS tag and `word` is the token it dominates.
struct TreeNode {
  std::string label;
  std::string word;
  std::vector<TreeNode> children;

  bool is_preterminal() const noexcept { return children.empty(); }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct ConstituencyTree {
  std::string sentence_id;
  TreeNode root;

  friend bool operator==(const ConstituencyTree&, const ConstituencyTree&) = default;
};

/// Heads are CoNLL-U style: 0 is the artificial root, otherwise the 1-based
/// position of the governing token.
struct DependencySentence {
  std::string sentence_id;
  std::vector<std::string> tokens;
  std::vector<int> heads;
  std::vector<std::string> relations;

  std::size_t size() const noexcept { return tokens.size(); }

  friend bool operator==(const DependencySentence&, const DependencySentence&) = default;
};

/// A recoverable problem found while reading a treebank (a skipped tree or a
/// rejected sentence). `line` is 1-based; 0 when not applicable.
struct Diagnostic {
  std::string message;
  std::size_t line = 0;
};

template <typename Sentence>
struct ParseResult {
  std::vector<Sentence> sentences;
  std::vector<Diagnostic> diagnostics;
};

/// Reads bracketed (PTB) trees. Function tags and coindexation suffixes are
/// stripped from labels, `-NONE-` leaves and the constituents they empty are
/// removed, and an unlabeled outer wrapper bracket is dropped. A line of the
/// form `# sent_id = X` between trees names the next tree; otherwise ids are
/// `<source>:<n>` with n counted from 1.
///
/// Throws ParseError on unbalanced or malformed bracketing. Trees that become
/// empty after normalization are skipped with a diagnostic.
ParseResult<ConstituencyTree> parse_ptb(std::string_view text,
                                        std::string_view source = "ptb");

/// Reads 10-column, tab-separated CoNLL-U. Multiword-token and empty-node
/// lines are ignored. Sentences with malformed ids, non-integer or
/// out-of-range heads, or cyclic head graphs are rejected with a diagnostic;
/// the remaining sentences are returned. Never throws on malformed input.
ParseResult<DependencySentence> parse_conllu(std::string_view text,
                                             std::string_view source = "conllu");

/// In-order (token, POS) pairs.
std::vector<std::pair<std::string, std::string>> leaves(const ConstituencyTree& tree);

std::vector<std::string> tokens_of(const ConstituencyTree& tree);

/// Single-line bracketed form, e.g. "(S (NP (NNP Monday)))".
std::string to_ptb(const ConstituencyTree& tree);

std::string to_conllu(const DependencySentence& sentence);

/// Strips function tags and coindexation from a label: "NP-SBJ-1" -> "NP",
/// "NP=2" -> "NP". Labels that begin with '-' (e.g. "-LRB-") are kept.
std::string base_label(std::string_view label);

/// Reads a whole file into memory. Throws DataError if it cannot be opened.
std::string read_text_file(const std::string& path);

/// Replaces the file's contents. Throws DataError on failure.
void write_text_file(const std::string& path, std::string_view bytes);

/// Last path component without extension, used as a default id prefix.
std::string file_stem(const std::string& path);

}  // namespace synprobe
