#include "synprobe/treebank.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "synprobe/error.hpp"

namespace synprobe {
namespace {

constexpr std::size_t kMaxDepth = 2000;

struct Frame {
  std::string label;
  bool has_label = false;
  std::string word;
  bool has_word = false;
  std::vector<TreeNode> children;
  std::size_t line = 0;
  std::size_t column = 0;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// "# sent_id = X" -> X
std::optional<std::string> sent_id_comment(std::string_view line) {
  line = trim(line);
  if (line.empty() || line.front() != '#') return std::nullopt;
  line.remove_prefix(1);
  line = trim(line);
  constexpr std::string_view key = "sent_id";
  if (line.substr(0, key.size()) != key) return std::nullopt;
  line.remove_prefix(key.size());
  line = trim(line);
  if (line.empty() || line.front() != '=') return std::nullopt;
  line.remove_prefix(1);
  line = trim(line);
  if (line.empty()) return std::nullopt;
  return std::string(line);
}

std::optional<TreeNode> normalize(TreeNode node) {
  if (node.is_preterminal()) {
    if (node.label == "-NONE-") return std::nullopt;
    node.label = base_label(node.label);
    return node;
  }
  std::vector<TreeNode> kept;
  kept.reserve(node.children.size());
  for (auto& child : node.children) {
    if (auto n = normalize(std::move(child))) kept.push_back(std::move(*n));
  }
  if (kept.empty()) return std::nullopt;
  node.children = std::move(kept);
  node.label = base_label(node.label);
  return node;
}

void collect_leaves(const TreeNode& node,
                    std::vector<std::pair<std::string, std::string>>& out) {
  if (node.is_preterminal()) {
    out.emplace_back(node.word, node.label);
    return;
  }
  for (const auto& child : node.children) collect_leaves(child, out);
}

void write_ptb(const TreeNode& node, std::string& out) {
  out += '(';
  out += node.label;
  if (node.is_preterminal()) {
    out += ' ';
    out += node.word;
  } else {
    for (const auto& child : node.children) {
      out += ' ';
      write_ptb(child, out);
    }
  }
  out += ')';
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find('\t', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace

std::string base_label(std::string_view label) {
  if (label.empty() || label.front() == '-' || label.front() == '=') {
    return std::string(label);
  }
  const std::size_t cut = label.find_first_of("-=", 1);
  return std::string(label.substr(0, cut));
}

ParseResult<ConstituencyTree> parse_ptb(std::string_view text, std::string_view source) {
  ParseResult<ConstituencyTree> result;
  std::vector<Frame> stack;
  std::optional<std::string> pending_id;
  std::unordered_set<std::string> seen_ids;
  std::size_t tree_count = 0;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t tree_line = 1;

  auto finish_tree = [&](TreeNode node) {
    ++tree_count;
    std::string id = pending_id ? *pending_id
                                : std::string(source) + ":" + std::to_string(tree_count);
    pending_id.reset();
    if (node.label.empty()) {
      if (node.children.size() != 1) {
        throw ParseError("unlabeled top-level bracket with " +
                             std::to_string(node.children.size()) + " children",
                         tree_line, 1);
      }
      TreeNode inner = std::move(node.children.front());
      node = std::move(inner);
    }
    auto normalized = normalize(std::move(node));
    if (!normalized) {
      result.diagnostics.push_back({"tree '" + id + "' is empty after normalization; skipped", tree_line});
      return;
    }
    if (!seen_ids.insert(id).second) {
      result.diagnostics.push_back({"duplicate sentence id '" + id + "'; skipped", tree_line});
      return;
    }
    result.sentences.push_back({std::move(id), std::move(*normalized)});
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      column = 1;
      ++i;
      continue;
    }
    if (is_space(c)) {
      ++column;
      ++i;
      continue;
    }
    if (c == '#' && stack.empty()) {
      std::size_t end = text.find('\n', i);
      if (end == std::string_view::npos) end = text.size();
      if (auto id = sent_id_comment(text.substr(i, end - i))) pending_id = std::move(id);
      column += end - i;
      i = end;
      continue;
    }
    if (c == '(') {
      if (stack.size() >= kMaxDepth) throw ParseError("nesting too deep", line, column);
      if (stack.empty()) tree_line = line;
      Frame frame;
      frame.line = line;
      frame.column = column;
      stack.push_back(std::move(frame));
      ++column;
      ++i;
      continue;
    }
    if (c == ')') {
      if (stack.empty()) throw ParseError("unmatched ')'", line, column);
      Frame frame = std::move(stack.back());
      stack.pop_back();
      TreeNode node;
      node.label = std::move(frame.label);
      if (frame.has_word) {
        if (node.label.empty()) throw ParseError("preterminal without a label", frame.line, frame.column);
        node.word = std::move(frame.word);
      } else if (frame.children.empty()) {
        throw ParseError("empty constituent", frame.line, frame.column);
      } else {
        if (node.label.empty() && !stack.empty()) {
          throw ParseError("unlabeled constituent", frame.line, frame.column);
        }
        node.children = std::move(frame.children);
      }
      if (stack.empty()) {
        finish_tree(std::move(node));
      } else {
        Frame& parent = stack.back();
        if (parent.has_word) throw ParseError("constituent after a word", frame.line, frame.column);
        parent.children.push_back(std::move(node));
      }
      ++column;
      ++i;
      continue;
    }
    // atom
    std::size_t end = i;
    while (end < text.size() && !is_space(text[end]) && text[end] != '(' && text[end] != ')') ++end;
    std::string atom(text.substr(i, end - i));
    if (stack.empty()) throw ParseError("text outside brackets", line, column);
    Frame& top = stack.back();
    if (!top.has_label && top.children.empty()) {
      top.label = std::move(atom);
      top.has_label = true;
    } else if (!top.children.empty()) {
      throw ParseError("word mixed with constituents", line, column);
    } else if (top.has_word) {
      throw ParseError("preterminal with more than one word", line, column);
    } else {
      top.word = std::move(atom);
      top.has_word = true;
    }
    column += end - i;
    i = end;
  }
  if (!stack.empty()) {
    throw ParseError("unclosed '('", stack.front().line, stack.front().column);
  }
  return result;
}

ParseResult<DependencySentence> parse_conllu(std::string_view text, std::string_view source) {
  ParseResult<DependencySentence> result;
  const auto lines = split_lines(text);
  std::unordered_set<std::string> seen_ids;
  std::size_t sentence_count = 0;

  std::size_t idx = 0;
  while (idx < lines.size()) {
    while (idx < lines.size() && trim(lines[idx]).empty()) ++idx;
    if (idx >= lines.size()) break;
    const std::size_t block_start = idx;
    std::size_t block_end = idx;
    while (block_end < lines.size() && !trim(lines[block_end]).empty()) ++block_end;
    idx = block_end;
    ++sentence_count;

    DependencySentence sentence;
    std::optional<std::string> comment_id;
    std::optional<Diagnostic> problem;
    for (std::size_t k = block_start; k < block_end && !problem; ++k) {
      const std::string_view raw = lines[k];
      const std::size_t line_no = k + 1;
      if (raw.front() == '#') {
        if (auto id = sent_id_comment(raw)) comment_id = std::move(id);
        continue;
      }
      const auto fields = split_tabs(raw);
      if (fields.size() != 10) {
        problem = Diagnostic{"expected 10 tab-separated columns, found " + std::to_string(fields.size()), line_no};
        break;
      }
      if (fields[0].find_first_of("-.") != std::string_view::npos) continue;
      const auto id = parse_int(fields[0]);
      if (!id || *id != static_cast<int>(sentence.tokens.size()) + 1) {
        problem = Diagnostic{"token id '" + std::string(fields[0]) + "' out of sequence", line_no};
        break;
      }
      const auto head = parse_int(fields[6]);
      if (!head) {
        problem = Diagnostic{"non-integer head '" + std::string(fields[6]) + "'", line_no};
        break;
      }
      sentence.tokens.emplace_back(fields[1]);
      sentence.heads.push_back(*head);
      sentence.relations.emplace_back(fields[7]);
    }
    sentence.sentence_id = comment_id ? *comment_id
                                      : std::string(source) + ":" + std::to_string(sentence_count);
    const std::string where = "sentence '" + sentence.sentence_id + "': ";

    if (!problem && sentence.tokens.empty()) {
      problem = Diagnostic{"no tokens", block_start + 1};
    }
    const int n = static_cast<int>(sentence.tokens.size());
    if (!problem) {
      for (int t = 0; t < n; ++t) {
        const int h = sentence.heads[t];
        if (h < 0 || h > n) {
          problem = Diagnostic{"head " + std::to_string(h) + " of token " + std::to_string(t + 1) +
                                   " out of range",
                               block_start + 1};
          break;
        }
      }
    }
    if (!problem) {
      for (int t = 0; t < n && !problem; ++t) {
        int cur = t + 1;
        int steps = 0;
        while (cur != 0 && steps <= n) {
          cur = sentence.heads[cur - 1];
          ++steps;
        }
        if (cur != 0) {
          problem = Diagnostic{"cyclic heads reachable from token " + std::to_string(t + 1), block_start + 1};
        }
      }
    }
    if (!problem && !seen_ids.insert(sentence.sentence_id).second) {
      problem = Diagnostic{"duplicate sentence id", block_start + 1};
    }
    if (problem) {
      problem->message = where + problem->message + "; rejected";
      result.diagnostics.push_back(std::move(*problem));
      continue;
    }
    result.sentences.push_back(std::move(sentence));
  }
  return result;
}

std::vector<std::pair<std::string, std::string>> leaves(const ConstituencyTree& tree) {
  std::vector<std::pair<std::string, std::string>> out;
  collect_leaves(tree.root, out);
  return out;
}

std::vector<std::string> tokens_of(const ConstituencyTree& tree) {
  std::vector<std::string> out;
  for (auto& [token, pos] : leaves(tree)) out.push_back(std::move(token));
  return out;
}

std::string to_ptb(const ConstituencyTree& tree) {
  std::string out;
  write_ptb(tree.root, out);
  return out;
}

std::string to_conllu(const DependencySentence& sentence) {
  std::ostringstream out;
  out << "# sent_id = " << sentence.sentence_id << '\n';
  for (std::size_t t = 0; t < sentence.size(); ++t) {
    out << (t + 1) << '\t' << sentence.tokens[t] << "\t_\t_\t_\t_\t" << sentence.heads[t] << '\t'
        << sentence.relations[t] << "\t_\t_\n";
  }
  out << '\n';
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::string file_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name.resize(dot);
  return name;
}

}  // namespace synprobe
