#include <gtest/gtest.h>

#include <map>
#include <set>

#include "synprobe/synth.hpp"
#include "synprobe/tasks.hpp"
#include "test_util.hpp"

using namespace synprobe;

namespace {

std::size_t depth(const TreeNode& n) {
  std::size_t d = 0;
  for (const auto& c : n.children) d = std::max(d, depth(c));
  return d + 1;
}

}  // namespace

TEST(Synth, Deterministic) {
  const auto a = generate_synthetic(50, 7, "x");
  const auto b = generate_synthetic(50, 7, "x");
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tree, b[i].tree);
    EXPECT_EQ(a[i].dependencies, b[i].dependencies);
  }
  EXPECT_EQ(a[0].tree.sentence_id, "x:1");
}

TEST(Synth, TreesAreDeepAndValid) {
  const auto corpus = generate_synthetic(500, 8, "x");
  std::size_t deepest = 0;
  std::string ptb, conllu;
  for (const auto& s : corpus) {
    deepest = std::max(deepest, depth(s.tree.root));
    EXPECT_LE(leaves(s.tree).size(), SynthConfig{}.max_tokens);
    EXPECT_EQ(s.dependencies.tokens, tokens_of(s.tree));
    ptb += "# sent_id = " + s.tree.sentence_id + "\n" + to_ptb(s.tree) + "\n";
    conllu += to_conllu(s.dependencies);
  }
  // S > VP > SBAR > S ... gives well over three levels of nesting
  EXPECT_GE(deepest, 6u);
  const auto trees = parse_ptb(ptb);
  EXPECT_TRUE(trees.diagnostics.empty());
  ASSERT_EQ(trees.sentences.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) EXPECT_EQ(trees.sentences[i], corpus[i].tree);
  const auto deps = parse_conllu(conllu);
  EXPECT_TRUE(deps.diagnostics.empty());
  EXPECT_EQ(deps.sentences.size(), corpus.size());
}

TEST(Synth, ParentLabelsAreAmbiguousPerWord) {
  // Some word must occur under more than one parent label, otherwise the
  // parent task would be solvable from the word alone.
  const auto corpus = generate_synthetic(300, 9, "x");
  std::vector<ConstituencyTree> trees;
  for (const auto& s : corpus) trees.push_back(s.tree);
  const auto task = extract_word_labels(trees, 1);
  std::map<std::string, std::set<std::string>> parents;
  for (const auto& ex : task.examples) {
    parents[task.sentences.at(ex.sentence_id)[static_cast<std::size_t>(ex.token_index)]].insert(ex.label);
  }
  std::size_t ambiguous = 0;
  for (const auto& [w, labels] : parents) ambiguous += labels.size() > 1;
  EXPECT_GE(ambiguous, 5u);
}

TEST(HeadRules, MondaySentence) {
  const auto deps = head_dependencies(synprobe::testing::monday_tree());
  // Other stock indexes also fell on Monday
  EXPECT_EQ(deps.heads, (std::vector<int>{3, 3, 5, 5, 0, 5, 6}));
  EXPECT_EQ(deps.relations[4], "root");
  EXPECT_EQ(deps.relations[2], "np");
}
