#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "oracles.hpp"
#include "synprobe/error.hpp"
#include "synprobe/probe.hpp"
#include "synprobe/repstore.hpp"
#include "synprobe/tasks.hpp"
#include "test_util.hpp"

using namespace synprobe;
using synprobe::testing::monday_tree;
using synprobe::testing::random_reps;

namespace {

std::size_t error_offset(std::string_view bytes) {
  try {
    decode_wrep(bytes);
  } catch (const FormatError& e) {
    return e.offset();
  }
  return std::string::npos;
}

LayeredRepresentations one_sentence() {
  LayeredRepresentations r;
  r.layer_dims = {2, 3};
  r.sentences.push_back({"a", {"x", "y"}, {{1, 2, 3, 4}, {5, 6, 7, 8, 9, 10}}});
  return r;
}

WordLabelTask monday_task(int level) {
  const std::vector<ConstituencyTree> corpus = {monday_tree()};
  return extract_word_labels(corpus, level);
}

}  // namespace

TEST(Wrep, EmptyCorpusLayout) {
  LayeredRepresentations r;
  r.layer_dims = {4};
  const std::string bytes = encode_wrep(r);
  EXPECT_EQ(bytes.size(), 6u + 4u + 4u + 4u);
  EXPECT_EQ(bytes.substr(0, 6), "WREP1\n");
  EXPECT_EQ(decode_wrep(bytes), r);
}

TEST(Wrep, PayloadArithmetic) {
  const auto r = one_sentence();
  const std::string bytes = encode_wrep(r);
  const std::size_t header = 6 + 4 + 2 * 4 + 4;
  const std::size_t strings = 2 + 1 + 4 + (2 + 1) * 2;
  EXPECT_EQ(bytes.size(), header + strings + 10 * 4);
  EXPECT_EQ(wrep_size(r), bytes.size());
}

TEST(Wrep, RoundTripProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = oracle::random_wrep_corpus(rng);
    const std::string bytes = encode_wrep(r);
    EXPECT_EQ(bytes.size(), wrep_size(r));
    const auto back = decode_wrep(bytes);
    ASSERT_TRUE(oracle::bitwise_equal(r, back)) << "trial " << trial;
    EXPECT_EQ(encode_wrep(back), bytes);
  }
}

TEST(Wrep, FileRoundTrip) {
  const std::string path = synprobe::testing::temp_dir("wrep") + "/r.wrep";
  const auto r = one_sentence();
  write_wrep(path, r);
  EXPECT_EQ(read_wrep(path), r);
}

TEST(Wrep, BadMagic) {
  std::string bytes = encode_wrep(one_sentence());
  bytes[3] = 'X';
  EXPECT_EQ(error_offset(bytes), 0u);
}

TEST(Wrep, EveryTruncationFails) {
  const std::string bytes = encode_wrep(one_sentence());
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    EXPECT_THROW(decode_wrep(std::string_view(bytes).substr(0, len)), FormatError) << len;
  }
}

TEST(Wrep, NaNPayloadNamesOffset) {
  std::string bytes = encode_wrep(one_sentence());
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const std::size_t at = bytes.size() - 4 * 3;  // third float from the end
  std::memcpy(bytes.data() + at, &nan, 4);
  EXPECT_EQ(error_offset(bytes), at);
}

TEST(Wrep, TrailingBytes) {
  std::string bytes = encode_wrep(one_sentence()) + "zz";
  EXPECT_THROW(decode_wrep(bytes), FormatError);
}

TEST(Wrep, ZeroLayersAndDims) {
  std::string bytes = encode_wrep(one_sentence());
  std::string zero_layers = bytes;
  std::memset(zero_layers.data() + 6, 0, 4);
  EXPECT_EQ(error_offset(zero_layers), 6u);
  std::string zero_dim = bytes;
  std::memset(zero_dim.data() + 10, 0, 4);
  EXPECT_EQ(error_offset(zero_dim), 10u);
}

TEST(Wrep, TokenCountMismatch) {
  // A token count larger than the data that follows is a truncation.
  std::string bytes = encode_wrep(one_sentence());
  const std::size_t count_at = 6 + 4 + 8 + 4 + 2 + 1;
  bytes[count_at] = 9;
  EXPECT_THROW(decode_wrep(bytes), FormatError);
  // In memory, a layer buffer that does not match T x d is rejected.
  auto r = one_sentence();
  r.sentences[0].layers[1].pop_back();
  EXPECT_THROW(validate(r), DataError);
  EXPECT_THROW(encode_wrep(r), DataError);
}

TEST(Wrep, NonFiniteRejectedOnWrite) {
  auto r = one_sentence();
  r.sentences[0].layers[0][1] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(encode_wrep(r), DataError);
}

TEST(Concat, DimsAndOrder) {
  LayeredRepresentations f, b;
  f.layer_dims = {2};
  b.layer_dims = {2};
  f.sentences.push_back({"s", {"w"}, {{1, 2}}});
  b.sentences.push_back({"s", {"w"}, {{3, 4}}});
  const auto c = concat_directions(f, b);
  EXPECT_EQ(c.layer_dims, std::vector<std::uint32_t>{4});
  EXPECT_EQ(c.sentences[0].layers[0], (std::vector<float>{1, 2, 3, 4}));

  auto f4 = random_reps({{"s", {"a", "b"}}}, {4}, 1);
  auto b4 = random_reps({{"s", {"a", "b"}}}, {4}, 2);
  EXPECT_EQ(concat_directions(f4, b4).layer_dims, std::vector<std::uint32_t>{8});
}

TEST(Concat, MismatchIsError) {
  auto f = random_reps({{"s", {"a", "b"}}}, {2}, 1);
  auto b = random_reps({{"s", {"a"}}}, {2}, 2);
  EXPECT_THROW(concat_directions(f, b), AlignmentError);
  auto c = random_reps({{"s", {"a", "b"}}}, {2, 2}, 3);
  EXPECT_THROW(concat_directions(f, c), AlignmentError);
}

TEST(Merge, DisjointFiles) {
  auto a = random_reps({{"s1", {"a"}}}, {2}, 1);
  auto b = random_reps({{"s2", {"b"}}}, {2}, 2);
  auto m = merge_representations({a, b});
  EXPECT_EQ(m.sentences.size(), 2u);
  EXPECT_THROW(merge_representations({a, a}), DataError);
  auto c = random_reps({{"s3", {"b"}}}, {3}, 2);
  EXPECT_THROW(merge_representations({a, c}), DataError);
}

TEST(Align, MondayRows) {
  const auto task = monday_task(0);
  auto reps = random_reps({{"monday", task.sentences.at("monday")}}, {3, 5}, 4);
  const auto vocab = build_vocabulary(task);
  const auto data = align(reps, task, vocab, 1);
  EXPECT_EQ(data.rows(), 7u);
  EXPECT_EQ(data.input_dim, 5u);
  for (std::size_t i = 0; i < 7; ++i) {
    const auto v = reps.vector(0, 1, i);
    EXPECT_TRUE(std::equal(v.begin(), v.end(), data.row(i).begin()));
    EXPECT_EQ(data.labels[i], vocab.index_of(task.examples[i].label));
  }
}

TEST(Align, CaseSensitiveTokens) {
  const auto task = monday_task(1);
  auto tokens = task.sentences.at("monday");
  tokens.back() = "monday";
  auto reps = random_reps({{"monday", tokens}}, {3}, 4);
  EXPECT_THROW(align(reps, task, build_vocabulary(task), 0), AlignmentError);
}

TEST(Align, MissingSentence) {
  const auto task = monday_task(1);
  auto reps = random_reps({{"other", task.sentences.at("monday")}}, {3}, 4);
  EXPECT_THROW(align(reps, task, build_vocabulary(task), 0), AlignmentError);
}

TEST(Align, EmptyTask) {
  auto reps = random_reps({{"s", {"a"}}}, {3}, 4);
  const auto data = align(reps, WordLabelTask{}, LabelVocabulary({"X"}), 0);
  EXPECT_EQ(data.rows(), 0u);
}

TEST(Align, UnseenLabelsMapToUnknown) {
  const auto task = monday_task(0);
  auto reps = random_reps({{"monday", task.sentences.at("monday")}}, {3}, 4);
  const auto data = align(reps, task, LabelVocabulary({"NN"}), 0);
  EXPECT_EQ(data.labels[1], 0);
  EXPECT_EQ(data.labels[0], LabelVocabulary::kUnknown);
}

TEST(Align, ArcRowsUseTripleFeatures) {
  DependencySentence s{"d", {"a", "b", "c"}, {2, 0, 2}, {"x", "root", "y"}};
  const std::vector<DependencySentence> corpus = {s};
  const auto task = generate_arc_pairs(corpus, 1);
  auto reps = random_reps({{"d", s.tokens}}, {2}, 8);
  const auto data = align(reps, task, 0);
  ASSERT_EQ(data.rows(), 4u);
  EXPECT_EQ(data.input_dim, 6u);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto& ex = task.examples[i];
    const auto expected = make_arc_features(reps.vector(0, 0, static_cast<std::size_t>(ex.child - 1)),
                                            reps.vector(0, 0, static_cast<std::size_t>(ex.other - 1)));
    EXPECT_TRUE(std::equal(expected.begin(), expected.end(), data.row(i).begin()));
    EXPECT_EQ(data.labels[i], ex.is_arc ? 1 : 0);
  }
}
