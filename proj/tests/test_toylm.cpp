#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "synprobe/error.hpp"
#include "synprobe/toylm.hpp"
#include "test_util.hpp"

using namespace synprobe;

namespace {

LstmLmConfig small_config(std::size_t layers = 2, std::size_t dim = 8) {
  LstmLmConfig c;
  c.num_layers = layers;
  c.dim = dim;
  c.epochs = 2;
  c.seed = 5;
  c.learning_rate = 0.01;
  return c;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b, std::size_t from, std::size_t to) {
  return std::memcmp(a.data() + from, b.data() + from, (to - from) * sizeof(double)) == 0;
}

}  // namespace

TEST(TextCorpus, Parse) {
  const auto c = parse_text_corpus("a b  c\n\n d\te \n", "txt");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].sentence_id, "txt:1");
  EXPECT_EQ(c[0].tokens, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(c[1].sentence_id, "txt:3");
  EXPECT_EQ(c[1].tokens, (std::vector<std::string>{"d", "e"}));
}

TEST(LmVocab, RareWordsBecomeUnknown) {
  const auto c = parse_text_corpus("b a a\nc b\n");
  const auto v = build_lm_vocabulary(c, 2);
  EXPECT_EQ(v.words(), (std::vector<std::string>{"<s>", "<UNK>", "a", "b"}));
  EXPECT_EQ(v.id("c"), LmVocabulary::kUnkId);
  EXPECT_EQ(v.id("a"), 2);
}

TEST(LmConfig, Validation) {
  LstmLmConfig c;
  c.num_layers = 0;
  EXPECT_THROW(validate(c), UsageError);
  c = LstmLmConfig{};
  c.dim = 0;
  EXPECT_THROW(validate(c), UsageError);
  c = LstmLmConfig{};
  c.learning_rate = 0;
  EXPECT_THROW(validate(c), UsageError);
}

TEST(LmGradient, FiniteDifferenceOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LE(oracle::lstm_fd_error(oracle::random_lstm_instance(seed)), 1e-4) << "seed " << seed;
  }
}

TEST(LmGradient, DeeperModelAlsoMatches) {
  LstmLmConfig c = small_config(3, 4);
  auto model = init_lm(c, LmVocabulary({"x", "y", "z"}));
  Rng rng(3);
  for (auto& l : model.params.layers) {
    for (auto& w : l.w) w = rng.uniform(-0.8, 0.8);
  }
  const std::vector<int> ids = {2, 4, 3, 2};
  LstmLmParams grad = zeros_like(model.params);
  sentence_nll(model, ids, &grad);
  auto loss = [&] { return sentence_nll(model, ids); };
  EXPECT_LE(oracle::max_fd_error(model.params.embedding, grad.embedding, loss), 1e-4);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_LE(oracle::max_fd_error(model.params.layers[l].w, grad.layers[l].w, loss), 1e-4);
    EXPECT_LE(oracle::max_fd_error(model.params.layers[l].b, grad.layers[l].b, loss), 1e-4);
  }
}

TEST(LmGradient, ScaleIsLinear) {
  auto inst = oracle::random_lstm_instance(1);
  LstmLmParams g1 = zeros_like(inst.model.params), g2 = zeros_like(inst.model.params);
  sentence_nll(inst.model, inst.ids, &g1, 1.0);
  sentence_nll(inst.model, inst.ids, &g2, 0.5);
  for (std::size_t i = 0; i < g1.embedding.size(); ++i) EXPECT_NEAR(g2.embedding[i], 0.5 * g1.embedding[i], 1e-15);
  for (std::size_t i = 0; i < g1.layers[0].w.size(); ++i) EXPECT_NEAR(g2.layers[0].w[i], 0.5 * g1.layers[0].w[i], 1e-15);
}

TEST(LmTraining, AlternatingCorpusBecomesPredictable) {
  const auto corpus = oracle::alternating_corpus(200);
  LstmLmConfig c = small_config(1, 8);
  c.epochs = 8;
  const auto state = train_lm(corpus, c);
  EXPECT_LT(perplexity(state.model, corpus), 1.2);
  // non-increasing after epoch 2, allowing one violation
  int violations = 0;
  for (std::size_t e = 2; e < state.log.size(); ++e) {
    violations += state.log[e].perplexity > state.log[e - 1].perplexity;
  }
  EXPECT_LE(violations, 1);
}

TEST(LmTraining, SameSeedSameModel) {
  const auto corpus = oracle::alternating_corpus(40);
  const auto a = train_lm(corpus, small_config());
  const auto b = train_lm(corpus, small_config());
  EXPECT_EQ(a.model.params, b.model.params);
  EXPECT_EQ(a.log.back().perplexity, b.log.back().perplexity);
}

TEST(LmTraining, ResumeMatchesUninterruptedRun) {
  const auto corpus = oracle::alternating_corpus(40);
  LstmLmConfig c = small_config();
  c.epochs = 3;
  const auto full = train_lm(corpus, c);
  c.epochs = 1;
  auto part = train_lm(corpus, c);
  part = decode_lm_checkpoint(encode_lm_checkpoint(part));
  continue_lm_training(part, corpus, 2);
  EXPECT_EQ(part.model.params, full.model.params);
  EXPECT_EQ(part.epochs_done, 3u);
  ASSERT_EQ(part.log.size(), full.log.size());
  for (std::size_t i = 0; i < part.log.size(); ++i) EXPECT_EQ(part.log[i].perplexity, full.log[i].perplexity);
}

TEST(LmTraining, EmptyCorpusIsError) {
  EXPECT_THROW(train_lm(std::vector<TokenizedSentence>{}, small_config()), DataError);
}

TEST(LmTraining, DivergenceIsNumericalError) {
  const auto corpus = oracle::alternating_corpus(20);
  LstmLmConfig c = small_config();
  c.epochs = 1;
  auto state = start_lm_training(corpus, c);
  state.model.params.out_bias[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(continue_lm_training(state, corpus, 1), NumericalError);
}

TEST(LmCausality, FutureTokensDoNotMoveForwardStates) {
  LstmLmConfig c = small_config(3, 6);
  const auto model = init_lm(c, LmVocabulary({"a", "b", "c", "d"}));
  const std::vector<int> ids = {2, 3, 4, 5, 2};
  auto changed = ids;
  changed[3] = 2;
  const auto a = layer_states(model, ids);
  const auto b = layer_states(model, changed);
  for (std::size_t l = 1; l < a.size(); ++l) {
    EXPECT_TRUE(same_bits(a[l], b[l], 0, 3 * 6)) << "layer " << l;
    EXPECT_FALSE(same_bits(a[l], b[l], 3 * 6, 5 * 6)) << "layer " << l;
  }
}

TEST(LmCausality, BackwardStatesIgnoreEarlierTokens) {
  LstmLmConfig c = small_config(2, 6);
  c.direction = Direction::kBackward;
  const auto model = init_lm(c, LmVocabulary({"a", "b", "c"}));
  const std::vector<TokenizedSentence> one = {{"s", {"a", "b", "c", "a"}}};
  const std::vector<TokenizedSentence> two = {{"s", {"c", "b", "c", "a"}}};
  const auto ra = single_direction_representations(model, one);
  const auto rb = single_direction_representations(model, two);
  for (std::size_t l = 1; l < ra.num_layers(); ++l) {
    const auto& x = ra.sentences[0].layers[l];
    const auto& y = rb.sentences[0].layers[l];
    EXPECT_EQ(std::memcmp(x.data() + 6, y.data() + 6, 3 * 6 * sizeof(float)), 0);
    EXPECT_NE(std::memcmp(x.data(), y.data(), 6 * sizeof(float)), 0);
  }
}

TEST(LmDump, ShapeOfDefaultModel) {
  const std::vector<TokenizedSentence> corpus = {{"s1", {"the", "cat", "sat"}}, {"s2", {"a", "cat", "ran", "off"}}};
  LstmLmConfig c;  // 4 layers, d = 64
  const auto vocab = LmVocabulary({"a", "cat", "the"});
  const auto fwd = init_lm(c, vocab);
  c.direction = Direction::kBackward;
  const auto bwd = init_lm(c, vocab);
  const auto reps = dump_representations(fwd, bwd, corpus);
  EXPECT_EQ(reps.layer_dims, (std::vector<std::uint32_t>{128, 128, 128, 128, 128}));
  EXPECT_EQ(reps.num_layers(), c.num_layers + 1);
  validate(reps);
  decode_wrep(encode_wrep(reps));
  // "cat" is token 1 in both sentences; "sat", "ran", "off" keep their strings
  EXPECT_EQ(reps.sentences[0].tokens[2], "sat");
  const auto l0a = reps.vector(0, 0, 1), l0b = reps.vector(1, 0, 1);
  EXPECT_TRUE(std::equal(l0a.begin(), l0a.end(), l0b.begin()));
  for (std::size_t l = 1; l < reps.num_layers(); ++l) {
    const auto a = reps.vector(0, l, 1), b = reps.vector(1, l, 1);
    EXPECT_FALSE(std::equal(a.begin(), a.end(), b.begin())) << l;
  }
}

TEST(LmDump, ModelsMustAgree) {
  LstmLmConfig c = small_config();
  const auto fwd = init_lm(c, LmVocabulary({"a"}));
  c.direction = Direction::kBackward;
  const std::vector<TokenizedSentence> corpus = {{"s", {"a"}}};
  EXPECT_THROW(dump_representations(fwd, init_lm(c, LmVocabulary({"b"})), corpus), UsageError);
  c.num_layers = 3;
  EXPECT_THROW(dump_representations(fwd, init_lm(c, LmVocabulary({"a"})), corpus), UsageError);
}

TEST(LmCheckpoint, RoundTripAndCorruption) {
  const auto state = train_lm(oracle::alternating_corpus(10), small_config());
  const std::string bytes = encode_lm_checkpoint(state);
  const auto back = decode_lm_checkpoint(bytes);
  EXPECT_EQ(back.model.params, state.model.params);
  EXPECT_EQ(back.model.vocab, state.model.vocab);
  EXPECT_EQ(back.adam_m, state.adam_m);
  EXPECT_EQ(back.adam_step, state.adam_step);
  EXPECT_EQ(encode_lm_checkpoint(back), bytes);
  EXPECT_THROW(decode_lm_checkpoint(bytes.substr(0, bytes.size() / 2)), FormatError);
  EXPECT_THROW(decode_lm_checkpoint("SPLSTX\n" + bytes.substr(7)), FormatError);
  const std::string path = synprobe::testing::temp_dir("lm") + "/lm.ckpt";
  save_lm_checkpoint(path, state);
  EXPECT_EQ(load_lm_checkpoint(path).model.params, state.model.params);
}

TEST(LmLog, Csv) {
  const std::vector<LmEpochLog> log = {{1, 2.5}, {2, 1.25}};
  EXPECT_EQ(format_perplexity_log(log), "epoch,perplexity\n1,2.500000\n2,1.250000\n");
}
