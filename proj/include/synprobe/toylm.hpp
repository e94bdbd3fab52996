#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synprobe/repstore.hpp"

namespace synprobe {

/// A pre-tokenized sentence with its id, as read from a corpus or treebank.
struct TokenizedSentence {
  std::string sentence_id;
  std::vector<std::string> tokens;
};

/// One sentence per line, whitespace-separated tokens; blank lines are
/// skipped. Ids are `<source>:<line number>`.
std::vector<TokenizedSentence> parse_text_corpus(std::string_view text, std::string_view source = "corpus");

/// Word list of a language model. Index 0 is the sentence-start symbol,
/// index 1 the unknown-word symbol; the rest are sorted.
class LmVocabulary {
 public:
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kUnk = "<UNK>";
  static constexpr int kBosId = 0;
  static constexpr int kUnkId = 1;

  LmVocabulary() : LmVocabulary(std::vector<std::string>{}) {}
  /// `words` must not contain the reserved symbols.
  explicit LmVocabulary(std::vector<std::string> words);

  int id(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  friend bool operator==(const LmVocabulary& a, const LmVocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int, std::less<>> index_;
};

/// Words seen at least `min_count` times; the rest map to <UNK>.
LmVocabulary build_lm_vocabulary(std::span<const TokenizedSentence> corpus, std::size_t min_count = 2);

enum class Direction { kForward, kBackward };

std::string_view direction_name(Direction d);

/// Embedding and hidden sizes are one value because the output projection is
/// the transposed embedding matrix.
struct LstmLmConfig {
  std::size_t num_layers = 4;
  std::size_t dim = 64;
  Direction direction = Direction::kForward;
  std::uint64_t seed = 1;
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;       // sentences per update
  std::size_t max_sentence_length = 60;
  double clip_norm = 5.0;
  std::size_t min_count = 2;
};

void validate(const LstmLmConfig& config);

struct LstmLayerParams {
  std::vector<double> w;  // 4d x 2d; rows are gates (input, forget, cell, output), columns [x ; h_prev]
  std::vector<double> b;  // 4d

  friend bool operator==(const LstmLayerParams&, const LstmLayerParams&) = default;
};

/// `embedding` (V x d) is both the input lookup table and the output
/// projection; there is no separate output matrix.
struct LstmLmParams {
  std::vector<double> embedding;
  std::vector<double> out_bias;  // V
  std::vector<LstmLayerParams> layers;

  friend bool operator==(const LstmLmParams&, const LstmLmParams&) = default;
};

struct LstmLmModel {
  LstmLmConfig config;
  LmVocabulary vocab;
  LstmLmParams params;

  std::size_t dim() const noexcept { return config.dim; }
  std::size_t num_layers() const noexcept { return config.num_layers; }
};

/// Seeded uniform initialization; forget-gate biases start at 1.
LstmLmModel init_lm(const LstmLmConfig& config, LmVocabulary vocab);

/// Word ids in the model's reading order (reversed for backward models),
/// without the start symbol.
std::vector<int> encode_for_model(const LstmLmModel& model, std::span<const std::string> tokens);

/// Summed negative log-likelihood of predicting ids[0..n) from
/// [<s>, ids[0..n-1)), plus its gradient accumulated into `grad` when given.
/// `grad` must have the model's shape.
double sentence_nll(const LstmLmModel& model, std::span<const int> ids, LstmLmParams* grad = nullptr,
                    double grad_scale = 1.0);

LstmLmParams zeros_like(const LstmLmParams& params);

/// Hidden states for ids read in order: result[l][t * d + k] for layer
/// l in 1..L (index 0 holds the embeddings of ids[t]).
std::vector<std::vector<double>> layer_states(const LstmLmModel& model, std::span<const int> ids);

struct LmEpochLog {
  std::size_t epoch = 0;
  double perplexity = 0.0;
};

/// Everything needed to resume training bit-exactly.
struct LmTrainingState {
  LstmLmModel model;
  LstmLmParams adam_m;
  LstmLmParams adam_v;
  std::uint64_t adam_step = 0;
  std::size_t epochs_done = 0;
  std::vector<LmEpochLog> log;
};

/// Builds the vocabulary from `corpus` and initializes the model.
LmTrainingState start_lm_training(std::span<const TokenizedSentence> corpus, const LstmLmConfig& config);

/// Runs `epochs` more epochs of Adam with gradient-norm clipping. Epoch
/// shuffles derive from (seed, epoch number), so resuming from a checkpoint
/// matches an uninterrupted run. Throws NumericalError on divergence.
void continue_lm_training(LmTrainingState& state, std::span<const TokenizedSentence> corpus, std::size_t epochs);

/// start_lm_training followed by config.epochs epochs.
LmTrainingState train_lm(std::span<const TokenizedSentence> corpus, const LstmLmConfig& config);

/// Perplexity of the model on `corpus` (no training).
double perplexity(const LstmLmModel& model, std::span<const TokenizedSentence> corpus);

/// Layer 0 holds the tied embeddings, layers 1..L the LSTM hidden states at
/// each token, in original token order. Token strings are kept even when they
/// map to <UNK>.
LayeredRepresentations single_direction_representations(const LstmLmModel& model,
                                                        std::span<const TokenizedSentence> corpus);

/// Forward and backward representations concatenated per layer. Throws
/// UsageError unless the models share vocabulary and layer count.
LayeredRepresentations dump_representations(const LstmLmModel& forward, const LstmLmModel& backward,
                                            std::span<const TokenizedSentence> corpus);

std::string format_perplexity_log(std::span<const LmEpochLog> log);

std::string encode_lm_checkpoint(const LmTrainingState& state);
LmTrainingState decode_lm_checkpoint(std::string_view bytes);
void save_lm_checkpoint(const std::string& path, const LmTrainingState& state);
LmTrainingState load_lm_checkpoint(const std::string& path);

}  // namespace synprobe
