#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synprobe/repstore.hpp"
#include "synprobe/tasks.hpp"

namespace synprobe {

/// Weights of the one-hidden-layer classifier, row-major.
struct ProbeParams {
  std::vector<double> w1;  // hidden x input
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // labels x hidden
  std::vector<double> b2;  // labels

  friend bool operator==(const ProbeParams&, const ProbeParams&) = default;
};

/// softmax(W2 relu(W1 x + b1) + b2). With `use_bias` off, b1 and b2 stay
/// zero and receive no updates.
struct ProbeModel {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 300;
  bool use_bias = true;
  LabelVocabulary vocab;
  ProbeParams params;

  std::size_t num_labels() const noexcept { return vocab.size(); }

  friend bool operator==(const ProbeModel&, const ProbeModel&) = default;
};

struct TrainConfig {
  std::size_t hidden_dim = 300;
  bool use_bias = true;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.1;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Throws UsageError for out-of-range settings.
void validate(const TrainConfig& config);

/// Zero-initialized model of the given shape.
ProbeModel make_probe(std::size_t input_dim, std::size_t hidden_dim, LabelVocabulary vocab, bool use_bias = true);

/// Glorot-uniform weights, zero biases.
void init_glorot(ProbeModel& model, std::uint64_t seed);

/// Probability vector over labels. Throws UsageError on a size mismatch.
std::vector<double> forward(const ProbeModel& model, std::span<const double> x);
std::vector<double> forward(const ProbeModel& model, std::span<const float> x);

/// A batch of feature rows (double precision) with label indices.
struct Batch {
  std::size_t rows = 0;
  std::size_t input_dim = 0;
  std::vector<double> features;
  std::vector<int> labels;
};

Batch make_batch(const AlignedDataset& data, std::span<const std::size_t> indices);
Batch make_batch(const AlignedDataset& data);

struct LossAndGradient {
  double loss = 0.0;
  ProbeParams grad;
};

/// Mean cross-entropy over the batch and its analytic gradient. Throws
/// DataError on an empty batch or an unknown/out-of-range gold label.
LossAndGradient loss_and_gradient(const ProbeModel& model, const Batch& batch);

struct EpochLog {
  std::size_t epoch = 0;   // 1-based
  double loss = 0.0;       // mean training loss over the epoch
  double holdout_acc = 0.0;
  bool improved = false;   // became the returned snapshot
};

struct TrainResult {
  ProbeModel model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_holdout_acc = 0.0;
  std::vector<std::size_t> holdout_indices;  // rows of the input used for early stopping
};

/// Adam training with early stopping on a seeded holdout split carved from
/// `data`. Returns the best-holdout snapshot. Deterministic in config.seed.
/// Throws NumericalError on a non-finite loss.
TrainResult train(const AlignedDataset& data, const LabelVocabulary& vocab, const TrainConfig& config);

/// Fraction of rows whose argmax equals the gold label; unknown gold labels
/// count as wrong. Throws DataError on an empty set.
double evaluate(const ProbeModel& model, const AlignedDataset& data);
double evaluate(const ProbeModel& model, const AlignedDataset& data, std::span<const std::size_t> rows);

/// [child; other; child * other]. Throws UsageError on a length mismatch.
std::vector<float> make_arc_features(std::span<const float> child, std::span<const float> other);

/// `epoch,loss,holdout_acc` with a header line.
std::string format_training_log(std::span<const EpochLog> log);

/// Versioned binary checkpoint ("SPROBE\n", u32 version 1, dims, bias flag,
/// vocabulary, f32 weights). Weights are rounded to f32 on save.
std::string encode_probe(const ProbeModel& model);
ProbeModel decode_probe(std::string_view bytes);
void save_probe(const std::string& path, const ProbeModel& model);
ProbeModel load_probe(const std::string& path);

}  // namespace synprobe
