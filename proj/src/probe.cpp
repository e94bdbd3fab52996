#include "synprobe/probe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "synprobe/error.hpp"
#include "synprobe/kernels.hpp"
#include "synprobe/random.hpp"

namespace synprobe {
namespace {

constexpr std::string_view kProbeMagic = "SPROBE\n";
constexpr std::uint32_t kProbeVersion = 1;
constexpr std::size_t kEvalChunk = 4096;

std::array<std::vector<double>*, 4> blocks(ProbeParams& p) { return {&p.w1, &p.b1, &p.w2, &p.b2}; }
std::array<const std::vector<double>*, 4> blocks(const ProbeParams& p) { return {&p.w1, &p.b1, &p.w2, &p.b2}; }

ProbeParams zeros_like(const ProbeParams& p) {
  return {std::vector<double>(p.w1.size()), std::vector<double>(p.b1.size()), std::vector<double>(p.w2.size()),
          std::vector<double>(p.b2.size())};
}

struct Adam {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Adam(const ProbeParams& shape) : m(zeros_like(shape)), v(zeros_like(shape)) {}

  void step(ProbeParams& params, const ProbeParams& grad, double lr, bool update_bias) {
    ++t;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    auto pb = blocks(params);
    auto gb = blocks(grad);
    auto mb = blocks(m);
    auto vb = blocks(v);
    for (std::size_t k = 0; k < 4; ++k) {
      if (!update_bias && (k == 1 || k == 3)) continue;
      auto& p = *pb[k];
      const auto& g = *gb[k];
      auto& mk = *mb[k];
      auto& vk = *vb[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        mk[i] = kBeta1 * mk[i] + (1.0 - kBeta1) * g[i];
        vk[i] = kBeta2 * vk[i] + (1.0 - kBeta2) * g[i] * g[i];
        p[i] -= lr * (mk[i] / c1) / (std::sqrt(vk[i] / c2) + kEps);
      }
    }
  }

  ProbeParams m;
  ProbeParams v;
  std::uint64_t t = 0;
};

// Logits for the batch; also returns the post-ReLU hidden activations.
std::vector<double> logits(const ProbeModel& model, const Batch& batch, std::vector<double>& hidden) {
  const std::size_t n = batch.rows;
  const std::size_t h = model.hidden_dim;
  const std::size_t k = model.num_labels();
  const auto& p = model.params;
  std::span<const double> b1 = model.use_bias ? std::span<const double>(p.b1) : std::span<const double>();
  std::span<const double> b2 = model.use_bias ? std::span<const double>(p.b2) : std::span<const double>();
  hidden.assign(n * h, 0.0);
  kernels::parallel::affine(batch.features, p.w1, b1, hidden, n, model.input_dim, h);
  kernels::relu(hidden);
  std::vector<double> z(n * k);
  kernels::parallel::affine(hidden, p.w2, b2, z, n, h, k);
  return z;
}

void check_input(const ProbeModel& model, std::size_t dim) {
  if (dim != model.input_dim) {
    throw UsageError("probe expects input dimension " + std::to_string(model.input_dim) + ", got " +
                     std::to_string(dim));
  }
}

bool all_finite(const ProbeParams& p) {
  for (const auto* b : blocks(p)) {
    for (double x : *b) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.hidden_dim == 0) throw UsageError("hidden_dim must be positive");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) throw UsageError("learning_rate must be positive");
  if (c.batch_size == 0) throw UsageError("batch_size must be positive");
  if (c.max_epochs == 0) throw UsageError("max_epochs must be positive");
  if (c.patience == 0) throw UsageError("patience must be positive");
  if (!(c.holdout_fraction > 0.0 && c.holdout_fraction <= 0.5)) {
    throw UsageError("holdout_fraction must be in (0, 0.5]");
  }
}

ProbeModel make_probe(std::size_t input_dim, std::size_t hidden_dim, LabelVocabulary vocab, bool use_bias) {
  if (input_dim == 0 || hidden_dim == 0) throw UsageError("probe dimensions must be positive");
  if (vocab.empty()) throw UsageError("probe needs at least one label");
  ProbeModel model;
  model.input_dim = input_dim;
  model.hidden_dim = hidden_dim;
  model.use_bias = use_bias;
  const std::size_t k = vocab.size();
  model.vocab = std::move(vocab);
  model.params = {std::vector<double>(hidden_dim * input_dim), std::vector<double>(hidden_dim),
                  std::vector<double>(k * hidden_dim), std::vector<double>(k)};
  return model;
}

void init_glorot(ProbeModel& model, std::uint64_t seed) {
  Rng rng(seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(model.input_dim + model.hidden_dim));
  const double a2 = std::sqrt(6.0 / static_cast<double>(model.hidden_dim + model.num_labels()));
  for (double& w : model.params.w1) w = rng.uniform(-a1, a1);
  for (double& w : model.params.w2) w = rng.uniform(-a2, a2);
  std::fill(model.params.b1.begin(), model.params.b1.end(), 0.0);
  std::fill(model.params.b2.begin(), model.params.b2.end(), 0.0);
}

std::vector<double> forward(const ProbeModel& model, std::span<const double> x) {
  check_input(model, x.size());
  Batch batch{1, x.size(), std::vector<double>(x.begin(), x.end()), {0}};
  std::vector<double> hidden;
  auto z = logits(model, batch, hidden);
  kernels::serial::softmax_rows(z, 1, model.num_labels());
  return z;
}

std::vector<double> forward(const ProbeModel& model, std::span<const float> x) {
  std::vector<double> xd(x.begin(), x.end());
  return forward(model, std::span<const double>(xd));
}

Batch make_batch(const AlignedDataset& data, std::span<const std::size_t> indices) {
  Batch batch;
  batch.rows = indices.size();
  batch.input_dim = data.input_dim;
  batch.features.resize(indices.size() * data.input_dim);
  batch.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto row = data.row(indices[r]);
    std::copy(row.begin(), row.end(), batch.features.begin() + static_cast<std::ptrdiff_t>(r * data.input_dim));
    batch.labels[r] = data.labels[indices[r]];
  }
  return batch;
}

Batch make_batch(const AlignedDataset& data) {
  std::vector<std::size_t> all(data.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(data, all);
}

LossAndGradient loss_and_gradient(const ProbeModel& model, const Batch& batch) {
  if (batch.rows == 0) throw DataError("loss_and_gradient on an empty batch");
  check_input(model, batch.input_dim);
  const std::size_t n = batch.rows;
  const std::size_t h = model.hidden_dim;
  const std::size_t k = model.num_labels();
  for (int label : batch.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw DataError(label == LabelVocabulary::kUnknown
                          ? "training data contains a label outside the vocabulary (" +
                                std::string(LabelVocabulary::kUnknownLabel) + ")"
                          : "label index " + std::to_string(label) + " out of range");
    }
  }

  std::vector<double> hidden;
  std::vector<double> z = logits(model, batch, hidden);

  LossAndGradient out;
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* zr = z.data() + r * k;
    const double mx = *std::max_element(zr, zr + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(zr[j] - mx);
    loss += mx + std::log(sum) - zr[static_cast<std::size_t>(batch.labels[r])];
  }
  out.loss = loss / static_cast<double>(n);

  // dZ = (softmax(Z) - onehot) / n
  kernels::parallel::softmax_rows(z, n, k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    z[r * k + static_cast<std::size_t>(batch.labels[r])] -= 1.0;
    for (std::size_t j = 0; j < k; ++j) z[r * k + j] *= inv_n;
  }

  out.grad = zeros_like(model.params);
  auto& g = out.grad;
  std::span<double> db2 = model.use_bias ? std::span<double>(g.b2) : std::span<double>();
  std::span<double> db1 = model.use_bias ? std::span<double>(g.b1) : std::span<double>();
  kernels::parallel::affine_weight_grad(z, hidden, g.w2, db2, n, h, k);
  std::vector<double> dh(n * h);
  kernels::parallel::affine_input_grad(z, model.params.w2, dh, n, h, k);
  kernels::relu_backward(hidden, dh);
  kernels::parallel::affine_weight_grad(dh, batch.features, g.w1, db1, n, model.input_dim, h);
  return out;
}

TrainResult train(const AlignedDataset& data, const LabelVocabulary& vocab, const TrainConfig& config) {
  validate(config);
  const std::size_t n = data.rows();
  if (n < 2) throw DataError("training needs at least 2 examples, got " + std::to_string(n));
  if (vocab.empty()) throw DataError("empty label vocabulary");
  for (std::size_t i = 0; i < n; ++i) {
    const int label = data.labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= vocab.size()) {
      throw DataError("training example " + std::to_string(i) + " has a label outside the vocabulary");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(config.seed, "split"));
  split_rng.shuffle(std::span<std::size_t>(order));
  std::size_t holdout_n = static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(n)));
  holdout_n = std::clamp<std::size_t>(holdout_n, 1, n - 1);
  std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_n));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(holdout_n), order.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(train_rows.begin(), train_rows.end());

  ProbeModel model = make_probe(data.input_dim, config.hidden_dim, vocab, config.use_bias);
  init_glorot(model, derive_seed(config.seed, "init"));
  Adam adam(model.params);
  Rng order_rng(derive_seed(config.seed, "order"));

  TrainResult result;
  result.model = model;
  result.holdout_indices = holdout;
  double best_acc = -1.0;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(train_rows));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, train_rows.size());
      const Batch batch = make_batch(data, std::span<const std::size_t>(train_rows).subspan(start, end - start));
      const LossAndGradient lg = loss_and_gradient(model, batch);
      if (!std::isfinite(lg.loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                             std::to_string(start) + " (learning rate " + std::to_string(config.learning_rate) +
                             ")");
      }
      adam.step(model.params, lg.grad, config.learning_rate, config.use_bias);
      loss_sum += lg.loss * static_cast<double>(batch.rows);
    }
    if (!all_finite(model.params)) {
      throw NumericalError("non-finite probe weights after epoch " + std::to_string(epoch));
    }
    const double acc = evaluate(model, data, holdout);
    EpochLog entry{epoch, loss_sum / static_cast<double>(train_rows.size()), acc, acc > best_acc};
    result.log.push_back(entry);
    if (entry.improved) {
      best_acc = acc;
      result.model = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  result.best_holdout_acc = best_acc;
  return result;
}

double evaluate(const ProbeModel& model, const AlignedDataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("cannot evaluate on an empty set");
  check_input(model, data.input_dim);
  std::size_t correct = 0;
  std::vector<double> hidden;
  for (std::size_t start = 0; start < rows.size(); start += kEvalChunk) {
    const std::size_t end = std::min(start + kEvalChunk, rows.size());
    const Batch batch = make_batch(data, rows.subspan(start, end - start));
    const auto z = logits(model, batch, hidden);
    correct += kernels::parallel::count_correct(z, batch.labels, batch.rows, model.num_labels());
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double evaluate(const ProbeModel& model, const AlignedDataset& data) {
  std::vector<std::size_t> all(data.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return evaluate(model, data, all);
}

std::vector<float> make_arc_features(std::span<const float> child, std::span<const float> other) {
  if (child.size() != other.size()) {
    throw UsageError("arc feature vectors differ in length (" + std::to_string(child.size()) + " vs " +
                     std::to_string(other.size()) + ")");
  }
  const std::size_t d = child.size();
  std::vector<float> out(3 * d);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = child[i];
    out[d + i] = other[i];
    out[2 * d + i] = child[i] * other[i];
  }
  return out;
}

std::string format_training_log(std::span<const EpochLog> log) {
  std::ostringstream out;
  out << "epoch,loss,holdout_acc\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& e : log) out << e.epoch << ',' << e.loss << ',' << e.holdout_acc << '\n';
  return out.str();
}

std::string encode_probe(const ProbeModel& model) {
  detail::ByteWriter w;
  w.bytes(kProbeMagic);
  w.u32(kProbeVersion);
  w.u32(static_cast<std::uint32_t>(model.input_dim));
  w.u32(static_cast<std::uint32_t>(model.hidden_dim));
  w.u32(static_cast<std::uint32_t>(model.num_labels()));
  w.u8(model.use_bias ? 1 : 0);
  for (const auto& label : model.vocab.labels()) w.str16(label);
  for (const auto* block : blocks(model.params)) {
    for (double x : *block) w.f32(static_cast<float>(x));
  }
  return w.take();
}

ProbeModel decode_probe(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.substr(0, kProbeMagic.size()) != kProbeMagic) throw FormatError("bad probe checkpoint magic", 0);
  r.bytes(kProbeMagic.size(), "magic");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kProbeVersion) {
    throw FormatError("unsupported probe checkpoint version " + std::to_string(version), version_at);
  }
  const std::size_t dims_at = r.offset();
  const std::uint32_t input = r.u32("input dim");
  const std::uint32_t hidden = r.u32("hidden dim");
  const std::uint32_t labels = r.u32("label count");
  const bool use_bias = r.u8("bias flag") != 0;
  if (input == 0 || hidden == 0 || labels == 0) throw FormatError("zero dimension in probe checkpoint", dims_at);
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < labels; ++i) names.push_back(r.str16("label"));
  const std::size_t labels_at = r.offset();
  LabelVocabulary vocab(names);
  if (vocab.labels() != names) throw FormatError("probe labels not sorted and unique", labels_at);
  const double weight_bytes =
      4.0 * (static_cast<double>(hidden) * input + hidden + static_cast<double>(labels) * hidden + labels);
  if (weight_bytes > static_cast<double>(r.remaining())) {
    throw FormatError("truncated file while reading weights", r.offset());
  }
  ProbeModel model = make_probe(input, hidden, std::move(vocab), use_bias);
  for (auto* block : blocks(model.params)) {
    for (double& x : *block) {
      const std::size_t at = r.offset();
      const float f = r.f32("weights");
      if (!std::isfinite(f)) throw FormatError("non-finite weight", at);
      x = f;
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after probe weights", r.offset());
  return model;
}

void save_probe(const std::string& path, const ProbeModel& model) { detail::write_file(path, encode_probe(model)); }

ProbeModel load_probe(const std::string& path) { return decode_probe(read_text_file(path)); }

}  // namespace synprobe
