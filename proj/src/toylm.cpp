#include "synprobe/toylm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "synprobe/error.hpp"
#include "synprobe/random.hpp"

namespace synprobe {
namespace {

constexpr std::string_view kLmMagic = "SPLSTM\n";
constexpr std::uint32_t kLmVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::span<double>> blocks(LstmLmParams& p) {
  std::vector<std::span<double>> out{p.embedding, p.out_bias};
  for (auto& layer : p.layers) {
    out.emplace_back(layer.w);
    out.emplace_back(layer.b);
  }
  return out;
}

std::vector<std::span<const double>> blocks(const LstmLmParams& p) {
  std::vector<std::span<const double>> out{p.embedding, p.out_bias};
  for (const auto& layer : p.layers) {
    out.emplace_back(layer.w);
    out.emplace_back(layer.b);
  }
  return out;
}

// Activations of one LSTM layer over a sequence.
struct LayerTape {
  std::vector<double> xh;     // T x 2d: [x_t ; h_{t-1}]
  std::vector<double> gates;  // T x 4d: activated i, f, g, o
  std::vector<double> c;      // T x d
  std::vector<double> tc;     // T x d: tanh(c)
  std::vector<double> h;      // T x d
};

// Runs the stack over `inputs` (token ids), filling one tape per layer.
void run_stack(const LstmLmModel& model, std::span<const int> inputs, std::vector<LayerTape>& tapes) {
  const std::size_t d = model.dim();
  const std::size_t steps = inputs.size();
  const std::size_t layers = model.num_layers();
  tapes.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    auto& tape = tapes[l];
    const auto& p = model.params.layers[l];
    tape.xh.assign(steps * 2 * d, 0.0);
    tape.gates.assign(steps * 4 * d, 0.0);
    tape.c.assign(steps * d, 0.0);
    tape.tc.assign(steps * d, 0.0);
    tape.h.assign(steps * d, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
      double* xh = tape.xh.data() + t * 2 * d;
      if (l == 0) {
        const double* e = model.params.embedding.data() + static_cast<std::size_t>(inputs[t]) * d;
        std::copy(e, e + d, xh);
      } else {
        const double* below = tapes[l - 1].h.data() + t * d;
        std::copy(below, below + d, xh);
      }
      if (t > 0) {
        const double* hp = tape.h.data() + (t - 1) * d;
        std::copy(hp, hp + d, xh + d);
      }
      double* g = tape.gates.data() + t * 4 * d;
      for (std::size_t r = 0; r < 4 * d; ++r) {
        const double* w = p.w.data() + r * 2 * d;
        double acc = 0.0;
        for (std::size_t k = 0; k < 2 * d; ++k) acc += w[k] * xh[k];
        g[r] = acc + p.b[r];
      }
      double* c = tape.c.data() + t * d;
      double* tc = tape.tc.data() + t * d;
      double* h = tape.h.data() + t * d;
      const double* cp = t > 0 ? tape.c.data() + (t - 1) * d : nullptr;
      for (std::size_t k = 0; k < d; ++k) {
        const double i = sigmoid(g[k]);
        const double f = sigmoid(g[d + k]);
        const double gg = std::tanh(g[2 * d + k]);
        const double o = sigmoid(g[3 * d + k]);
        g[k] = i;
        g[d + k] = f;
        g[2 * d + k] = gg;
        g[3 * d + k] = o;
        c[k] = i * gg + (cp ? f * cp[k] : 0.0);
        tc[k] = std::tanh(c[k]);
        h[k] = o * tc[k];
      }
    }
  }
}

void check_shape(const LstmLmModel& model, const LstmLmParams& grad) {
  if (grad.embedding.size() != model.params.embedding.size() || grad.layers.size() != model.params.layers.size()) {
    throw UsageError("gradient buffer does not match the model shape");
  }
}

std::vector<int> with_bos(std::span<const int> ids) {
  std::vector<int> inputs;
  inputs.reserve(ids.size() + 1);
  inputs.push_back(LmVocabulary::kBosId);
  inputs.insert(inputs.end(), ids.begin(), ids.end());
  return inputs;
}

double global_norm(const LstmLmParams& g) {
  double sum = 0.0;
  for (auto block : blocks(g)) {
    for (double x : block) sum += x * x;
  }
  return std::sqrt(sum);
}

}  // namespace

std::vector<TokenizedSentence> parse_text_corpus(std::string_view text, std::string_view source) {
  std::vector<TokenizedSentence> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    TokenizedSentence sentence;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) sentence.tokens.emplace_back(line.substr(i, j - i));
      i = j;
    }
    if (!sentence.tokens.empty()) {
      sentence.sentence_id = std::string(source) + ":" + std::to_string(line_no);
      out.push_back(std::move(sentence));
    }
    start = end + 1;
  }
  return out;
}

LmVocabulary::LmVocabulary(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  words_ = {std::string(kBos), std::string(kUnk)};
  for (auto& w : words) {
    if (w == kBos || w == kUnk) throw UsageError("vocabulary words may not use reserved symbols");
    words_.push_back(std::move(w));
  }
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<int>(i));
}

int LmVocabulary::id(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end() || it->second == kBosId) return kUnkId;
  return it->second;
}

LmVocabulary build_lm_vocabulary(std::span<const TokenizedSentence> corpus, std::size_t min_count) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) ++counts[t];
  }
  std::vector<std::string> words;
  for (const auto& [w, c] : counts) {
    if (c >= min_count && w != LmVocabulary::kBos && w != LmVocabulary::kUnk) words.push_back(w);
  }
  return LmVocabulary(std::move(words));
}

std::string_view direction_name(Direction d) { return d == Direction::kForward ? "forward" : "backward"; }

void validate(const LstmLmConfig& c) {
  if (c.num_layers == 0) throw UsageError("num_layers must be at least 1");
  if (c.dim == 0) throw UsageError("dim must be positive");
  if (!(c.learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (c.batch_size == 0) throw UsageError("batch_size must be positive");
  if (c.max_sentence_length == 0) throw UsageError("max_sentence_length must be positive");
  if (!(c.clip_norm > 0.0)) throw UsageError("clip_norm must be positive");
  if (c.min_count == 0) throw UsageError("min_count must be positive");
}

LstmLmModel init_lm(const LstmLmConfig& config, LmVocabulary vocab) {
  validate(config);
  LstmLmModel model;
  model.config = config;
  model.vocab = std::move(vocab);
  const std::size_t d = config.dim;
  const std::size_t v = model.vocab.size();
  Rng rng(derive_seed(config.seed, "lm-init", config.direction == Direction::kForward ? 0 : 1));
  const double ae = std::sqrt(3.0 / static_cast<double>(d));
  const double aw = 1.0 / std::sqrt(static_cast<double>(d));
  model.params.embedding.resize(v * d);
  for (double& x : model.params.embedding) x = rng.uniform(-ae, ae);
  model.params.out_bias.assign(v, 0.0);
  model.params.layers.resize(config.num_layers);
  for (auto& layer : model.params.layers) {
    layer.w.resize(4 * d * 2 * d);
    for (double& x : layer.w) x = rng.uniform(-aw, aw);
    layer.b.assign(4 * d, 0.0);
    std::fill(layer.b.begin() + static_cast<std::ptrdiff_t>(d), layer.b.begin() + static_cast<std::ptrdiff_t>(2 * d),
              1.0);
  }
  return model;
}

LstmLmParams zeros_like(const LstmLmParams& params) {
  LstmLmParams z;
  z.embedding.assign(params.embedding.size(), 0.0);
  z.out_bias.assign(params.out_bias.size(), 0.0);
  z.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    z.layers[l].w.assign(params.layers[l].w.size(), 0.0);
    z.layers[l].b.assign(params.layers[l].b.size(), 0.0);
  }
  return z;
}

std::vector<int> encode_for_model(const LstmLmModel& model, std::span<const std::string> tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(model.vocab.id(t));
  if (model.config.direction == Direction::kBackward) std::reverse(ids.begin(), ids.end());
  return ids;
}

double sentence_nll(const LstmLmModel& model, std::span<const int> ids, LstmLmParams* grad, double grad_scale) {
  if (ids.empty()) return 0.0;
  if (grad) check_shape(model, *grad);
  const std::size_t d = model.dim();
  const std::size_t v = model.vocab.size();
  const std::size_t steps = ids.size();
  const std::size_t layers = model.num_layers();
  const std::vector<int> inputs = with_bos(ids.subspan(0, steps - 1));

  std::vector<LayerTape> tapes;
  run_stack(model, inputs, tapes);
  const auto& top = tapes.back();
  const auto& emb = model.params.embedding;

  double nll = 0.0;
  std::vector<double> dh_top(grad ? steps * d : 0, 0.0);
  std::vector<double> logits(v);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* h = top.h.data() + t * d;
    for (std::size_t w = 0; w < v; ++w) {
      const double* e = emb.data() + w * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += e[k] * h[k];
      logits[w] = acc + model.params.out_bias[w];
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& z : logits) {
      z = std::exp(z - mx);
      sum += z;
    }
    const auto target = static_cast<std::size_t>(ids[t]);
    nll += -std::log(logits[target] / sum);
    if (!grad) continue;
    double* dh = dh_top.data() + t * d;
    for (std::size_t w = 0; w < v; ++w) {
      const double dz = grad_scale * (logits[w] / sum - (w == target ? 1.0 : 0.0));
      grad->out_bias[w] += dz;
      double* ge = grad->embedding.data() + w * d;
      const double* e = emb.data() + w * d;
      for (std::size_t k = 0; k < d; ++k) {
        ge[k] += dz * h[k];
        dh[k] += dz * e[k];
      }
    }
  }
  if (!grad) return nll;

  std::vector<double> dh_in = std::move(dh_top);
  std::vector<double> dx(steps * d);
  std::vector<double> da(4 * d);
  std::vector<double> dh_next(d), dc_next(d), dxh(2 * d);
  for (std::size_t li = layers; li-- > 0;) {
    const auto& tape = tapes[li];
    const auto& p = model.params.layers[li];
    auto& gp = grad->layers[li];
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);
    for (std::size_t t = steps; t-- > 0;) {
      const double* g = tape.gates.data() + t * 4 * d;
      const double* tc = tape.tc.data() + t * d;
      const double* cp = t > 0 ? tape.c.data() + (t - 1) * d : nullptr;
      const double* din = dh_in.data() + t * d;
      for (std::size_t k = 0; k < d; ++k) {
        const double i = g[k], f = g[d + k], gg = g[2 * d + k], o = g[3 * d + k];
        const double dh = din[k] + dh_next[k];
        const double dc = dc_next[k] + dh * o * (1.0 - tc[k] * tc[k]);
        const double c_prev = cp ? cp[k] : 0.0;
        da[k] = dc * gg * i * (1.0 - i);
        da[d + k] = dc * c_prev * f * (1.0 - f);
        da[2 * d + k] = dc * i * (1.0 - gg * gg);
        da[3 * d + k] = dh * tc[k] * o * (1.0 - o);
        dc_next[k] = dc * f;
      }
      const double* xh = tape.xh.data() + t * 2 * d;
      std::fill(dxh.begin(), dxh.end(), 0.0);
      for (std::size_t r = 0; r < 4 * d; ++r) {
        const double a = da[r];
        gp.b[r] += a;
        double* gw = gp.w.data() + r * 2 * d;
        const double* w = p.w.data() + r * 2 * d;
        for (std::size_t k = 0; k < 2 * d; ++k) {
          gw[k] += a * xh[k];
          dxh[k] += a * w[k];
        }
      }
      std::copy(dxh.begin(), dxh.begin() + static_cast<std::ptrdiff_t>(d), dx.begin() + static_cast<std::ptrdiff_t>(t * d));
      std::copy(dxh.begin() + static_cast<std::ptrdiff_t>(d), dxh.end(), dh_next.begin());
    }
    std::swap(dh_in, dx);
  }
  // dh_in now holds the (already scaled) gradient w.r.t. the layer-0 inputs.
  for (std::size_t t = 0; t < steps; ++t) {
    double* ge = grad->embedding.data() + static_cast<std::size_t>(inputs[t]) * d;
    const double* src = dh_in.data() + t * d;
    for (std::size_t k = 0; k < d; ++k) ge[k] += src[k];
  }
  return nll;
}

std::vector<std::vector<double>> layer_states(const LstmLmModel& model, std::span<const int> ids) {
  const std::size_t d = model.dim();
  std::vector<std::vector<double>> out(model.num_layers() + 1);
  out[0].reserve(ids.size() * d);
  for (int id : ids) {
    const double* e = model.params.embedding.data() + static_cast<std::size_t>(id) * d;
    out[0].insert(out[0].end(), e, e + d);
  }
  if (ids.empty()) return out;
  // Input [<s>, ids...]; the state after reading ids[t] sits at step t + 1.
  std::vector<LayerTape> tapes;
  run_stack(model, with_bos(ids), tapes);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    out[l + 1].assign(tapes[l].h.begin() + static_cast<std::ptrdiff_t>(d), tapes[l].h.end());
  }
  return out;
}

LmTrainingState start_lm_training(std::span<const TokenizedSentence> corpus, const LstmLmConfig& config) {
  validate(config);
  if (corpus.empty()) throw DataError("language model corpus is empty");
  LmTrainingState state;
  state.model = init_lm(config, build_lm_vocabulary(corpus, config.min_count));
  state.adam_m = zeros_like(state.model.params);
  state.adam_v = zeros_like(state.model.params);
  return state;
}

void continue_lm_training(LmTrainingState& state, std::span<const TokenizedSentence> corpus, std::size_t epochs) {
  auto& model = state.model;
  const auto& cfg = model.config;
  std::vector<std::vector<int>> encoded;
  encoded.reserve(corpus.size());
  for (const auto& s : corpus) {
    auto tokens = std::span<const std::string>(s.tokens);
    if (tokens.size() > cfg.max_sentence_length) tokens = tokens.subspan(0, cfg.max_sentence_length);
    if (tokens.empty()) continue;
    encoded.push_back(encode_for_model(model, tokens));
  }
  if (encoded.empty()) throw DataError("language model corpus has no tokens");

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  LstmLmParams grad = zeros_like(model.params);
  std::vector<std::size_t> order(encoded.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    const std::size_t epoch = state.epochs_done + 1;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "lm-epoch", epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_nll = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      std::size_t batch_tokens = 0;
      for (std::size_t k = start; k < end; ++k) batch_tokens += encoded[order[k]].size();
      for (auto block : blocks(grad)) std::fill(block.begin(), block.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(batch_tokens);
      double batch_nll = 0.0;
      for (std::size_t k = start; k < end; ++k) batch_nll += sentence_nll(model, encoded[order[k]], &grad, scale);
      if (!std::isfinite(batch_nll)) {
        throw NumericalError("language model diverged (non-finite loss) in epoch " + std::to_string(epoch) +
                             " at batch " + std::to_string(start / cfg.batch_size) + "; lower the learning rate");
      }
      epoch_nll += batch_nll;
      epoch_tokens += batch_tokens;
      const double norm = global_norm(grad);
      const double clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      ++state.adam_step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.adam_step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.adam_step));
      auto pb = blocks(model.params);
      auto gb = blocks(grad);
      auto mb = blocks(state.adam_m);
      auto vb = blocks(state.adam_v);
      for (std::size_t b = 0; b < pb.size(); ++b) {
        for (std::size_t i = 0; i < pb[b].size(); ++i) {
          const double g = gb[b][i] * clip;
          mb[b][i] = kBeta1 * mb[b][i] + (1.0 - kBeta1) * g;
          vb[b][i] = kBeta2 * vb[b][i] + (1.0 - kBeta2) * g * g;
          pb[b][i] -= cfg.learning_rate * (mb[b][i] / c1) / (std::sqrt(vb[b][i] / c2) + kEps);
        }
      }
    }
    const double ppl = std::exp(epoch_nll / static_cast<double>(epoch_tokens));
    if (!std::isfinite(ppl)) {
      throw NumericalError("language model perplexity is not finite after epoch " + std::to_string(epoch));
    }
    state.log.push_back({epoch, ppl});
    state.epochs_done = epoch;
  }
}

LmTrainingState train_lm(std::span<const TokenizedSentence> corpus, const LstmLmConfig& config) {
  LmTrainingState state = start_lm_training(corpus, config);
  continue_lm_training(state, corpus, config.epochs);
  return state;
}

double perplexity(const LstmLmModel& model, std::span<const TokenizedSentence> corpus) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& s : corpus) {
    const auto ids = encode_for_model(model, s.tokens);
    nll += sentence_nll(model, ids);
    tokens += ids.size();
  }
  if (tokens == 0) throw DataError("perplexity of an empty corpus");
  return std::exp(nll / static_cast<double>(tokens));
}

LayeredRepresentations single_direction_representations(const LstmLmModel& model,
                                                        std::span<const TokenizedSentence> corpus) {
  const std::size_t d = model.dim();
  const std::size_t layers = model.num_layers() + 1;
  LayeredRepresentations reps;
  reps.layer_dims.assign(layers, static_cast<std::uint32_t>(d));
  reps.sentences.resize(corpus.size());
  const bool backward = model.config.direction == Direction::kBackward;
  const auto count = static_cast<std::int64_t>(corpus.size());
  // Sentences are independent and the model is read-only here.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t si = 0; si < count; ++si) {
    const auto& src = corpus[static_cast<std::size_t>(si)];
    auto& dst = reps.sentences[static_cast<std::size_t>(si)];
    dst.sentence_id = src.sentence_id;
    dst.tokens = src.tokens;
    const auto ids = encode_for_model(model, src.tokens);
    const auto states = layer_states(model, ids);
    const std::size_t n = ids.size();
    dst.layers.assign(layers, std::vector<float>(n * d));
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t t = 0; t < n; ++t) {
        const std::size_t from = backward ? n - 1 - t : t;
        for (std::size_t k = 0; k < d; ++k) dst.layers[l][t * d + k] = static_cast<float>(states[l][from * d + k]);
      }
    }
  }
  return reps;
}

LayeredRepresentations dump_representations(const LstmLmModel& forward, const LstmLmModel& backward,
                                            std::span<const TokenizedSentence> corpus) {
  if (!(forward.vocab == backward.vocab)) throw UsageError("forward and backward models use different vocabularies");
  if (forward.num_layers() != backward.num_layers()) {
    throw UsageError("forward and backward models have different layer counts");
  }
  return concat_directions(single_direction_representations(forward, corpus),
                           single_direction_representations(backward, corpus));
}

std::string format_perplexity_log(std::span<const LmEpochLog> log) {
  std::ostringstream out;
  out << "epoch,perplexity\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& e : log) out << e.epoch << ',' << e.perplexity << '\n';
  return out.str();
}

std::string encode_lm_checkpoint(const LmTrainingState& state) {
  const auto& m = state.model;
  const auto& c = m.config;
  detail::ByteWriter w;
  w.bytes(kLmMagic);
  w.u32(kLmVersion);
  w.u32(static_cast<std::uint32_t>(c.num_layers));
  w.u32(static_cast<std::uint32_t>(c.dim));
  w.u8(c.direction == Direction::kForward ? 0 : 1);
  w.u64(c.seed);
  w.f64(c.learning_rate);
  w.u32(static_cast<std::uint32_t>(c.epochs));
  w.u32(static_cast<std::uint32_t>(c.batch_size));
  w.u32(static_cast<std::uint32_t>(c.max_sentence_length));
  w.f64(c.clip_norm);
  w.u32(static_cast<std::uint32_t>(c.min_count));
  w.u32(static_cast<std::uint32_t>(m.vocab.size() - 2));
  for (std::size_t i = 2; i < m.vocab.size(); ++i) w.str16(m.vocab.word(static_cast<int>(i)));
  for (const auto* p : {&m.params, &state.adam_m, &state.adam_v}) {
    for (auto block : blocks(*p)) {
      for (double x : block) w.f64(x);
    }
  }
  w.u64(state.adam_step);
  w.u32(static_cast<std::uint32_t>(state.epochs_done));
  w.u32(static_cast<std::uint32_t>(state.log.size()));
  for (const auto& e : state.log) {
    w.u32(static_cast<std::uint32_t>(e.epoch));
    w.f64(e.perplexity);
  }
  return w.take();
}

LmTrainingState decode_lm_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (bytes.substr(0, kLmMagic.size()) != kLmMagic) throw FormatError("bad language model checkpoint magic", 0);
  r.bytes(kLmMagic.size(), "magic");
  const std::size_t version_at = r.offset();
  if (r.u32("version") != kLmVersion) throw FormatError("unsupported language model checkpoint version", version_at);
  LstmLmConfig c;
  const std::size_t config_at = r.offset();
  c.num_layers = r.u32("num_layers");
  c.dim = r.u32("dim");
  c.direction = r.u8("direction") == 0 ? Direction::kForward : Direction::kBackward;
  c.seed = r.u64("seed");
  c.learning_rate = r.f64("learning_rate");
  c.epochs = r.u32("epochs");
  c.batch_size = r.u32("batch_size");
  c.max_sentence_length = r.u32("max_sentence_length");
  c.clip_norm = r.f64("clip_norm");
  c.min_count = r.u32("min_count");
  try {
    validate(c);
  } catch (const UsageError& e) {
    throw FormatError(std::string("invalid configuration: ") + e.what(), config_at);
  }
  if (c.dim > 4096 || c.num_layers > 64) throw FormatError("implausible model size", config_at);
  const std::uint32_t words = r.u32("vocabulary size");
  r.need(2ull * words, "vocabulary");
  std::vector<std::string> vocab;
  vocab.reserve(words);
  for (std::uint32_t i = 0; i < words; ++i) vocab.push_back(r.str16("vocabulary word"));
  LmTrainingState state;
  const std::size_t vocab_at = r.offset();
  try {
    state.model.vocab = LmVocabulary(vocab);
  } catch (const UsageError& e) {
    throw FormatError(e.what(), vocab_at);
  }
  if (state.model.vocab.size() != words + 2) throw FormatError("duplicate vocabulary words", vocab_at);
  state.model.config = c;
  const std::size_t d = c.dim;
  const std::size_t v = state.model.vocab.size();
  auto& p = state.model.params;
  p.embedding.assign(v * d, 0.0);
  p.out_bias.assign(v, 0.0);
  p.layers.resize(c.num_layers);
  for (auto& layer : p.layers) {
    layer.w.assign(8 * d * d, 0.0);
    layer.b.assign(4 * d, 0.0);
  }
  state.adam_m = zeros_like(p);
  state.adam_v = zeros_like(p);
  for (auto* target : {&p, &state.adam_m, &state.adam_v}) {
    for (auto block : blocks(*target)) {
      r.need(8 * block.size(), "parameters");
      for (double& x : block) {
        const std::size_t at = r.offset();
        x = r.f64("parameters");
        if (!std::isfinite(x)) throw FormatError("non-finite parameter", at);
      }
    }
  }
  state.adam_step = r.u64("adam step");
  state.epochs_done = r.u32("epochs done");
  const std::uint32_t entries = r.u32("log size");
  r.need(12ull * entries, "log");
  for (std::uint32_t i = 0; i < entries; ++i) {
    LmEpochLog e;
    e.epoch = r.u32("log epoch");
    e.perplexity = r.f64("log perplexity");
    state.log.push_back(e);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());
  return state;
}

void save_lm_checkpoint(const std::string& path, const LmTrainingState& state) {
  detail::write_file(path, encode_lm_checkpoint(state));
}

LmTrainingState load_lm_checkpoint(const std::string& path) { return decode_lm_checkpoint(read_text_file(path)); }

}  // namespace synprobe
