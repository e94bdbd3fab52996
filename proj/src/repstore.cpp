#include "synprobe/repstore.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "binary_io.hpp"
#include "synprobe/error.hpp"
#include "synprobe/probe.hpp"

namespace synprobe {
namespace {

constexpr std::string_view kMagic = "WREP1\n";

using detail::ByteReader;
using detail::ByteWriter;

float read_finite_f32(ByteReader& r) {
  const std::size_t at = r.offset();
  const float f = r.f32("vector payload");
  if (!std::isfinite(f)) throw FormatError("non-finite float in vector payload", at);
  return f;
}

}  // namespace

void validate(const LayeredRepresentations& reps) {
  if (reps.layer_dims.empty()) throw DataError("representations have no layers");
  for (std::size_t l = 0; l < reps.layer_dims.size(); ++l) {
    if (reps.layer_dims[l] == 0) throw DataError("layer " + std::to_string(l) + " has dimension 0");
  }
  std::unordered_set<std::string_view> ids;
  for (const auto& s : reps.sentences) {
    const std::string where = "sentence '" + s.sentence_id + "': ";
    if (!ids.insert(s.sentence_id).second) throw DataError(where + "duplicate sentence id");
    if (s.sentence_id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw DataError(where + "id longer than 65535 bytes");
    }
    for (const auto& t : s.tokens) {
      if (t.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw DataError(where + "token longer than 65535 bytes");
      }
    }
    if (s.layers.size() != reps.layer_dims.size()) {
      throw DataError(where + "has " + std::to_string(s.layers.size()) + " layers, expected " +
                      std::to_string(reps.layer_dims.size()));
    }
    for (std::size_t l = 0; l < s.layers.size(); ++l) {
      if (s.layers[l].size() != s.tokens.size() * reps.layer_dims[l]) {
        throw DataError(where + "layer " + std::to_string(l) + " holds " +
                        std::to_string(s.layers[l].size()) + " floats, expected " +
                        std::to_string(s.tokens.size() * reps.layer_dims[l]));
      }
      for (float f : s.layers[l]) {
        if (!std::isfinite(f)) throw DataError(where + "non-finite value in layer " + std::to_string(l));
      }
    }
  }
}

std::size_t wrep_size(const LayeredRepresentations& reps) {
  std::size_t size = kMagic.size() + 4 + 4 * reps.layer_dims.size() + 4;
  for (const auto& s : reps.sentences) {
    size += 2 + s.sentence_id.size() + 4;
    for (const auto& t : s.tokens) size += 2 + t.size();
    for (std::uint32_t d : reps.layer_dims) size += 4 * s.tokens.size() * d;
  }
  return size;
}

std::string encode_wrep(const LayeredRepresentations& reps) {
  validate(reps);
  ByteWriter w(wrep_size(reps));
  w.bytes(kMagic);
  w.u32(static_cast<std::uint32_t>(reps.layer_dims.size()));
  for (std::uint32_t d : reps.layer_dims) w.u32(d);
  w.u32(static_cast<std::uint32_t>(reps.sentences.size()));
  for (const auto& s : reps.sentences) {
    w.u16(static_cast<std::uint16_t>(s.sentence_id.size()));
    w.bytes(s.sentence_id);
    w.u32(static_cast<std::uint32_t>(s.tokens.size()));
    for (const auto& t : s.tokens) {
      w.u16(static_cast<std::uint16_t>(t.size()));
      w.bytes(t);
    }
    for (const auto& layer : s.layers) {
      for (float f : layer) w.f32(f);
    }
  }
  return w.take();
}

LayeredRepresentations decode_wrep(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("bad magic, expected \"WREP1\\n\"", 0);
  }
  r.bytes(kMagic.size(), "magic");
  LayeredRepresentations reps;
  const std::size_t layers_at = r.offset();
  const std::uint32_t num_layers = r.u32("layer count");
  if (num_layers == 0) throw FormatError("layer count is zero", layers_at);
  r.need(4ull * num_layers, "layer dims");
  for (std::uint32_t l = 0; l < num_layers; ++l) {
    const std::size_t at = r.offset();
    const std::uint32_t d = r.u32("layer dims");
    if (d == 0) throw FormatError("layer " + std::to_string(l) + " has dimension 0", at);
    reps.layer_dims.push_back(d);
  }
  const std::uint32_t count = r.u32("sentence count");
  std::unordered_set<std::string> ids;
  for (std::uint32_t s = 0; s < count; ++s) {
    RepSentence sentence;
    const std::size_t id_at = r.offset();
    const std::uint16_t id_len = r.u16("sentence id length");
    sentence.sentence_id = std::string(r.bytes(id_len, "sentence id"));
    if (!ids.insert(sentence.sentence_id).second) {
      throw FormatError("duplicate sentence id '" + sentence.sentence_id + "'", id_at);
    }
    const std::uint32_t num_tokens = r.u32("token count");
    r.need(2ull * num_tokens, "tokens");
    sentence.tokens.reserve(num_tokens);
    for (std::uint32_t t = 0; t < num_tokens; ++t) {
      const std::uint16_t len = r.u16("token length");
      sentence.tokens.emplace_back(r.bytes(len, "token"));
    }
    sentence.layers.resize(num_layers);
    for (std::uint32_t l = 0; l < num_layers; ++l) {
      if (num_tokens > r.remaining() / (4ull * reps.layer_dims[l])) {
        throw FormatError("truncated file while reading vector payload", r.offset());
      }
      const std::size_t n = static_cast<std::size_t>(num_tokens) * reps.layer_dims[l];
      auto& layer = sentence.layers[l];
      layer.resize(n);
      for (std::size_t i = 0; i < n; ++i) layer[i] = read_finite_f32(r);
    }
    reps.sentences.push_back(std::move(sentence));
  }
  if (r.remaining() != 0) {
    throw FormatError("file size mismatch: " + std::to_string(r.remaining()) +
                          " bytes after the last declared sentence",
                      r.offset());
  }
  return reps;
}

namespace detail {

void write_file(const std::string& path, std::string_view bytes) { write_text_file(path, bytes); }

}  // namespace detail

void write_wrep(const std::string& path, const LayeredRepresentations& reps) {
  detail::write_file(path, encode_wrep(reps));
}

LayeredRepresentations read_wrep(const std::string& path) {
  return decode_wrep(read_text_file(path));
}

LayeredRepresentations merge_representations(std::vector<LayeredRepresentations> parts) {
  if (parts.empty()) throw DataError("no representation files given");
  LayeredRepresentations merged = std::move(parts.front());
  std::unordered_set<std::string> ids;
  for (const auto& s : merged.sentences) ids.insert(s.sentence_id);
  for (std::size_t p = 1; p < parts.size(); ++p) {
    if (parts[p].layer_dims != merged.layer_dims) {
      throw DataError("representation files disagree on layer dimensions");
    }
    for (auto& s : parts[p].sentences) {
      if (!ids.insert(s.sentence_id).second) {
        throw DataError("sentence id '" + s.sentence_id + "' appears in more than one representation file");
      }
      merged.sentences.push_back(std::move(s));
    }
  }
  return merged;
}

LayeredRepresentations concat_directions(const LayeredRepresentations& forward,
                                         const LayeredRepresentations& backward) {
  if (forward.num_layers() != backward.num_layers()) {
    throw AlignmentError("layer counts differ: " + std::to_string(forward.num_layers()) + " vs " +
                         std::to_string(backward.num_layers()));
  }
  if (forward.sentences.size() != backward.sentences.size()) {
    throw AlignmentError("sentence counts differ");
  }
  for (std::size_t i = 0; i < forward.sentences.size(); ++i) {
    const auto& f = forward.sentences[i];
    const auto& b = backward.sentences[i];
    if (f.sentence_id != b.sentence_id) {
      throw AlignmentError("sentence " + std::to_string(i) + ": ids differ ('" + f.sentence_id + "' vs '" +
                           b.sentence_id + "')");
    }
    if (f.tokens != b.tokens) {
      throw AlignmentError("sentence '" + f.sentence_id + "': token sequences differ");
    }
  }
  LayeredRepresentations out;
  const std::size_t num_layers = forward.num_layers();
  for (std::size_t l = 0; l < num_layers; ++l) {
    out.layer_dims.push_back(forward.layer_dims[l] + backward.layer_dims[l]);
  }
  out.sentences.reserve(forward.sentences.size());
  for (std::size_t i = 0; i < forward.sentences.size(); ++i) {
    const auto& f = forward.sentences[i];
    RepSentence s{f.sentence_id, f.tokens, std::vector<std::vector<float>>(num_layers)};
    for (std::size_t l = 0; l < num_layers; ++l) {
      const std::size_t df = forward.layer_dims[l];
      const std::size_t db = backward.layer_dims[l];
      auto& dst = s.layers[l];
      dst.reserve(f.tokens.size() * (df + db));
      for (std::size_t t = 0; t < f.tokens.size(); ++t) {
        auto fv = forward.vector(i, l, t);
        auto bv = backward.vector(i, l, t);
        dst.insert(dst.end(), fv.begin(), fv.end());
        dst.insert(dst.end(), bv.begin(), bv.end());
      }
    }
    out.sentences.push_back(std::move(s));
  }
  return out;
}

namespace {

class SentenceLookup {
 public:
  SentenceLookup(const LayeredRepresentations& reps, const SentenceTokens& expected)
      : reps_(reps), expected_(expected) {
    for (std::size_t i = 0; i < reps.sentences.size(); ++i) index_.emplace(reps.sentences[i].sentence_id, i);
  }

  // Index of the sentence in `reps`, verified against the task's tokens once.
  std::size_t find(const std::string& id) {
    auto cached = verified_.find(id);
    if (cached != verified_.end()) return cached->second;
    auto it = index_.find(id);
    if (it == index_.end()) throw AlignmentError("sentence '" + id + "' missing from representations");
    auto exp = expected_.find(id);
    if (exp == expected_.end()) throw AlignmentError("sentence '" + id + "' has no token record in the task");
    const auto& have = reps_.sentences[it->second].tokens;
    const auto& want = exp->second;
    if (have.size() != want.size()) {
      throw AlignmentError("sentence '" + id + "': representations have " + std::to_string(have.size()) +
                           " tokens, treebank has " + std::to_string(want.size()));
    }
    for (std::size_t k = 0; k < have.size(); ++k) {
      if (have[k] != want[k]) {
        throw AlignmentError("sentence '" + id + "': token mismatch at position " + std::to_string(k) + " ('" +
                             have[k] + "' vs '" + want[k] + "')");
      }
    }
    verified_.emplace(id, it->second);
    return it->second;
  }

 private:
  const LayeredRepresentations& reps_;
  const SentenceTokens& expected_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::size_t> verified_;
};

void check_layer(const LayeredRepresentations& reps, std::size_t layer) {
  if (layer >= reps.num_layers()) {
    throw UsageError("layer " + std::to_string(layer) + " not present (file has " +
                     std::to_string(reps.num_layers()) + " layers)");
  }
}

}  // namespace

AlignedDataset align(const LayeredRepresentations& reps, const WordLabelTask& task,
                     const LabelVocabulary& vocab, std::size_t layer) {
  check_layer(reps, layer);
  AlignedDataset data;
  data.layer = layer;
  data.input_dim = reps.layer_dims[layer];
  data.features.reserve(task.examples.size() * data.input_dim);
  data.labels.reserve(task.examples.size());
  SentenceLookup lookup(reps, task.sentences);
  for (const auto& ex : task.examples) {
    const std::size_t s = lookup.find(ex.sentence_id);
    if (ex.token_index < 0 || static_cast<std::size_t>(ex.token_index) >= reps.sentences[s].tokens.size()) {
      throw AlignmentError("sentence '" + ex.sentence_id + "': token index " + std::to_string(ex.token_index) +
                           " out of range");
    }
    auto v = reps.vector(s, layer, static_cast<std::size_t>(ex.token_index));
    data.features.insert(data.features.end(), v.begin(), v.end());
    data.labels.push_back(vocab.index_of(ex.label));
  }
  return data;
}

AlignedDataset align(const LayeredRepresentations& reps, const ArcPairTask& task, std::size_t layer) {
  check_layer(reps, layer);
  AlignedDataset data;
  data.layer = layer;
  data.input_dim = 3 * static_cast<std::size_t>(reps.layer_dims[layer]);
  data.features.reserve(task.examples.size() * data.input_dim);
  data.labels.reserve(task.examples.size());
  SentenceLookup lookup(reps, task.sentences);
  for (const auto& ex : task.examples) {
    const std::size_t s = lookup.find(ex.sentence_id);
    const auto n = static_cast<int>(reps.sentences[s].tokens.size());
    if (ex.child < 1 || ex.child > n || ex.other < 1 || ex.other > n) {
      throw AlignmentError("sentence '" + ex.sentence_id + "': arc positions out of range");
    }
    const auto row = make_arc_features(reps.vector(s, layer, static_cast<std::size_t>(ex.child - 1)),
                                       reps.vector(s, layer, static_cast<std::size_t>(ex.other - 1)));
    data.features.insert(data.features.end(), row.begin(), row.end());
    data.labels.push_back(ex.is_arc ? 1 : 0);
  }
  return data;
}

}  // namespace synprobe
