#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synprobe/tasks.hpp"

namespace synprobe {

/// Per-layer vectors of one sentence. `layers[l]` holds T * dims[l] floats,
/// token-major.
struct RepSentence {
  std::string sentence_id;
  std::vector<std::string> tokens;
  std::vector<std::vector<float>> layers;

  friend bool operator==(const RepSentence&, const RepSentence&) = default;
};

/// Layer 0 is the model's input embedding layer.
struct LayeredRepresentations {
  std::vector<std::uint32_t> layer_dims;
  std::vector<RepSentence> sentences;

  std::size_t num_layers() const noexcept { return layer_dims.size(); }

  std::span<const float> vector(std::size_t sentence, std::size_t layer, std::size_t token) const {
    const std::size_t d = layer_dims[layer];
    return std::span<const float>(sentences[sentence].layers[layer]).subspan(token * d, d);
  }

  friend bool operator==(const LayeredRepresentations&, const LayeredRepresentations&) = default;
};

/// Throws DataError describing the first violated invariant: empty or zero
/// dims, per-layer buffer sizes, non-finite values, duplicate ids, strings
/// too long for the u16 length fields.
void validate(const LayeredRepresentations& reps);

/// WREP1, little-endian:
///   "WREP1\n"; u32 L; L x u32 dims; u32 sentence count;
///   per sentence: u16 id length, id bytes, u32 T, T x (u16 length, token
///   bytes), then for each layer l: T * d_l f32, token-major.
std::string encode_wrep(const LayeredRepresentations& reps);
/// Throws FormatError naming the byte offset of the problem.
LayeredRepresentations decode_wrep(std::string_view bytes);

/// Exact encoded size of `reps`.
std::size_t wrep_size(const LayeredRepresentations& reps);

void write_wrep(const std::string& path, const LayeredRepresentations& reps);
LayeredRepresentations read_wrep(const std::string& path);

/// Merges several files' sentences; dims must agree and ids stay unique.
LayeredRepresentations merge_representations(std::vector<LayeredRepresentations> parts);

/// Layer-wise concatenation, forward half first. Throws AlignmentError on any
/// sentence, token or layer-count mismatch.
LayeredRepresentations concat_directions(const LayeredRepresentations& forward,
                                         const LayeredRepresentations& backward);

/// Feature rows aligned with a task, in task example order.
struct AlignedDataset {
  std::size_t input_dim = 0;
  std::size_t layer = 0;
  std::vector<float> features;  // rows() x input_dim
  std::vector<int> labels;      // LabelVocabulary::kUnknown for unseen labels

  std::size_t rows() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(features).subspan(i * input_dim, input_dim);
  }
};

/// Throws AlignmentError for a missing sentence or any token mismatch.
AlignedDataset align(const LayeredRepresentations& reps, const WordLabelTask& task,
                     const LabelVocabulary& vocab, std::size_t layer);
/// Rows are make_arc_features(child, other); labels index arc_vocabulary().
AlignedDataset align(const LayeredRepresentations& reps, const ArcPairTask& task,
                     std::size_t layer);

}  // namespace synprobe
