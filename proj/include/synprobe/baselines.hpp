#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "synprobe/repstore.hpp"
#include "synprobe/tasks.hpp"

namespace synprobe {

struct MajorityEntry {
  std::string label;
  std::size_t count = 0;

  friend bool operator==(const MajorityEntry&, const MajorityEntry&) = default;
};

/// Per-word most frequent label. Count ties break toward the
/// lexicographically smallest label.
struct MajorityTable {
  std::map<std::string, MajorityEntry, std::less<>> per_word;
  std::string global_majority;

  const std::string& predict(std::string_view token) const;

  friend bool operator==(const MajorityTable&, const MajorityTable&) = default;
};

/// Token strings come from `train.sentences`. Throws DataError on an empty
/// task or an example whose sentence has no token record.
MajorityTable fit_majority(const WordLabelTask& train);

/// Accuracy of the table's predictions on `eval`. Throws DataError on an
/// empty task.
double evaluate_majority(const MajorityTable& table, const WordLabelTask& eval);

/// `token \t label \t count`, sorted by token.
std::string format_majority_table(const MajorityTable& table);

/// [e_i ; mean of e_j over j != i] from layer 0 of `embeddings`; the context
/// block is zero for single-token sentences.
std::vector<float> contextual_features(const LayeredRepresentations& embeddings, std::size_t sentence,
                                       std::size_t token_index);

/// Single-layer representations whose vectors are contextual_features of
/// every token, so the baseline can be probed like any model.
LayeredRepresentations contextualize(const LayeredRepresentations& embeddings);

}  // namespace synprobe
