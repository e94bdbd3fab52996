#include "synprobe/baselines.hpp"

#include <unordered_map>

#include "synprobe/error.hpp"

namespace synprobe {
namespace {

// Highest count wins; equal counts go to the smaller label.
bool better(std::size_t count, const std::string& label, std::size_t best_count, const std::string& best_label) {
  return count > best_count || (count == best_count && label < best_label);
}

const std::string& token_at(const WordLabelTask& task, const WordExample& ex) {
  auto it = task.sentences.find(ex.sentence_id);
  if (it == task.sentences.end()) {
    throw DataError("sentence '" + ex.sentence_id + "' has no token record in the task");
  }
  if (ex.token_index < 0 || static_cast<std::size_t>(ex.token_index) >= it->second.size()) {
    throw DataError("sentence '" + ex.sentence_id + "': token index out of range");
  }
  return it->second[static_cast<std::size_t>(ex.token_index)];
}

}  // namespace

const std::string& MajorityTable::predict(std::string_view token) const {
  auto it = per_word.find(token);
  return it == per_word.end() ? global_majority : it->second.label;
}

MajorityTable fit_majority(const WordLabelTask& train) {
  if (train.examples.empty()) throw DataError("cannot fit a majority table on an empty task");
  std::map<std::string, std::map<std::string, std::size_t>, std::less<>> counts;
  std::map<std::string, std::size_t> totals;
  for (const auto& ex : train.examples) {
    ++counts[token_at(train, ex)][ex.label];
    ++totals[ex.label];
  }
  MajorityTable table;
  for (const auto& [token, by_label] : counts) {
    MajorityEntry best;
    for (const auto& [label, count] : by_label) {
      if (best.label.empty() || better(count, label, best.count, best.label)) best = {label, count};
    }
    table.per_word.emplace(token, std::move(best));
  }
  std::size_t best_count = 0;
  for (const auto& [label, count] : totals) {
    if (table.global_majority.empty() || better(count, label, best_count, table.global_majority)) {
      table.global_majority = label;
      best_count = count;
    }
  }
  return table;
}

double evaluate_majority(const MajorityTable& table, const WordLabelTask& eval) {
  if (eval.examples.empty()) throw DataError("cannot evaluate on an empty task");
  std::size_t correct = 0;
  for (const auto& ex : eval.examples) {
    if (table.predict(token_at(eval, ex)) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval.examples.size());
}

std::string format_majority_table(const MajorityTable& table) {
  std::string out;
  for (const auto& [token, entry] : table.per_word) {
    out += token + '\t' + entry.label + '\t' + std::to_string(entry.count) + '\n';
  }
  return out;
}

std::vector<float> contextual_features(const LayeredRepresentations& embeddings, std::size_t sentence,
                                       std::size_t token_index) {
  const std::size_t d = embeddings.layer_dims.at(0);
  const auto& s = embeddings.sentences.at(sentence);
  const std::size_t n = s.tokens.size();
  if (token_index >= n) throw UsageError("token index out of range");
  std::vector<float> out(2 * d, 0.0f);
  auto self = embeddings.vector(sentence, 0, token_index);
  std::copy(self.begin(), self.end(), out.begin());
  if (n > 1) {
    std::vector<double> sum(d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == token_index) continue;
      auto v = embeddings.vector(sentence, 0, j);
      for (std::size_t k = 0; k < d; ++k) sum[k] += v[k];
    }
    for (std::size_t k = 0; k < d; ++k) out[d + k] = static_cast<float>(sum[k] / static_cast<double>(n - 1));
  }
  return out;
}

LayeredRepresentations contextualize(const LayeredRepresentations& embeddings) {
  if (embeddings.layer_dims.empty()) throw DataError("representations have no layers");
  LayeredRepresentations out;
  out.layer_dims = {2 * embeddings.layer_dims[0]};
  out.sentences.reserve(embeddings.sentences.size());
  for (std::size_t s = 0; s < embeddings.sentences.size(); ++s) {
    const auto& src = embeddings.sentences[s];
    RepSentence dst{src.sentence_id, src.tokens, std::vector<std::vector<float>>(1)};
    dst.layers[0].reserve(src.tokens.size() * out.layer_dims[0]);
    for (std::size_t t = 0; t < src.tokens.size(); ++t) {
      const auto row = contextual_features(embeddings, s, t);
      dst.layers[0].insert(dst.layers[0].end(), row.begin(), row.end());
    }
    out.sentences.push_back(std::move(dst));
  }
  return out;
}

}  // namespace synprobe
