#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "synprobe/random.hpp"
#include "synprobe/repstore.hpp"
#include "synprobe/treebank.hpp"

namespace synprobe::testing {

inline const std::string kFixtures = SYNPROBE_FIXTURES;

inline const char* kMondayTree =
    "(S (NP (JJ Other) (NN stock) (NNS indexes)) (ADVP (RB also)) "
    "(VP (VBD fell) (PP (IN on) (NP (NNP Monday)))))";

inline ConstituencyTree monday_tree() {
  auto parsed = parse_ptb(std::string("# sent_id = monday\n") + kMondayTree);
  return parsed.sentences.at(0);
}

inline std::string fixture(const std::string& name) { return read_text_file(kFixtures + "/" + name); }

/// Random representations for the given sentences, every layer of width `dim`.
inline LayeredRepresentations random_reps(const std::vector<std::pair<std::string, std::vector<std::string>>>& sents,
                                          std::vector<std::uint32_t> dims, std::uint64_t seed) {
  Rng rng(seed);
  LayeredRepresentations reps;
  reps.layer_dims = std::move(dims);
  for (const auto& [id, tokens] : sents) {
    RepSentence s{id, tokens, {}};
    for (auto d : reps.layer_dims) {
      std::vector<float> v(tokens.size() * d);
      for (auto& x : v) x = static_cast<float>(rng.normal());
      s.layers.push_back(std::move(v));
    }
    reps.sentences.push_back(std::move(s));
  }
  return reps;
}

inline std::string temp_dir(const std::string& name) {
  std::string dir = std::string(::testing::TempDir()) + "synprobe_" + name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace synprobe::testing
