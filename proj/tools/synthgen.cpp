// Writes a synthetic treebank in three splits: text for language-model
// training, plus bracketed trees and CoNLL-U for probe training and evaluation.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "synprobe/error.hpp"
#include "synprobe/random.hpp"
#include "synprobe/synth.hpp"

namespace {

using namespace synprobe;

void write_split(const std::filesystem::path& dir, const std::string& name, const std::vector<SynthSentence>& corpus) {
  std::string text, ptb, conllu;
  for (const auto& s : corpus) {
    const auto tokens = tokens_of(s.tree);
    for (std::size_t i = 0; i < tokens.size(); ++i) text += (i ? " " : "") + tokens[i];
    text += '\n';
    ptb += "# sent_id = " + s.tree.sentence_id + "\n" + to_ptb(s.tree) + "\n";
    conllu += to_conllu(s.dependencies);
  }
  write_text_file((dir / (name + ".txt")).string(), text);
  write_text_file((dir / (name + ".mrg")).string(), ptb);
  write_text_file((dir / (name + ".conllu")).string(), conllu);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic treebank", "synprobe-synth"};
  std::uint64_t seed = 1;
  std::size_t lm = 5000, train = 1500, eval = 1000;
  std::string out_dir = ".";
  SynthConfig config;
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--lm-sentences", lm)->capture_default_str();
  app.add_option("--train-sentences", train)->capture_default_str();
  app.add_option("--eval-sentences", eval)->capture_default_str();
  app.add_option("--max-depth", config.max_depth)->capture_default_str();
  app.add_option("--max-tokens", config.max_tokens)->capture_default_str();
  app.add_option("--out-dir", out_dir)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    std::filesystem::create_directories(out_dir);
    write_split(out_dir, "lm", generate_synthetic(lm, derive_seed(seed, "lm"), "lm", config));
    write_split(out_dir, "train", generate_synthetic(train, derive_seed(seed, "train"), "train", config));
    write_split(out_dir, "eval", generate_synthetic(eval, derive_seed(seed, "eval"), "eval", config));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  }
  return 0;
}
