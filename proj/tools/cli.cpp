#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synprobe/baselines.hpp"
#include "synprobe/error.hpp"
#include "synprobe/experiment.hpp"
#include "synprobe/probe.hpp"
#include "synprobe/random.hpp"
#include "synprobe/repstore.hpp"
#include "synprobe/tasks.hpp"
#include "synprobe/toylm.hpp"
#include "synprobe/treebank.hpp"

namespace synprobe::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Global {
  std::uint64_t seed = 1;
  std::string config;
  std::string out_dir = ".";
  bool json = false;
  int jobs = 0;
};

struct Options {
  // inputs
  std::vector<std::string> ptb, conllu, corpus;
  std::string train_ptb, eval_ptb, train_conllu, eval_conllu;
  std::string reps, forward, backward, resume, report, a, b;
  std::string contextualize;
  // task selection
  std::string task;
  int level = -1;
  std::vector<std::string> tasks;
  std::vector<std::size_t> layers;
  std::size_t layer = 0;
  std::string source = "model";
  // language model
  std::string direction = "forward";
  LstmLmConfig lm;
  std::string output = "reps.wrep";
  // probe
  TrainConfig probe;
  bool no_bias = false;
};

// Run state shared by the handlers: hashed inputs, written outputs and the
// machine-readable summary.
class Run {
 public:
  Run(const Global& g, std::string subcommand) : global_(g), subcommand_(std::move(subcommand)) {}

  std::string read(const std::string& path) {
    std::string bytes = read_text_file(path);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    inputs_.push_back({{"path", path}, {"bytes", bytes.size()}, {"fnv1a64", hash}});
    return bytes;
  }

  std::string out_path(const std::string& name) const { return (fs::path(global_.out_dir) / name).string(); }

  void ensure_out_dir() const { fs::create_directories(global_.out_dir); }

  void write(const std::string& name, std::string_view bytes) {
    ensure_out_dir();
    write_text_file(out_path(name), bytes);
    outputs_.push_back(name);
  }

  void record_output(const std::string& name) { outputs_.push_back(name); }

  json& summary() { return summary_; }

  void finish(const json& settings) {
    json manifest;
    manifest["tool"] = "synprobe";
    manifest["version"] = kVersion;
    manifest["subcommand"] = subcommand_;
    manifest["seed"] = global_.seed;
    manifest["jobs"] = global_.jobs;
    manifest["settings"] = settings;
    manifest["inputs"] = inputs_;
    manifest["outputs"] = outputs_;
    ensure_out_dir();
    write_text_file(out_path("manifest.json"), manifest.dump(2) + "\n");
    if (global_.json) {
      json out = summary_;
      out["subcommand"] = subcommand_;
      out["outputs"] = outputs_;
      std::cout << out.dump() << '\n';
    }
  }

 private:
  const Global& global_;
  std::string subcommand_;
  json inputs_ = json::array();
  json outputs_ = json::array();
  json summary_ = json::object();
};

std::vector<ConstituencyTree> load_ptb(Run& run, const std::string& path) {
  auto parsed = parse_ptb(run.read(path), file_stem(path));
  for (const auto& d : parsed.diagnostics) std::cerr << path << ": line " << d.line << ": " << d.message << '\n';
  return std::move(parsed.sentences);
}

std::vector<DependencySentence> load_conllu(Run& run, const std::string& path) {
  auto parsed = parse_conllu(run.read(path), file_stem(path));
  for (const auto& d : parsed.diagnostics) std::cerr << path << ": line " << d.line << ": " << d.message << '\n';
  return std::move(parsed.sentences);
}

// Sentences from plain-text corpora and treebanks, in argument order.
std::vector<TokenizedSentence> load_sentences(Run& run, const Options& o) {
  std::vector<TokenizedSentence> out;
  for (const auto& path : o.corpus) {
    for (auto& s : parse_text_corpus(run.read(path), file_stem(path))) out.push_back(std::move(s));
  }
  for (const auto& path : o.ptb) {
    for (const auto& t : load_ptb(run, path)) out.push_back({t.sentence_id, tokens_of(t)});
  }
  for (const auto& path : o.conllu) {
    for (const auto& s : load_conllu(run, path)) out.push_back({s.sentence_id, s.tokens});
  }
  if (out.empty()) throw DataError("no sentences in the given inputs");
  return out;
}

Direction parse_direction(const std::string& name) {
  if (name == "forward" || name == "fwd") return Direction::kForward;
  if (name == "backward" || name == "bwd") return Direction::kBackward;
  throw UsageError("--direction must be forward or backward, got '" + name + "'");
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

void require(const std::vector<std::pair<std::string, bool>>& keys) {
  std::vector<std::string> missing;
  for (const auto& [name, present] : keys) {
    if (!present) missing.push_back(name);
  }
  if (!missing.empty()) throw UsageError("missing required keys: " + join(missing));
}

TrainConfig probe_config(const Options& o, const Global& g) {
  TrainConfig c = o.probe;
  c.use_bias = !o.no_bias;
  c.seed = g.seed;
  validate(c);
  return c;
}

json probe_json(const TrainConfig& c) {
  return {{"hidden_dim", c.hidden_dim},     {"use_bias", c.use_bias}, {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},     {"max_epochs", c.max_epochs}, {"patience", c.patience},
          {"holdout_fraction", c.holdout_fraction}};
}

// ---- subcommands ----------------------------------------------------------

void cmd_validate(Run& run, const Options& o) {
  if (o.ptb.empty() && o.conllu.empty()) throw UsageError("validate needs --ptb or --conllu");
  std::size_t sentences = 0, tokens = 0, diagnostics = 0;
  json files = json::array();
  for (const auto& path : o.ptb) {
    auto parsed = parse_ptb(run.read(path), file_stem(path));
    std::size_t t = 0;
    for (const auto& tree : parsed.sentences) t += leaves(tree).size();
    for (const auto& d : parsed.diagnostics) std::cerr << path << ": line " << d.line << ": " << d.message << '\n';
    files.push_back({{"path", path}, {"format", "ptb"}, {"sentences", parsed.sentences.size()}, {"tokens", t},
                     {"diagnostics", parsed.diagnostics.size()}});
    sentences += parsed.sentences.size();
    tokens += t;
    diagnostics += parsed.diagnostics.size();
  }
  for (const auto& path : o.conllu) {
    auto parsed = parse_conllu(run.read(path), file_stem(path));
    std::size_t t = 0;
    for (const auto& s : parsed.sentences) t += s.size();
    for (const auto& d : parsed.diagnostics) std::cerr << path << ": line " << d.line << ": " << d.message << '\n';
    files.push_back({{"path", path}, {"format", "conllu"}, {"sentences", parsed.sentences.size()}, {"tokens", t},
                     {"diagnostics", parsed.diagnostics.size()}});
    sentences += parsed.sentences.size();
    tokens += t;
    diagnostics += parsed.diagnostics.size();
  }
  run.summary() = {{"sentences", sentences}, {"tokens", tokens}, {"diagnostics", diagnostics}, {"files", files}};
  std::cerr << sentences << " sentences, " << tokens << " tokens, " << diagnostics << " diagnostics\n";
}

void cmd_extract_tasks(Run& run, const Options& o, const Global& g) {
  std::string task = o.task;
  if (task.empty() && o.level >= 0) {
    if (o.level > 3) throw UsageError("--level must be in 0..3");
    task = std::string(word_task_name(o.level));
  }
  if (task.empty()) throw UsageError("extract-tasks needs --task or --level");
  if (!is_known_task(task)) throw UsageError("unknown task '" + task + "'");
  if (task == kArcTask) {
    if (o.conllu.empty()) throw UsageError("the arc task needs --conllu");
    std::vector<DependencySentence> corpus;
    for (const auto& path : o.conllu) {
      for (auto& s : load_conllu(run, path)) corpus.push_back(std::move(s));
    }
    const ArcPairTask pairs = generate_arc_pairs(corpus, g.seed);
    run.write("arc.tsv", format_arc_task(pairs));
    run.summary() = {{"task", task},
                     {"examples", pairs.examples.size()},
                     {"skipped_root_tokens", pairs.skipped.root_tokens},
                     {"skipped_short_sentence_tokens", pairs.skipped.short_sentence_tokens}};
    return;
  }
  if (o.ptb.empty()) throw UsageError("word tasks need --ptb");
  std::vector<ConstituencyTree> corpus;
  for (const auto& path : o.ptb) {
    for (auto& t : load_ptb(run, path)) corpus.push_back(std::move(t));
  }
  const WordLabelTask words = extract_word_labels(corpus, *word_task_level(task));
  run.write(task + ".tsv", format_word_task(words));
  run.summary() = {{"task", task}, {"examples", words.examples.size()}};
}

void cmd_train_lm(Run& run, const Options& o, const Global& g) {
  const auto corpus = load_sentences(run, o);
  LmTrainingState state;
  if (!o.resume.empty()) {
    state = decode_lm_checkpoint(run.read(o.resume));
    continue_lm_training(state, corpus, o.lm.epochs);
  } else {
    LstmLmConfig config = o.lm;
    config.direction = parse_direction(o.direction);
    config.seed = g.seed;
    state = train_lm(corpus, config);
  }
  const std::string name = "lm_" + std::string(direction_name(state.model.config.direction));
  run.write(name + ".ckpt", encode_lm_checkpoint(state));
  run.write(name + "_perplexity.csv", format_perplexity_log(state.log));
  run.summary() = {{"direction", direction_name(state.model.config.direction)},
                   {"vocabulary", state.model.vocab.size()},
                   {"epochs_done", state.epochs_done},
                   {"perplexity", state.log.empty() ? json(nullptr) : json(state.log.back().perplexity)}};
}

void cmd_dump_reps(Run& run, const Options& o) {
  require({{"forward", !o.forward.empty()}, {"backward", !o.backward.empty()}});
  if (o.output.find('/') != std::string::npos) throw UsageError("--output must be a file name inside --out-dir");
  const auto fwd = decode_lm_checkpoint(run.read(o.forward));
  const auto bwd = decode_lm_checkpoint(run.read(o.backward));
  if (fwd.model.config.direction != Direction::kForward) throw UsageError("--forward checkpoint is a backward model");
  if (bwd.model.config.direction != Direction::kBackward) throw UsageError("--backward checkpoint is a forward model");
  const auto corpus = load_sentences(run, o);
  const LayeredRepresentations reps = dump_representations(fwd.model, bwd.model, corpus);
  run.write(o.output, encode_wrep(reps));
  run.summary() = {{"sentences", reps.sentences.size()}, {"layers", reps.num_layers()}, {"layer_dims", reps.layer_dims}};
}

void cmd_train_probe(Run& run, const Options& o, const Global& g) {
  require({{"reps", !o.reps.empty()}, {"task", !o.task.empty()}});
  if (!is_known_task(o.task)) throw UsageError("unknown task '" + o.task + "'");
  const bool arc = o.task == kArcTask;
  if (arc ? o.train_conllu.empty() : o.train_ptb.empty()) {
    throw UsageError(std::string("missing required keys: ") + (arc ? "train_conllu" : "train_ptb"));
  }
  const TrainConfig config = probe_config(o, g);
  const LayeredRepresentations reps = decode_wrep(run.read(o.reps));
  if (o.layer >= reps.num_layers()) throw UsageError("layer " + std::to_string(o.layer) + " not in representations");

  LabelVocabulary vocab;
  AlignedDataset train_data;
  std::optional<AlignedDataset> eval_data;
  if (arc) {
    const auto train_pairs = generate_arc_pairs(load_conllu(run, o.train_conllu), derive_seed(g.seed, "arc-train"));
    vocab = arc_vocabulary();
    train_data = align(reps, train_pairs, o.layer);
    if (!o.eval_conllu.empty()) {
      eval_data = align(reps, generate_arc_pairs(load_conllu(run, o.eval_conllu), derive_seed(g.seed, "arc-eval")),
                        o.layer);
    }
  } else {
    const int level = *word_task_level(o.task);
    const auto train_task = extract_word_labels(load_ptb(run, o.train_ptb), level);
    vocab = build_vocabulary(train_task);
    train_data = align(reps, train_task, vocab, o.layer);
    if (!o.eval_ptb.empty()) {
      eval_data = align(reps, extract_word_labels(load_ptb(run, o.eval_ptb), level), vocab, o.layer);
    }
  }
  const TrainResult result = train(train_data, vocab, config);
  run.write("probe.bin", encode_probe(result.model));
  run.write("training_log.csv", format_training_log(result.log));
  run.summary() = {{"task", o.task},
                   {"layer", o.layer},
                   {"train_examples", train_data.rows()},
                   {"best_epoch", result.best_epoch},
                   {"best_holdout_accuracy", result.best_holdout_acc},
                   {"probe", probe_json(config)}};
  if (eval_data) run.summary()["eval_accuracy"] = evaluate(result.model, *eval_data);
}

void cmd_baseline(Run& run, const Options& o) {
  if (!o.contextualize.empty()) {
    const LayeredRepresentations ctx = contextualize(decode_wrep(run.read(o.contextualize)));
    run.write("contextual.wrep", encode_wrep(ctx));
    run.summary()["contextual_dim"] = ctx.layer_dims.at(0);
    if (o.task.empty()) return;
  }
  require({{"task", !o.task.empty()}, {"train_ptb", !o.train_ptb.empty()}});
  const auto level = word_task_level(o.task);
  if (!level) throw UsageError("majority baselines apply to word tasks, not '" + o.task + "'");
  const auto train_task = extract_word_labels(load_ptb(run, o.train_ptb), *level);
  const MajorityTable table = fit_majority(train_task);
  run.write("majority_" + o.task + ".tsv", format_majority_table(table));
  run.summary()["task"] = o.task;
  run.summary()["words"] = table.per_word.size();
  run.summary()["global_majority"] = table.global_majority;
  if (!o.eval_ptb.empty()) {
    run.summary()["eval_accuracy"] = evaluate_majority(table, extract_word_labels(load_ptb(run, o.eval_ptb), *level));
  }
}

void cmd_run_experiment(Run& run, const Options& o, const Global& g) {
  require({{"reps", !o.reps.empty()}, {"tasks", !o.tasks.empty()}, {"layers", !o.layers.empty()}});
  bool word = false, arc = false;
  for (const auto& t : o.tasks) {
    if (!is_known_task(t)) throw UsageError("unknown task '" + t + "'");
    (t == kArcTask ? arc : word) = true;
  }
  require({{"train_ptb", !word || !o.train_ptb.empty()},
           {"eval_ptb", !word || !o.eval_ptb.empty()},
           {"train_conllu", !arc || !o.train_conllu.empty()},
           {"eval_conllu", !arc || !o.eval_conllu.empty()}});

  ExperimentPlan plan;
  plan.source = o.source;
  plan.tasks = o.tasks;
  plan.layers = o.layers;
  plan.train = probe_config(o, g);
  plan.seed = g.seed;
  plan.jobs = g.jobs;

  const LayeredRepresentations reps = decode_wrep(run.read(o.reps));
  ExperimentData data;
  data.reps = &reps;
  if (word) {
    data.constituency_train = load_ptb(run, o.train_ptb);
    data.constituency_eval = load_ptb(run, o.eval_ptb);
  }
  if (arc) {
    data.dependency_train = load_conllu(run, o.train_conllu);
    data.dependency_eval = load_conllu(run, o.eval_conllu);
  }
  const ExperimentReport report = run_experiment(plan, data);
  run.write("report.json", format_report_json(report));
  for (const auto& path : emit_report_files(report, run.out_path(""))) {
    run.record_output(fs::path(path).filename().string());
  }
  run.summary() = {{"cells", report.cells.size()}, {"best_layer", report.best_layer}};
  if (report.hierarchy_holds) run.summary()["hierarchy_holds"] = *report.hierarchy_holds;
}

ExperimentReport load_report(Run& run, const std::string& path) {
  json j;
  try {
    j = json::parse(run.read(path));
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  ExperimentReport r = report_from_json(j);
  finalize(r);
  return r;
}

void cmd_report(Run& run, const Options& o) {
  require({{"report", !o.report.empty()}});
  const ExperimentReport report = load_report(run, o.report);
  run.ensure_out_dir();
  for (const auto& path : emit_report_files(report, run.out_path(""))) {
    run.record_output(fs::path(path).filename().string());
  }
  run.summary() = {{"cells", report.cells.size()}, {"best_layer", report.best_layer}};
}

void cmd_compare(Run& run, const Options& o) {
  require({{"a", !o.a.empty()}, {"b", !o.b.empty()}});
  const std::string csv = compare_reports(load_report(run, o.a), load_report(run, o.b));
  run.write("comparison.csv", csv);
}

// ---- option wiring --------------------------------------------------------

void add_probe_options(CLI::App* sub, Options& o) {
  sub->add_option("--hidden-dim", o.probe.hidden_dim, "Probe hidden units")->capture_default_str();
  sub->add_option("--learning-rate", o.probe.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--batch-size", o.probe.batch_size, "Examples per update")->capture_default_str();
  sub->add_option("--max-epochs", o.probe.max_epochs, "Epoch limit")->capture_default_str();
  sub->add_option("--patience", o.probe.patience, "Epochs without holdout improvement before stopping")
      ->capture_default_str();
  sub->add_option("--holdout-fraction", o.probe.holdout_fraction, "Share of training rows used for early stopping")
      ->capture_default_str();
  sub->add_flag("--no-bias", o.no_bias, "Train without bias terms");
}

// Applies `key = value` entries from the config file to options that were
// not given on the command line.
void apply_config(const std::string& path, CLI::App& app, CLI::App& sub) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::ParseError& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
  std::vector<std::string> unknown;
  for (const auto& item : items) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub.get_name())) continue;
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string flag = "--" + item.name;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option(flag);
    } catch (const CLI::OptionNotFound&) {
      try {
        opt = app.get_option(flag);
      } catch (const CLI::OptionNotFound&) {
      }
    }
    if (!opt || flag == "--config") {
      unknown.push_back(item.name);
      continue;
    }
    if (opt->count() > 0) continue;  // command line wins
    std::vector<std::string> values = item.inputs;
    if (opt->get_expected_max() == 0) {
      // Flags accept true/false.
      if (values.size() != 1) throw UsageError("config key '" + item.name + "' expects true or false");
      if (values[0] == "false" || values[0] == "0") continue;
      values = {"true"};
    }
    opt->add_result(values);
    opt->run_callback();
  }
  if (!unknown.empty()) throw UsageError("unknown config keys for " + sub.get_name() + ": " + join(unknown));
}

json settings_of(const CLI::App& app, const CLI::App& sub) {
  json settings = json::object();
  for (const CLI::App* a : {&app, &sub}) {
    for (const CLI::Option* opt : a->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string key = opt->get_lnames().front();
      if (key == "help" || key == "version") continue;
      const auto& results = opt->results();
      if (results.empty()) {
        if (!opt->get_default_str().empty()) settings[key] = opt->get_default_str();
      } else {
        settings[key] = results.size() == 1 ? json(results[0]) : json(results);
      }
    }
  }
  return settings;
}

int exit_code(ErrorKind kind) { return static_cast<int>(kind); }

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Probe layered representations for syntax", "synprobe"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Global g;
  Options o;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--config", g.config, "key = value settings file");
  app.add_option("--out-dir", g.out_dir, "Directory for every file the run writes")->capture_default_str();
  app.add_flag("--json", g.json, "Print a JSON run summary to standard output");
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Parse treebanks and report counts and problems");
  validate_cmd->add_option("--ptb", o.ptb, "Bracketed treebank file");
  validate_cmd->add_option("--conllu", o.conllu, "CoNLL-U file");

  auto* extract_cmd = app.add_subcommand("extract-tasks", "Write word-label or arc-pair examples");
  extract_cmd->add_option("--ptb", o.ptb, "Bracketed treebank file");
  extract_cmd->add_option("--conllu", o.conllu, "CoNLL-U file");
  extract_cmd->add_option("--level", o.level, "Ancestor level: 0 pos, 1 parent, 2 grandparent, 3 great-grandparent");
  extract_cmd->add_option("--task", o.task, "pos, parent, grandparent, greatgrandparent or arc");

  auto* lm_cmd = app.add_subcommand("train-lm", "Train a forward or backward LSTM language model");
  lm_cmd->add_option("--corpus", o.corpus, "Text file, one tokenized sentence per line");
  lm_cmd->add_option("--ptb", o.ptb, "Bracketed treebank used as text");
  lm_cmd->add_option("--direction", o.direction, "forward or backward")->capture_default_str();
  lm_cmd->add_option("--num-layers", o.lm.num_layers, "LSTM layers")->capture_default_str();
  lm_cmd->add_option("--dim", o.lm.dim, "Embedding and hidden size")->capture_default_str();
  lm_cmd->add_option("--epochs", o.lm.epochs, "Epochs (additional epochs with --resume)")->capture_default_str();
  lm_cmd->add_option("--learning-rate", o.lm.learning_rate, "Adam learning rate")->capture_default_str();
  lm_cmd->add_option("--batch-size", o.lm.batch_size, "Sentences per update")->capture_default_str();
  lm_cmd->add_option("--min-count", o.lm.min_count, "Rarer words map to <UNK>")->capture_default_str();
  lm_cmd->add_option("--max-sentence-length", o.lm.max_sentence_length, "Longer sentences are skipped in training")
      ->capture_default_str();
  lm_cmd->add_option("--resume", o.resume, "Checkpoint to continue from");

  auto* dump_cmd = app.add_subcommand("dump-reps", "Write per-layer representations of a corpus");
  dump_cmd->add_option("--forward", o.forward, "Forward model checkpoint");
  dump_cmd->add_option("--backward", o.backward, "Backward model checkpoint");
  dump_cmd->add_option("--corpus", o.corpus, "Text file, one tokenized sentence per line");
  dump_cmd->add_option("--ptb", o.ptb, "Bracketed treebank");
  dump_cmd->add_option("--conllu", o.conllu, "CoNLL-U file");
  dump_cmd->add_option("--output", o.output, "Output file name")->capture_default_str();

  auto* probe_cmd = app.add_subcommand("train-probe", "Train one probe on one layer");
  probe_cmd->add_option("--reps", o.reps, "Representation file");
  probe_cmd->add_option("--task", o.task, "Task name");
  probe_cmd->add_option("--layer", o.layer, "Layer index")->capture_default_str();
  probe_cmd->add_option("--train-ptb", o.train_ptb, "Training treebank (word tasks)");
  probe_cmd->add_option("--eval-ptb", o.eval_ptb, "Evaluation treebank (word tasks)");
  probe_cmd->add_option("--train-conllu", o.train_conllu, "Training dependencies (arc task)");
  probe_cmd->add_option("--eval-conllu", o.eval_conllu, "Evaluation dependencies (arc task)");
  add_probe_options(probe_cmd, o);

  auto* baseline_cmd = app.add_subcommand("baseline", "Per-word majority baseline; optional contextual embeddings");
  baseline_cmd->add_option("--task", o.task, "Word task name");
  baseline_cmd->add_option("--train-ptb", o.train_ptb, "Training treebank");
  baseline_cmd->add_option("--eval-ptb", o.eval_ptb, "Evaluation treebank");
  baseline_cmd->add_option("--contextualize", o.contextualize,
                           "Representation file whose layer 0 is turned into [word; mean of other words]");

  auto* exp_cmd = app.add_subcommand("run-experiment", "Probe every (task, layer) cell and write the report");
  exp_cmd->add_option("--reps", o.reps, "Representation file");
  exp_cmd->add_option("--train-ptb", o.train_ptb, "Training treebank");
  exp_cmd->add_option("--eval-ptb", o.eval_ptb, "Evaluation treebank");
  exp_cmd->add_option("--train-conllu", o.train_conllu, "Training dependencies");
  exp_cmd->add_option("--eval-conllu", o.eval_conllu, "Evaluation dependencies");
  exp_cmd->add_option("--tasks", o.tasks, "Comma-separated task names")->delimiter(',');
  exp_cmd->add_option("--layers", o.layers, "Comma-separated layer indices")->delimiter(',');
  exp_cmd->add_option("--source", o.source, "Row label in the tables")->capture_default_str();
  add_probe_options(exp_cmd, o);

  auto* report_cmd = app.add_subcommand("report", "Regenerate tables and curves from a report");
  report_cmd->add_option("--report", o.report, "report.json");

  auto* compare_cmd = app.add_subcommand("compare", "Per-cell accuracy differences between two reports");
  compare_cmd->add_option("--a", o.a, "First report.json");
  compare_cmd->add_option("--b", o.b, "Second report.json");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::kUsage);
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!g.config.empty()) apply_config(g.config, app, *sub);
    if (g.jobs < 0) throw UsageError("--jobs must be non-negative");
    Run run(g, sub->get_name());
    const std::string name = sub->get_name();
    if (name == "validate") {
      cmd_validate(run, o);
    } else if (name == "extract-tasks") {
      cmd_extract_tasks(run, o, g);
    } else if (name == "train-lm") {
      cmd_train_lm(run, o, g);
    } else if (name == "dump-reps") {
      cmd_dump_reps(run, o);
    } else if (name == "train-probe") {
      cmd_train_probe(run, o, g);
    } else if (name == "baseline") {
      cmd_baseline(run, o);
    } else if (name == "run-experiment") {
      cmd_run_experiment(run, o, g);
    } else if (name == "report") {
      cmd_report(run, o);
    } else {
      cmd_compare(run, o);
    }
    run.finish(settings_of(app, *sub));
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::kData);
  }
}

}  // namespace synprobe::cli
