#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "synprobe/error.hpp"
#include "synprobe/experiment.hpp"
#include "synprobe/synth.hpp"
#include "test_util.hpp"

using namespace synprobe;

namespace {

struct Corpus {
  std::vector<ConstituencyTree> train_trees, eval_trees;
  std::vector<DependencySentence> train_deps, eval_deps;
};

Corpus synth_corpus(std::size_t train, std::size_t eval) {
  Corpus c;
  for (auto& s : generate_synthetic(train, 31, "tr")) {
    c.train_trees.push_back(s.tree);
    c.train_deps.push_back(s.dependencies);
  }
  for (auto& s : generate_synthetic(eval, 32, "ev")) {
    c.eval_trees.push_back(s.tree);
    c.eval_deps.push_back(s.dependencies);
  }
  return c;
}

LayeredRepresentations noise_reps(const Corpus& c, std::vector<std::uint32_t> dims, std::uint64_t seed) {
  std::vector<std::pair<std::string, std::vector<std::string>>> sents;
  for (const auto* trees : {&c.train_trees, &c.eval_trees}) {
    for (const auto& t : *trees) sents.emplace_back(t.sentence_id, tokens_of(t));
  }
  return synprobe::testing::random_reps(sents, std::move(dims), seed);
}

ExperimentData data_for(const Corpus& c, const LayeredRepresentations& reps) {
  ExperimentData d;
  d.reps = &reps;
  d.constituency_train = c.train_trees;
  d.constituency_eval = c.eval_trees;
  d.dependency_train = c.train_deps;
  d.dependency_eval = c.eval_deps;
  return d;
}

TrainConfig quick_probe() {
  TrainConfig t;
  t.hidden_dim = 32;
  t.max_epochs = 6;
  t.patience = 2;
  return t;
}

ExperimentReport canned(std::vector<std::string> tasks, std::vector<std::size_t> layers,
                        std::vector<std::vector<double>> acc, std::vector<double> baselines) {
  ExperimentReport r;
  r.source = "LM";
  r.seed = 1;
  r.tasks = tasks;
  r.layers = layers;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    r.baselines[tasks[t]] = baselines[t];
    for (std::size_t l = 0; l < layers.size(); ++l) r.cells.push_back({tasks[t], layers[l], acc[t][l], 1});
  }
  finalize(r);
  return r;
}

std::size_t count(const std::string& text, const std::string& pattern) {
  std::size_t n = 0;
  for (std::size_t at = text.find(pattern); at != std::string::npos; at = text.find(pattern, at + 1)) ++n;
  return n;
}

}  // namespace

TEST(Experiment, ArityFourWordTasksFiveLayers) {
  const auto c = synth_corpus(40, 30);
  const auto reps = noise_reps(c, {4, 4, 4, 4, 4}, 1);
  ExperimentPlan plan;
  plan.tasks = {"pos", "parent", "grandparent", "greatgrandparent"};
  plan.layers = {0, 1, 2, 3, 4};
  plan.train = quick_probe();
  plan.train.max_epochs = 1;
  const auto r = run_experiment(plan, data_for(c, reps));
  EXPECT_EQ(r.cells.size(), 20u);
  EXPECT_EQ(r.baselines.size(), 4u);
  EXPECT_TRUE(r.hierarchy_holds.has_value());
  for (const auto& cell : r.cells) {
    EXPECT_GE(cell.accuracy, 0.0);
    EXPECT_LE(cell.accuracy, 1.0);
  }
}

TEST(Experiment, NoiseStaysAtMajorityClassRate) {
  const auto c = synth_corpus(300, 200);
  const auto reps = noise_reps(c, {8}, 2);
  ExperimentPlan plan;
  plan.tasks = {"pos", "parent", "grandparent", "greatgrandparent"};
  plan.layers = {0};
  plan.train = quick_probe();
  const auto r = run_experiment(plan, data_for(c, reps));
  for (int level = 0; level < 4; ++level) {
    // most frequent training label, scored on the evaluation split
    const auto tr = extract_word_labels(c.train_trees, level);
    const auto ev = extract_word_labels(c.eval_trees, level);
    std::map<std::string, std::size_t> counts;
    for (const auto& ex : tr.examples) ++counts[ex.label];
    const auto top = std::max_element(counts.begin(), counts.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
    std::size_t hits = 0;
    for (const auto& ex : ev.examples) hits += ex.label == top->first;
    const double rate = static_cast<double>(hits) / static_cast<double>(ev.examples.size());
    EXPECT_NEAR(r.accuracy(word_task_name(level), 0), rate, 0.05) << word_task_name(level);
  }
}

TEST(Experiment, OneHotParentIsRecovered) {
  const auto c = synth_corpus(200, 100);
  const auto train_task = extract_word_labels(c.train_trees, 1);
  const auto vocab = build_vocabulary(train_task);
  auto reps = noise_reps(c, {4, static_cast<std::uint32_t>(vocab.size())}, 3);
  std::map<std::string, std::size_t> index;
  for (std::size_t s = 0; s < reps.sentences.size(); ++s) index[reps.sentences[s].sentence_id] = s;
  for (const auto* trees : {&c.train_trees, &c.eval_trees}) {
    for (const auto& ex : extract_word_labels(*trees, 1).examples) {
      auto& layer = reps.sentences[index.at(ex.sentence_id)].layers[1];
      const std::size_t d = vocab.size();
      std::fill_n(layer.begin() + static_cast<std::ptrdiff_t>(ex.token_index * d), d, 0.0f);
      const int k = vocab.index_of(ex.label);
      if (k >= 0) layer[static_cast<std::size_t>(ex.token_index) * d + static_cast<std::size_t>(k)] = 1.0f;
    }
  }
  ExperimentPlan plan;
  plan.tasks = {"parent"};
  plan.layers = {1};
  plan.train = quick_probe();
  plan.train.max_epochs = 40;
  plan.train.learning_rate = 0.01;
  plan.train.patience = 10;
  const auto r = run_experiment(plan, data_for(c, reps));
  EXPECT_GE(r.accuracy("parent", 1), 0.99);
}

TEST(Experiment, ReportIndependentOfThreadCount) {
  const auto c = synth_corpus(60, 40);
  const auto reps = noise_reps(c, {4, 6, 4}, 4);
  ExperimentPlan plan;
  plan.tasks = {"pos", "parent", "arc"};
  plan.layers = {0, 1, 2};
  plan.train = quick_probe();
  plan.jobs = 1;
  const auto serial = run_experiment(plan, data_for(c, reps));
  plan.jobs = 3;
  const auto threaded = run_experiment(plan, data_for(c, reps));
  EXPECT_EQ(format_report_json(serial), format_report_json(threaded));
  const auto again = run_experiment(plan, data_for(c, reps));
  EXPECT_EQ(format_report_json(threaded), format_report_json(again));
  EXPECT_EQ(serial.baselines.at("arc"), 0.5);
}

TEST(Experiment, PlanValidation) {
  const auto c = synth_corpus(10, 10);
  const auto reps = noise_reps(c, {4, 4}, 5);
  ExperimentPlan plan;
  plan.tasks = {"parent"};
  plan.layers = {2};
  EXPECT_THROW(run_experiment(plan, data_for(c, reps)), UsageError);
  plan.layers = {0};
  plan.tasks = {"chunk"};
  EXPECT_THROW(run_experiment(plan, data_for(c, reps)), UsageError);
  plan.tasks = {"arc"};
  auto d = data_for(c, reps);
  d.dependency_eval.clear();
  EXPECT_THROW(run_experiment(plan, d), UsageError);
}

TEST(Experiment, FailureNamesTheCell) {
  const auto c = synth_corpus(10, 10);
  auto reps = noise_reps(c, {4, 4}, 6);
  reps.sentences.back().tokens.back() += "x";  // breaks alignment of one eval sentence
  ExperimentPlan plan;
  plan.tasks = {"pos"};
  plan.layers = {0, 1};
  plan.train = quick_probe();
  try {
    run_experiment(plan, data_for(c, reps));
    FAIL() << "expected failure";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cell (pos, layer 0)"), std::string::npos) << e.what();
  }
}

TEST(BestLayer, ArgmaxWithShallowTies) {
  auto r = canned({"parent"}, {0, 1, 2, 3}, {{0.5, 0.7, 0.7, 0.6}}, {0.4});
  EXPECT_EQ(best_layer(r, "parent"), 1u);
  auto mono = canned({"pos"}, {0, 1, 2}, {{0.1, 0.2, 0.3}}, {0.0});
  EXPECT_EQ(best_layer(mono, "pos"), 2u);
  EXPECT_NE(render_layer_curves_svg(mono).find("data-task=\"pos\""), std::string::npos);
}

TEST(BestLayer, HierarchyStatistic) {
  auto r = canned({"pos", "parent", "grandparent", "greatgrandparent"}, {0, 1},
                  {{0.9, 0.8}, {0.5, 0.6}, {0.5, 0.6}, {0.5, 0.6}}, {0, 0, 0, 0});
  EXPECT_EQ(r.hierarchy_holds, true);
  r = canned({"pos", "parent", "grandparent", "greatgrandparent"}, {0, 1},
             {{0.5, 0.8}, {0.9, 0.6}, {0.5, 0.6}, {0.5, 0.6}}, {0, 0, 0, 0});
  EXPECT_EQ(r.hierarchy_holds, false);
  r = canned({"pos"}, {0}, {{0.5}}, {0});
  EXPECT_FALSE(r.hierarchy_holds.has_value());
}

TEST(Tables, LmParentRowLayout) {
  const auto r = canned({"parent"}, {0, 1, 2, 3, 4}, {{0.8126, 0.8724, 0.9232, 0.9137, 0.9000}}, {0.8190});
  EXPECT_EQ(format_word_table(r),
            "source\ttask\tMFT\t0\t1\t2\t3\t4\n"
            "LM\tparent\t0.8190\t0.8126\t0.8724\t0.9232*\t0.9137\t0.9000\n");
  EXPECT_EQ(format_arc_table(r), "");
}

TEST(Tables, ArcLayout) {
  const auto r = canned({"arc"}, {0, 1, 2}, {{0.6, 0.75, 0.7}}, {0.5});
  EXPECT_EQ(format_arc_table(r), "source\ttask\tbaseline\tL0\tL1\tL2\nLM\tarc\t0.5000\t0.6000\t0.7500*\t0.7000\n");
  EXPECT_EQ(format_word_table(r), "");
}

TEST(Tables, SingleTaskOneRowAndStableBytes) {
  const auto r = canned({"pos"}, {0, 1}, {{0.123456, 0.5}}, {0.25});
  const auto table = format_word_table(r);
  EXPECT_EQ(count(table, "\n"), 2u);
  const auto back = report_from_json(to_json(r));
  EXPECT_EQ(format_word_table(back), table);
}

TEST(Curves, CsvRows) {
  const auto r = canned({"pos", "parent"}, {0, 1, 2}, {{0.1, 0.2, 0.3}, {0.3, 0.2, 0.1}}, {0.5, 0.5});
  const auto csv = format_curves_csv(r);
  EXPECT_EQ(count(csv, "\n"), 1u + 6u);
  EXPECT_NE(csv.find("pos,2,0.3000,0.5000,1\n"), std::string::npos);
  EXPECT_NE(csv.find("parent,0,0.3000,0.5000,1\n"), std::string::npos);
}

TEST(Curves, SvgElementCounts) {
  const auto r = canned({"pos", "parent"}, {0, 1, 2}, {{0.1, 0.2, 0.3}, {0.3, 0.2, 0.1}}, {0.5, 0.4});
  const auto svg = render_layer_curves_svg(r);
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  EXPECT_EQ(count(svg, "stroke-dasharray"), 2u);
  EXPECT_EQ(count(svg, "class=\"star\""), 2u);
  EXPECT_EQ(count(svg, "<polygon"), 2u);
  EXPECT_EQ(svg.find("<script"), std::string::npos);
}

TEST(Compare, Deltas) {
  const auto a = canned({"pos", "arc"}, {0, 1}, {{0.5, 0.6}, {0.7, 0.8}}, {0.4, 0.5});
  const auto zero = compare_reports(a, a);
  EXPECT_EQ(count(zero, "\n"), 5u);
  EXPECT_EQ(count(zero, ",0.0000\n"), 4u);
  auto b = a;
  b.cells[3].accuracy = 0.9;
  const auto one = compare_reports(a, b);
  EXPECT_EQ(count(one, ",0.0000\n"), 3u);
  EXPECT_NE(one.find("arc,1,0.8000,0.9000,0.1000\n"), std::string::npos);
  const auto disjoint = canned({"pos", "arc"}, {2, 3}, {{0.5, 0.6}, {0.7, 0.8}}, {0.4, 0.5});
  EXPECT_THROW(compare_reports(a, disjoint), DataError);
  const auto other_tasks = canned({"pos", "parent"}, {0, 1}, {{0.5, 0.6}, {0.7, 0.8}}, {0.4, 0.5});
  EXPECT_THROW(compare_reports(a, other_tasks), DataError);
}

TEST(ReportJson, RoundTrip) {
  auto r = canned({"pos", "arc"}, {0, 1}, {{0.5, 0.6}, {0.7, 0.8}}, {0.4, 0.5});
  r.train_examples = {{"pos", 10}, {"arc", 8}};
  r.eval_examples = {{"pos", 5}, {"arc", 4}};
  const auto back = report_from_json(to_json(r));
  EXPECT_EQ(back, r);
  EXPECT_THROW(report_from_json(nlohmann::json::object()), DataError);
}

TEST(ReportFiles, Emitted) {
  const auto dir = synprobe::testing::temp_dir("report");
  const auto r = canned({"pos", "arc"}, {0, 1}, {{0.5, 0.6}, {0.7, 0.8}}, {0.4, 0.5});
  const auto files = emit_report_files(r, dir);
  EXPECT_EQ(files.size(), 4u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f));
}
