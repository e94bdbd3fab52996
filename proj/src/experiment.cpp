#include "synprobe/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "synprobe/baselines.hpp"
#include "synprobe/error.hpp"
#include "synprobe/random.hpp"
#include "synprobe/tasks.hpp"

namespace synprobe {
namespace {

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

bool is_word_task(std::string_view task) { return word_task_level(task).has_value(); }

// Train/eval material for one task, shared by all its layer cells.
struct PreparedTask {
  std::string name;
  std::optional<WordLabelTask> word_train, word_eval;
  std::optional<ArcPairTask> arc_train, arc_eval;
  LabelVocabulary vocab;
  double baseline = 0.0;
};

PreparedTask prepare(const std::string& name, const ExperimentPlan& plan, const ExperimentData& data) {
  PreparedTask t;
  t.name = name;
  if (auto level = word_task_level(name)) {
    t.word_train = extract_word_labels(data.constituency_train, *level);
    t.word_eval = extract_word_labels(data.constituency_eval, *level);
    if (t.word_train->examples.empty()) throw DataError("task " + name + ": training split has no examples");
    if (t.word_eval->examples.empty()) throw DataError("task " + name + ": evaluation split has no examples");
    t.vocab = build_vocabulary(*t.word_train);
    t.baseline = evaluate_majority(fit_majority(*t.word_train), *t.word_eval);
  } else {
    t.arc_train = generate_arc_pairs(data.dependency_train, derive_seed(plan.seed, "arc-train"));
    t.arc_eval = generate_arc_pairs(data.dependency_eval, derive_seed(plan.seed, "arc-eval"));
    if (t.arc_train->examples.empty()) throw DataError("task arc: training split has no eligible tokens");
    if (t.arc_eval->examples.empty()) throw DataError("task arc: evaluation split has no eligible tokens");
    t.vocab = arc_vocabulary();
    t.baseline = kArcBaseline;
  }
  return t;
}

AlignedDataset aligned(const PreparedTask& t, const LayeredRepresentations& reps, bool train, std::size_t layer) {
  if (t.word_train) return align(reps, train ? *t.word_train : *t.word_eval, t.vocab, layer);
  return align(reps, train ? *t.arc_train : *t.arc_eval, layer);
}

}  // namespace

bool is_known_task(std::string_view task) { return is_word_task(task) || task == kArcTask; }

double ExperimentReport::accuracy(std::string_view task, std::size_t layer) const {
  for (const auto& c : cells) {
    if (c.task == task && c.layer == layer) return c.accuracy;
  }
  throw UsageError("report has no cell (" + std::string(task) + ", " + std::to_string(layer) + ")");
}

void validate(const ExperimentPlan& plan, const ExperimentData& data) {
  if (!data.reps) throw UsageError("no representations supplied");
  if (plan.tasks.empty()) throw UsageError("plan has no tasks");
  if (plan.layers.empty()) throw UsageError("plan has no layers");
  std::set<std::string> seen;
  for (const auto& task : plan.tasks) {
    if (!is_known_task(task)) throw UsageError("unknown task '" + task + "'");
    if (!seen.insert(task).second) throw UsageError("task '" + task + "' listed twice");
    if (is_word_task(task) && (data.constituency_train.empty() || data.constituency_eval.empty())) {
      throw UsageError("task '" + task + "' needs constituency train and eval treebanks");
    }
    if (task == kArcTask && (data.dependency_train.empty() || data.dependency_eval.empty())) {
      throw UsageError("task 'arc' needs dependency train and eval treebanks");
    }
  }
  std::set<std::size_t> layers;
  for (std::size_t layer : plan.layers) {
    if (layer >= data.reps->num_layers()) {
      throw UsageError("layer " + std::to_string(layer) + " not in representations (" +
                       std::to_string(data.reps->num_layers()) + " layers)");
    }
    if (!layers.insert(layer).second) throw UsageError("layer " + std::to_string(layer) + " listed twice");
  }
  validate(plan.train);
}

ExperimentReport run_experiment(const ExperimentPlan& plan, const ExperimentData& data) {
  validate(plan, data);
  const auto& reps = *data.reps;

  std::vector<PreparedTask> prepared;
  prepared.reserve(plan.tasks.size());
  for (const auto& task : plan.tasks) prepared.push_back(prepare(task, plan, data));

  ExperimentReport report;
  report.source = plan.source;
  report.seed = plan.seed;
  report.tasks = plan.tasks;
  report.layers = plan.layers;
  report.train = plan.train;
  report.train.seed = plan.seed;
  for (const auto& t : prepared) {
    report.baselines[t.name] = t.baseline;
    report.train_examples[t.name] = t.word_train ? t.word_train->examples.size() : t.arc_train->examples.size();
    report.eval_examples[t.name] = t.word_eval ? t.word_eval->examples.size() : t.arc_eval->examples.size();
  }

  const std::size_t num_cells = prepared.size() * plan.layers.size();
  report.cells.resize(num_cells);
  std::vector<std::exception_ptr> failures(num_cells);
  const int jobs = plan.jobs > 0 ? plan.jobs : omp_get_max_threads();
  const auto count = static_cast<std::int64_t>(num_cells);

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::int64_t ci = 0; ci < count; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const PreparedTask& task = prepared[c / plan.layers.size()];
    const std::size_t layer = plan.layers[c % plan.layers.size()];
    try {
      TrainConfig config = plan.train;
      config.seed = derive_seed(plan.seed, task.name, layer);
      const AlignedDataset train_data = aligned(task, reps, true, layer);
      const AlignedDataset eval_data = aligned(task, reps, false, layer);
      const TrainResult trained = train(train_data, task.vocab, config);
      report.cells[c] = {task.name, layer, evaluate(trained.model, eval_data), trained.best_epoch};
    } catch (...) {
      failures[c] = std::current_exception();
    }
  }

  for (std::size_t c = 0; c < num_cells; ++c) {
    if (!failures[c]) continue;
    const std::string cell = "cell (" + prepared[c / plan.layers.size()].name + ", layer " +
                             std::to_string(plan.layers[c % plan.layers.size()]) + "): ";
    try {
      std::rethrow_exception(failures[c]);
    } catch (const UsageError& e) {
      throw UsageError(cell + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(cell + e.what());
    } catch (const std::exception& e) {
      throw DataError(cell + e.what());
    }
  }
  finalize(report);
  return report;
}

std::size_t best_layer(const ExperimentReport& report, std::string_view task) {
  const ReportCell* best = nullptr;
  for (const auto& c : report.cells) {
    if (c.task != task) continue;
    if (!best || c.accuracy > best->accuracy || (c.accuracy == best->accuracy && c.layer < best->layer)) best = &c;
  }
  if (!best) throw UsageError("report has no cells for task '" + std::string(task) + "'");
  return best->layer;
}

void finalize(ExperimentReport& report) {
  report.best_layer.clear();
  for (const auto& task : report.tasks) report.best_layer[task] = best_layer(report, task);
  report.hierarchy_holds.reset();
  std::vector<std::size_t> bests;
  for (int level = 0; level < 4; ++level) {
    auto it = report.best_layer.find(std::string(word_task_name(level)));
    if (it == report.best_layer.end()) return;
    bests.push_back(it->second);
  }
  report.hierarchy_holds = std::is_sorted(bests.begin(), bests.end());
}

nlohmann::json to_json(const ExperimentReport& r) {
  using nlohmann::json;
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"task", c.task}, {"layer", c.layer}, {"accuracy", c.accuracy}, {"best_epoch", c.best_epoch}});
  }
  json j;
  j["schema"] = kReportSchema;
  j["source"] = r.source;
  j["seed"] = r.seed;
  j["tasks"] = r.tasks;
  j["layers"] = r.layers;
  j["cells"] = cells;
  j["baselines"] = r.baselines;
  j["best_layer"] = r.best_layer;
  j["train_examples"] = r.train_examples;
  j["eval_examples"] = r.eval_examples;
  j["hierarchy_holds"] = r.hierarchy_holds ? json(*r.hierarchy_holds) : json(nullptr);
  j["probe"] = {{"hidden_dim", r.train.hidden_dim},     {"use_bias", r.train.use_bias},
                {"learning_rate", r.train.learning_rate}, {"batch_size", r.train.batch_size},
                {"max_epochs", r.train.max_epochs},     {"patience", r.train.patience},
                {"holdout_fraction", r.train.holdout_fraction}};
  return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kReportSchema) {
      throw DataError("unsupported report schema '" + j.at("schema").get<std::string>() + "'");
    }
    ExperimentReport r;
    r.source = j.at("source").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tasks = j.at("tasks").get<std::vector<std::string>>();
    r.layers = j.at("layers").get<std::vector<std::size_t>>();
    for (const auto& c : j.at("cells")) {
      r.cells.push_back({c.at("task").get<std::string>(), c.at("layer").get<std::size_t>(),
                         c.at("accuracy").get<double>(), c.at("best_epoch").get<std::size_t>()});
    }
    r.baselines = j.at("baselines").get<std::map<std::string, double>>();
    r.best_layer = j.at("best_layer").get<std::map<std::string, std::size_t>>();
    r.train_examples = j.at("train_examples").get<std::map<std::string, std::size_t>>();
    r.eval_examples = j.at("eval_examples").get<std::map<std::string, std::size_t>>();
    if (!j.at("hierarchy_holds").is_null()) r.hierarchy_holds = j.at("hierarchy_holds").get<bool>();
    const auto& p = j.at("probe");
    r.train.hidden_dim = p.at("hidden_dim").get<std::size_t>();
    r.train.use_bias = p.at("use_bias").get<bool>();
    r.train.learning_rate = p.at("learning_rate").get<double>();
    r.train.batch_size = p.at("batch_size").get<std::size_t>();
    r.train.max_epochs = p.at("max_epochs").get<std::size_t>();
    r.train.patience = p.at("patience").get<std::size_t>();
    r.train.holdout_fraction = p.at("holdout_fraction").get<double>();
    r.train.seed = r.seed;
    if (r.cells.size() != r.tasks.size() * r.layers.size()) throw DataError("report cell count does not match tasks x layers");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
}

std::string format_report_json(const ExperimentReport& report) { return to_json(report).dump(2) + "\n"; }

std::string format_word_table(const ExperimentReport& r) {
  std::vector<std::string> word_tasks;
  for (const auto& t : r.tasks) {
    if (is_word_task(t)) word_tasks.push_back(t);
  }
  if (word_tasks.empty()) return {};
  std::string out = "source\ttask\tMFT";
  for (std::size_t layer : r.layers) out += '\t' + std::to_string(layer);
  out += '\n';
  for (const auto& task : word_tasks) {
    const std::size_t best = best_layer(r, task);
    out += r.source + '\t' + task + '\t' + fixed4(r.baselines.at(task));
    for (std::size_t layer : r.layers) {
      out += '\t' + fixed4(r.accuracy(task, layer));
      if (layer == best) out += '*';
    }
    out += '\n';
  }
  return out;
}

std::string format_arc_table(const ExperimentReport& r) {
  if (std::find(r.tasks.begin(), r.tasks.end(), kArcTask) == r.tasks.end()) return {};
  std::string out = "source\ttask\tbaseline";
  for (std::size_t layer : r.layers) out += "\tL" + std::to_string(layer);
  out += '\n';
  const std::size_t best = best_layer(r, kArcTask);
  out += r.source + '\t' + std::string(kArcTask) + '\t' + fixed4(r.baselines.at(std::string(kArcTask)));
  for (std::size_t layer : r.layers) {
    out += '\t' + fixed4(r.accuracy(kArcTask, layer));
    if (layer == best) out += '*';
  }
  out += '\n';
  return out;
}

std::string format_curves_csv(const ExperimentReport& r) {
  std::string out = "task,layer,accuracy,baseline,best\n";
  for (const auto& task : r.tasks) {
    const std::size_t best = best_layer(r, task);
    for (std::size_t layer : r.layers) {
      out += task + ',' + std::to_string(layer) + ',' + fixed4(r.accuracy(task, layer)) + ',' +
             fixed4(r.baselines.at(task)) + ',' + (layer == best ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::string render_layer_curves_svg(const ExperimentReport& r) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 60, kRight = 150, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double lo = 1.0;
  for (const auto& c : r.cells) lo = std::min(lo, c.accuracy);
  for (const auto& [task, b] : r.baselines) lo = std::min(lo, b);
  lo = std::max(0.0, std::floor((lo - 0.05) * 10.0) / 10.0);
  const double hi = 1.0;

  const std::size_t n_layers = r.layers.size();
  auto x_of = [&](std::size_t i) {
    return n_layers <= 1 ? kLeft + plot_w / 2 : kLeft + plot_w * static_cast<double>(i) / static_cast<double>(n_layers - 1);
  };
  auto y_of = [&](double acc) { return kTop + plot_h * (hi - acc) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\">" << r.source << "</text>\n";
  // axes
  svg << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line class=\"axis\" x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed2(y_of(v) + 4) << "\" text-anchor=\"end\">" << fixed2(v)
        << "</text>\n";
  }
  for (std::size_t i = 0; i < n_layers; ++i) {
    svg << "<text x=\"" << fixed2(x_of(i)) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
        << r.layers[i] << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">Layer</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + plot_h / 2 << ")\">Accuracy</text>\n";

  for (std::size_t ti = 0; ti < r.tasks.size(); ++ti) {
    const auto& task = r.tasks[ti];
    const char* color = kPalette[ti % kPalette.size()];
    std::string points;
    std::size_t best_index = 0;
    const std::size_t best = best_layer(r, task);
    for (std::size_t i = 0; i < n_layers; ++i) {
      if (!points.empty()) points += ' ';
      points += fixed2(x_of(i)) + ',' + fixed2(y_of(r.accuracy(task, r.layers[i])));
      if (r.layers[i] == best) best_index = i;
    }
    svg << "<polyline class=\"series\" data-task=\"" << task << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
    const double by = y_of(r.baselines.at(task));
    svg << "<line class=\"baseline\" data-task=\"" << task << "\" x1=\"" << kLeft << "\" y1=\"" << fixed2(by)
        << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << fixed2(by) << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"6 4\"/>\n";
    // five-pointed star around the best point
    const double cx = x_of(best_index);
    const double cy = y_of(r.accuracy(task, best));
    std::string star;
    for (int k = 0; k < 10; ++k) {
      const double radius = k % 2 == 0 ? 9.0 : 3.8;
      const double angle = -1.5707963267948966 + k * 0.6283185307179586;
      if (!star.empty()) star += ' ';
      star += fixed2(cx + radius * std::cos(angle)) + ',' + fixed2(cy + radius * std::sin(angle));
    }
    svg << "<polygon class=\"star\" data-task=\"" << task << "\" fill=\"" << color << "\" stroke=\"black\" points=\""
        << star << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(ti);
    svg << "<rect x=\"" << kLeft + plot_w + 15 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\""
        << color << "\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w + 32 << "\" y=\"" << ly + 1 << "\">" << task << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string compare_reports(const ExperimentReport& a, const ExperimentReport& b) {
  const std::set<std::string> ta(a.tasks.begin(), a.tasks.end()), tb(b.tasks.begin(), b.tasks.end());
  const std::set<std::size_t> la(a.layers.begin(), a.layers.end()), lb(b.layers.begin(), b.layers.end());
  if (ta != tb) throw DataError("reports cover different tasks");
  if (la != lb) throw DataError("reports cover different layers");
  std::string out = "task,layer,a,b,delta\n";
  for (const auto& task : a.tasks) {
    for (std::size_t layer : la) {
      const double x = a.accuracy(task, layer);
      const double y = b.accuracy(task, layer);
      out += task + ',' + std::to_string(layer) + ',' + fixed4(x) + ',' + fixed4(y) + ',' + fixed4(y - x) + '\n';
    }
  }
  return out;
}

std::vector<std::string> emit_report_files(const ExperimentReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& content) {
    if (content.empty()) return;
    const std::string path = (fs::path(dir) / name).string();
    detail::write_file(path, content);
    written.push_back(path);
  };
  put("table_constituency.tsv", format_word_table(report));
  put("table_arc.tsv", format_arc_table(report));
  put("curves.csv", format_curves_csv(report));
  put("curves.svg", render_layer_curves_svg(report));
  return written;
}

}  // namespace synprobe
