#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synprobe/probe.hpp"
#include "synprobe/repstore.hpp"
#include "synprobe/treebank.hpp"

namespace synprobe {

inline constexpr std::string_view kArcTask = "arc";
inline constexpr double kArcBaseline = 0.5;
inline constexpr std::string_view kReportSchema = "synprobe.report/1";

/// True for pos, parent, grandparent, greatgrandparent and arc.
bool is_known_task(std::string_view task);

struct ExperimentPlan {
  std::string source = "model";     // row label in tables, e.g. "LM"
  std::vector<std::string> tasks;   // subset of the known tasks, in report order
  std::vector<std::size_t> layers;
  TrainConfig train;                // train.seed is ignored; cells derive theirs from `seed`
  std::uint64_t seed = 1;
  int jobs = 0;                     // worker threads for cells; 0 = OpenMP default
};

/// Loaded inputs of a plan. Word tasks need the constituency splits, the arc
/// task the dependency splits.
struct ExperimentData {
  const LayeredRepresentations* reps = nullptr;
  std::vector<ConstituencyTree> constituency_train;
  std::vector<ConstituencyTree> constituency_eval;
  std::vector<DependencySentence> dependency_train;
  std::vector<DependencySentence> dependency_eval;
};

struct ReportCell {
  std::string task;
  std::size_t layer = 0;
  double accuracy = 0.0;
  std::size_t best_epoch = 0;

  friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct ExperimentReport {
  std::string source;
  std::uint64_t seed = 0;
  std::vector<std::string> tasks;
  std::vector<std::size_t> layers;
  std::vector<ReportCell> cells;             // task-major, in tasks x layers order
  std::map<std::string, double> baselines;   // majority accuracy, or 0.5 for arc
  std::map<std::string, std::size_t> best_layer;
  std::map<std::string, std::size_t> train_examples;
  std::map<std::string, std::size_t> eval_examples;
  /// best(pos) <= best(parent) <= best(grandparent) <= best(greatgrandparent);
  /// empty unless all four word tasks ran.
  std::optional<bool> hierarchy_holds;
  TrainConfig train;

  double accuracy(std::string_view task, std::size_t layer) const;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Throws UsageError for an inconsistent plan (unknown task, missing corpus,
/// absent layer).
void validate(const ExperimentPlan& plan, const ExperimentData& data);

/// Trains and evaluates one probe per (task, layer). Cells may run in
/// parallel; each cell's seed derives from (plan.seed, task, layer), so the
/// report does not depend on scheduling. Any cell failure aborts the run
/// with an error naming the cell.
ExperimentReport run_experiment(const ExperimentPlan& plan, const ExperimentData& data);

/// Argmax over the layers; ties go to the shallowest layer.
std::size_t best_layer(const ExperimentReport& report, std::string_view task);

/// Fills best_layer and hierarchy_holds from the cells.
void finalize(ExperimentReport& report);

nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
std::string format_report_json(const ExperimentReport& report);

/// Word tasks: `source task MFT <layer>...`, 4 decimals, best cell marked
/// with '*'. Empty string when the report has no word task.
std::string format_word_table(const ExperimentReport& report);
/// Arc task: `source task baseline L<layer>...`. Empty without the arc task.
std::string format_arc_table(const ExperimentReport& report);

/// `task,layer,accuracy,baseline,best`, one row per cell.
std::string format_curves_csv(const ExperimentReport& report);
/// Static chart: one polyline per task, a dashed baseline per task and a
/// star on each task's best layer.
std::string render_layer_curves_svg(const ExperimentReport& report);

/// `task,layer,a,b,delta` with delta = b - a. Throws DataError when the
/// reports cover different tasks or layers.
std::string compare_reports(const ExperimentReport& a, const ExperimentReport& b);

/// Writes table/curve files for `report` under `dir`; returns the paths.
std::vector<std::string> emit_report_files(const ExperimentReport& report, const std::string& dir);

}  // namespace synprobe
