#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psica/metrics.hpp"
#include "psica/pipeline.hpp"

namespace psica::cli {

struct SimulateOptions {
  std::string model = "M5";
  std::size_t n = 300;
  std::uint64_t seed = 1;
  // Output prefix: <out>.csv, <out>.oracle.csv and <out>.schema are written.
  std::filesystem::path out;
};

struct FitOptions {
  std::filesystem::path data;
  std::optional<std::filesystem::path> schema_file;
  std::string treatment_col = "treatment";
  std::string effect_col = "effect";
  // "name=kind" declarations; all other columns are inferred when empty.
  std::vector<std::string> features;
  std::string method_prob = "jackknife";
  std::string method_grow = "full";
  double alpha = 0.05;
  std::size_t B = 500;
  std::size_t trees = 100;
  std::string mtry = "all";
  std::size_t min_leaf = 0;
  std::optional<std::size_t> max_depth;
  std::size_t forest_min_split = 0;
  std::optional<std::filesystem::path> costs;
  bool prune_same_label = false;
  std::optional<std::size_t> prune_max_leaves;
  std::optional<double> prune_min_gain;
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path out;
  std::optional<std::filesystem::path> probabilities_out;
  // Above this many forest fits, bootstrap probabilities print a cost warning.
  std::size_t fit_warning_ceiling = 2000;
};

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::optional<std::filesystem::path> out;
};

struct ExportOptions {
  std::filesystem::path model;
  std::string format = "graph";
  std::optional<std::filesystem::path> out;
};

struct EvaluateOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  // Oracle table of true best sets, one row per data row.
  std::filesystem::path oracle;
  // Simulation model that produced the data; enables the suspect metric.
  std::optional<std::string> sim_model;
};

struct ExperimentOptions {
  std::filesystem::path config;
  // Output prefix: <out>.raw.csv, <out>.summary.csv, <out>.summary.txt.
  std::filesystem::path out;
  std::optional<int> threads;
};

PipelineConfig pipeline_config(const FitOptions& options, std::size_t treatments);

void cmd_simulate(const SimulateOptions& options, std::ostream& out);
void cmd_fit(const FitOptions& options, std::ostream& out, std::ostream& err);
void cmd_predict(const PredictOptions& options, std::ostream& out);
void cmd_export(const ExportOptions& options, std::ostream& out);
MetricsReport cmd_evaluate(const EvaluateOptions& options, std::ostream& out);
// Returns the number of failed replicates.
std::size_t cmd_experiment(const ExperimentOptions& options, std::ostream& out);

/// Prediction table: row, leaf, potential set and one truncated-probability
/// column per treatment.
std::string predict_table(const PsicaTree& tree, const std::string& csv);

}  // namespace psica::cli
