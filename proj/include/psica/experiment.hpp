#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "psica/metrics.hpp"
#include "psica/pipeline.hpp"
#include "psica/simulate.hpp"

namespace psica {

// Pipeline variants of the simulation study: jackknife probabilities with
// all features per forest split (m1) or sqrt(p) (m2), and bootstrap
// probabilities with sqrt(p) (m3).
enum class StudyMethod { m1, m2, m3 };

StudyMethod parse_study_method(const std::string& text);
std::string to_string(StudyMethod m);

struct ExperimentConfig {
  std::vector<SimModel> models{SimModel::M1};
  std::vector<std::size_t> sizes{300};
  std::vector<StudyMethod> methods{StudyMethod::m1};
  std::size_t replicates = 5;
  std::uint64_t seed = 1;
  std::size_t B = 500;
  std::size_t trees = 100;
  GrowthMethod growth = GrowthMethod::preprune;
  double alpha = 0.05;
  // 0 selects ceil(n / 5).
  std::size_t min_leaf = 0;
  int threads = 1;
};

/// Flat key=value file: models, n, methods (comma lists), replicates, seed,
/// B, trees, growth, alpha, min_leaf, threads.
ExperimentConfig parse_experiment_config(const std::string& text);

// Pipeline settings used for one study method at size n.
PipelineConfig study_pipeline(const ExperimentConfig& config, StudyMethod method);

struct ReplicateRecord {
  SimModel model = SimModel::M1;
  std::size_t n = 0;
  StudyMethod method = StudyMethod::m1;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string message;
  MetricsReport metrics;
  // Largest deviation of a probability row sum from one.
  double row_sum_error = 0.0;
  std::size_t leaves = 0;
};

struct MetricSummary {
  double mean = 0.0;
  // Standard error of the mean.
  double se = 0.0;
};

struct CellSummary {
  SimModel model = SimModel::M1;
  std::size_t n = 0;
  StudyMethod method = StudyMethod::m1;
  std::size_t completed = 0;
  std::size_t failed = 0;
  MetricSummary accuracy, uncertainty, suspect, decision_accuracy;
};

struct ExperimentReport {
  std::vector<ReplicateRecord> records;
  std::vector<CellSummary> cells;
};

struct ReplicateFit {
  std::uint64_t seed = 0;
  Simulation train, test;
  PipelineResult result;
};

/// Training sample, evaluation sample and fitted pipeline of one replicate.
/// `threads` only changes the pipeline's work split, never its output.
ReplicateFit fit_replicate(const ExperimentConfig& config, SimModel model, std::size_t n, StudyMethod method,
                           std::size_t replicate, int threads = 1);

/// One replicate: simulate training data, estimate probabilities, grow the
/// tree, then score it on a fresh sample of the same size.
ReplicateRecord run_replicate(const ExperimentConfig& config, SimModel model, std::size_t n, StudyMethod method,
                              std::size_t replicate);

/// Every (model, n, method) cell with config.replicates replicates. A failing
/// replicate is recorded with its message and excluded from the means.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::vector<CellSummary> summarize_records(const std::vector<ReplicateRecord>& records);

std::string format_records(const std::vector<ReplicateRecord>& records);
std::string format_summary(const std::vector<CellSummary>& cells);
// Human-readable tables in "mean (se)" form, one per metric.
std::string format_summary_text(const std::vector<CellSummary>& cells);

}  // namespace psica
