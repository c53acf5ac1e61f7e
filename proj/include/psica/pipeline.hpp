#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "psica/bestprob.hpp"
#include "psica/dataset.hpp"
#include "psica/forest.hpp"
#include "psica/psica_tree.hpp"

namespace psica {

/// Settings for probability estimation followed by tree growth.
struct PipelineConfig {
  ProbabilityMethod probability = ProbabilityMethod::jackknife;
  MtryRule mtry = MtryRule::all;
  std::size_t B = 500;
  std::size_t trees = 100;
  // Forest node-splitting threshold; 0 selects ceil(n_k / 10) of each arm.
  std::size_t forest_min_split = 0;
  std::size_t forest_min_leaf = 1;
  std::optional<std::size_t> forest_max_depth;
  TreeConfig tree;
  PrunePolicy prune;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Forest parameters implied by the pipeline config for data `d`.
ForestParams forest_params(const PipelineConfig& config, const Dataset& d);

struct PipelineResult {
  ProbabilityMatrix probabilities;
  PsicaTree tree;
};

PipelineResult run_pipeline(const Dataset& d, const PipelineConfig& config);

}  // namespace psica
