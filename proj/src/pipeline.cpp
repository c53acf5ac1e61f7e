#include "psica/pipeline.hpp"

namespace psica {

ForestParams forest_params(const PipelineConfig& config, const Dataset& d) {
  ForestParams fp;
  fp.num_trees = config.trees;
  fp.mtry = resolve_mtry(config.mtry, d.num_features());
  fp.min_split = config.forest_min_split;
  fp.min_leaf = config.forest_min_leaf;
  fp.max_depth = config.forest_max_depth;
  fp.seed = config.seed;
  fp.threads = config.threads;
  return fp;
}

PipelineResult run_pipeline(const Dataset& d, const PipelineConfig& config) {
  auto P = estimate_probabilities(d, config.probability, config.B, forest_params(config, d));
  auto tree = grow(P, d, config.tree);
  if (config.prune.collapse_same_label || config.prune.min_gain || config.prune.max_leaves)
    tree = prune(tree, config.prune);
  return {std::move(P), std::move(tree)};
}

}  // namespace psica
