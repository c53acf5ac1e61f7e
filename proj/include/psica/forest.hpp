#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psica/dataset.hpp"
#include "psica/random.hpp"
#include "psica/split.hpp"

namespace psica {

enum class MtryRule { all, sqrt };

MtryRule parse_mtry(const std::string& text);
std::string to_string(MtryRule rule);
// p for `all`, ceil(sqrt(p)) for `sqrt`.
std::size_t resolve_mtry(MtryRule rule, std::size_t p);

struct ForestParams {
  std::size_t num_trees = 100;
  // Features tried per split; 0 means all features.
  std::size_t mtry = 0;
  // Nodes whose (multiplicity-weighted) size is below this are not split;
  // 0 selects ceil(n / 10) of the training rows.
  std::size_t min_split = 2;
  std::size_t min_leaf = 1;
  std::optional<std::size_t> max_depth;
  std::uint64_t seed = 1;
  int threads = 1;

  bool operator==(const ForestParams&) const = default;
};

struct RegressionTreeNode {
  // Internal nodes carry a split and two children; leaves carry only value.
  std::optional<SplitRule> split;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
  double size = 0.0;

  bool is_leaf() const { return !split.has_value(); }
  bool operator==(const RegressionTreeNode&) const = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<RegressionTreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<RegressionTreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_of(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes_[leaf_of(x)].value; }
  std::size_t num_leaves() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<RegressionTreeNode> nodes_;
};

/// Greedy variance-reduction tree. `weights[i]` is the multiplicity of row i
/// (0 excludes it). Among `mtry` randomly chosen features each node takes the
/// rule with the largest reduction in weighted squared error; ties resolve to
/// the lowest feature index, then the lowest threshold.
RegressionTree fit_tree(const Dataset& d, std::span<const double> weights, const ForestParams& params,
                        RandomStream& rng);

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<RegressionTree> trees, std::vector<std::vector<std::uint32_t>> membership,
              ForestParams params, std::vector<FeatureSpec> schema, double variance_floor);

  const std::vector<RegressionTree>& trees() const { return trees_; }
  // membership()[b][i]: times training row i was drawn for tree b.
  const std::vector<std::vector<std::uint32_t>>& membership() const { return membership_; }
  const ForestParams& params() const { return params_; }
  const std::vector<FeatureSpec>& schema() const { return schema_; }
  std::size_t training_n() const { return membership_.empty() ? 0 : membership_.front().size(); }
  double variance_floor() const { return variance_floor_; }

  std::vector<double> tree_predictions(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
  // Bias-corrected infinitesimal jackknife variance of predict(x), clamped
  // below at variance_floor().
  double ij_variance(std::span<const double> x) const;

  bool operator==(const ForestModel&) const = default;

 private:
  std::vector<RegressionTree> trees_;
  std::vector<std::vector<std::uint32_t>> membership_;
  ForestParams params_;
  std::vector<FeatureSpec> schema_;
  double variance_floor_ = 0.0;
};

/// Fits params.num_trees trees, each on a bootstrap resample of `d` drawn
/// from the sub-stream (params.seed, tree index).
ForestModel fit_forest(const Dataset& d, const ForestParams& params);

// Uncorrected jackknife and Monte-Carlo bias term, exposed for testing.
struct IjComponents {
  double raw = 0.0;
  double bias = 0.0;
};
IjComponents ij_components(const ForestModel& f, std::span<const double> x);

}  // namespace psica
