#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psica/bestprob.hpp"
#include "psica/dataset.hpp"
#include "psica/split.hpp"

namespace psica {

/// c(k, j): cost of giving treatment j when treatment k is best.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t m, std::vector<double> values);
  static CostMatrix zero_one(std::size_t m);
  // m lines of m comma-separated numbers; blank lines and '#' comments skipped.
  static CostMatrix parse(const std::string& text);

  std::size_t size() const { return m_; }
  double operator()(std::size_t k, std::size_t j) const { return values_[k * m_ + j]; }
  bool is_zero_one() const;
  std::string format() const;

  bool operator==(const CostMatrix&) const = default;

 private:
  std::size_t m_ = 0;
  std::vector<double> values_;
};

struct NodeSummary {
  double size = 0.0;
  std::vector<double> agg_probs;
  TreatmentSet useless;
  TreatmentSet potential;
  std::vector<double> trunc_probs;
  double loss = 0.0;

  bool operator==(const NodeSummary&) const = default;
};

/// Column means of P over `rows`.
std::vector<double> aggregate_probabilities(std::span<const std::size_t> rows, const ProbabilityMatrix& P);

/// Treatments whose aggregated probabilities, accumulated from the smallest
/// upwards, stay within `alpha`. Never the whole set.
TreatmentSet useless_treatments(std::span<const double> agg, double alpha);

/// `agg` renormalised over the potential treatments and zero on `useless`.
std::vector<double> truncated_probabilities(std::span<const double> agg, TreatmentSet useless);

/// Expected misassignment cost of a node with `size` rows and aggregated
/// probabilities `agg` when treatments are drawn from the truncated
/// probabilities.
NodeSummary summarize(std::span<const double> agg, double size, const CostMatrix& costs, double alpha);

/// Loss of the node formed by `rows`.
double node_loss(std::span<const std::size_t> rows, const ProbabilityMatrix& P, const CostMatrix& costs,
                 double alpha);
// Row-by-row triple sum over (row, best k, assigned j), without aggregation shortcuts.
double node_loss_by_rows(std::span<const std::size_t> rows, const ProbabilityMatrix& P, const CostMatrix& costs,
                         double alpha);
// Closed form for zero-one costs: |rows| * sum_k agg_k * (1 - trunc_k).
double node_loss_zero_one(std::span<const std::size_t> rows, const ProbabilityMatrix& P, double alpha);

double information_gain(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                        std::span<const std::size_t> right, const ProbabilityMatrix& P, const CostMatrix& costs,
                        double alpha);

inline constexpr double default_omega_max = 10.0;

/// Inflation factor of a node: sd(U[0,1]) over the sample sd of all its
/// probability entries, capped at omega_max.
double inflation_factor(double sum, double sum_sq, double count, double omega_max = default_omega_max);
double inflation_factor(std::span<const std::size_t> rows, const ProbabilityMatrix& P,
                        double omega_max = default_omega_max);

/// Chi-square comparison of the children's aggregated distributions, with
/// counts ceil(agg * size * omega). True when the p-value is <= alpha.
bool chi_square_mask(std::span<const std::size_t> left, std::span<const std::size_t> right,
                     const ProbabilityMatrix& P, double alpha, double omega_max = default_omega_max);

enum class GrowthMethod { full = 3, preprune = 4 };

GrowthMethod parse_growth_method(const std::string& text);
std::string to_string(GrowthMethod m);

struct TreeConfig {
  GrowthMethod method = GrowthMethod::full;
  double alpha = 0.05;
  // Minimum rows per leaf; 0 selects ceil(n / 5).
  std::size_t min_leaf = 0;
  std::optional<std::size_t> max_depth;
  // Zero-one costs when unset.
  std::optional<CostMatrix> costs;
  double omega_max = default_omega_max;
  // Splits must gain more than gain_floor_rel * L(root).
  double gain_floor_rel = 1e-9;

  bool operator==(const TreeConfig&) const = default;
};

struct PsicaNode {
  std::optional<SplitRule> split;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::size_t depth = 0;
  // Information gain of this node's split (0 for leaves).
  double gain = 0.0;
  NodeSummary summary;

  bool is_leaf() const { return !split.has_value(); }
  bool operator==(const PsicaNode&) const = default;
};

struct LeafLabel {
  std::size_t leaf = 0;
  TreatmentSet potential;
  std::vector<double> trunc_probs;
};

class PsicaTree {
 public:
  PsicaTree() = default;
  PsicaTree(std::vector<PsicaNode> nodes, std::vector<FeatureSpec> schema, std::vector<std::string> treatments,
            TreeConfig config);

  const std::vector<PsicaNode>& nodes() const { return nodes_; }
  const PsicaNode& root() const { return nodes_.front(); }
  const std::vector<FeatureSpec>& schema() const { return schema_; }
  const std::vector<std::string>& treatments() const { return treatments_; }
  const TreeConfig& config() const { return config_; }

  std::size_t num_leaves() const;
  std::vector<std::size_t> leaves() const;
  // Sum of leaf losses.
  double total_loss() const;
  std::size_t leaf_of(std::span<const double> x) const;
  LeafLabel predict_label(std::span<const double> x) const;
  // Leaves ordered by a left-to-right traversal.
  std::vector<std::size_t> leaves_in_order() const;

  bool operator==(const PsicaTree&) const = default;

 private:
  std::vector<PsicaNode> nodes_;
  std::vector<FeatureSpec> schema_;
  std::vector<std::string> treatments_;
  TreeConfig config_;
};

/// Recursive partitioning of (X_i, P_i) that maximises the loss reduction
/// (full growth) or the loss reduction masked by the chi-square test
/// (prepruning). Deterministic; no randomness is involved.
PsicaTree grow(const ProbabilityMatrix& P, const Dataset& X, const TreeConfig& config);

struct PrunePolicy {
  // Merge sibling leaves with equal potential sets (repeated bottom-up).
  bool collapse_same_label = false;
  // Remove splits whose gain is below this, starting from the bottom.
  std::optional<double> min_gain;
  // Remove the smallest-gain splits until at most this many leaves remain.
  std::optional<std::size_t> max_leaves;
};

PsicaTree prune(const PsicaTree& tree, const PrunePolicy& policy);

}  // namespace psica
