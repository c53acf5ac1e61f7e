#include "psica/metrics.hpp"

#include <stdexcept>

namespace psica {

namespace {

void check_sizes(const Dataset& data, const std::vector<TreatmentSet>& oracle) {
  if (oracle.size() != data.size()) throw std::invalid_argument("oracle and data differ in row count");
  if (data.size() == 0) throw std::invalid_argument("metrics need at least one row");
}

// Potential set per row, routing each row once.
std::vector<std::size_t> leaves_of(const PsicaTree& tree, const Dataset& data) {
  std::vector<std::size_t> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = tree.leaf_of(data.row(i));
  return out;
}

}  // namespace

double accuracy(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle) {
  check_sizes(data, oracle);
  auto leaves = leaves_of(tree, data);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    hits += oracle[i].subset_of(tree.nodes()[leaves[i]].summary.potential);
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double uncertainty(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle) {
  check_sizes(data, oracle);
  auto leaves = leaves_of(tree, data);
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    count += tree.nodes()[leaves[i]].summary.potential.size() > oracle[i].size();
  return static_cast<double>(count) / static_cast<double>(data.size());
}

double suspect(const PsicaTree& tree, const std::vector<bool>& relevant) {
  double flagged = 0.0, total = 0.0;
  for (const auto& n : tree.nodes()) {
    total += n.summary.size;
    if (!n.is_leaf() && !relevant.at(n.split->feature)) flagged += n.summary.size;
  }
  return total > 0 ? flagged / total : 0.0;
}

double decision_accuracy(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle) {
  check_sizes(data, oracle);
  auto leaves = leaves_of(tree, data);
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& trunc = tree.nodes()[leaves[i]].summary.trunc_probs;
    for (auto k : oracle[i].indices()) s += trunc[k];
  }
  return s / static_cast<double>(data.size());
}

double decision_accuracy_sampled(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle,
                                 RandomStream& rng, std::size_t repetitions) {
  check_sizes(data, oracle);
  auto leaves = leaves_of(tree, data);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < repetitions; ++r)
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& trunc = tree.nodes()[leaves[i]].summary.trunc_probs;
      std::discrete_distribution<std::size_t> pick(trunc.begin(), trunc.end());
      hits += oracle[i].contains(pick(rng.engine()));
    }
  return static_cast<double>(hits) / static_cast<double>(data.size() * repetitions);
}

MetricsReport evaluate(const PsicaTree& tree, const Dataset& data, const std::vector<TreatmentSet>& oracle,
                       const std::vector<bool>& relevant) {
  return {accuracy(tree, data, oracle), uncertainty(tree, data, oracle), suspect(tree, relevant),
          decision_accuracy(tree, data, oracle)};
}

}  // namespace psica
