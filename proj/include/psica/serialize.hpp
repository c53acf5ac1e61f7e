#pragma once

#include <string>

#include "psica/forest.hpp"
#include "psica/psica_tree.hpp"

namespace psica {

inline constexpr int interchange_format_version = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tree interchange document (JSON). Stable key order and round-trip
/// precision for all reals, so equal trees serialize to identical bytes.
std::string tree_to_json(const PsicaTree& tree);
PsicaTree tree_from_json(const std::string& text);

/// Forest document with tree structures and bootstrap multiplicities, so the
/// jackknife variance can be recomputed after reload.
std::string forest_to_json(const ForestModel& forest);
ForestModel forest_from_json(const std::string& text);

/// Graphviz rendering: one box per node with rule, size, probabilities and
/// label set.
std::string tree_to_dot(const PsicaTree& tree);

// One line per leaf, in left-to-right order.
std::string format_leaf_table(const PsicaTree& tree);

}  // namespace psica
