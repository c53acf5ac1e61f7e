#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psica/dataset.hpp"

namespace psica {

/// Binary split on one feature: numeric/ordinal rows with x <= threshold go
/// left; categorical rows go left when their level is in `left_levels`.
struct SplitRule {
  std::size_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;
  std::uint64_t left_levels = 0;

  bool goes_left(double value) const {
    if (categorical) return (left_levels >> static_cast<std::uint64_t>(value)) & 1ULL;
    return value <= threshold;
  }
  bool goes_left(std::span<const double> x) const { return goes_left(x[feature]); }

  bool operator==(const SplitRule&) const = default;
  auto operator<=>(const SplitRule&) const = default;
};

// "x <= 0.25" or "x0 in {K1,K3}".
std::string describe(const SplitRule& rule, const std::vector<FeatureSpec>& schema);

// Upper bound on categorical levels a split can address (bitmask width).
inline constexpr std::size_t max_split_levels = 64;
// Up to this many levels present in a node, categorical splits are
// enumerated exhaustively; above it levels are ordered by a score and
// scanned as if ordinal.
inline constexpr std::size_t exhaustive_level_limit = 10;

}  // namespace psica
