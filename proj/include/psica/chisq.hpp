#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace psica {

// P(X >= statistic) for X ~ chi-square(df).
double chi_square_upper_tail(double statistic, double df);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  // True when, after dropping all-zero rows, fewer than two rows or a zero
  // column remain; no test is possible then.
  bool degenerate = false;
};

/// Pearson test of independence for an r x 2 table of counts (no continuity
/// correction). Rows whose counts are both zero are dropped before the test.
ChiSquareResult chi_square_independence(std::span<const std::array<double, 2>> table);

}  // namespace psica
