#include "psica/chisq.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

namespace psica {

double chi_square_upper_tail(double statistic, double df) {
  if (!(statistic > 0.0)) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  return boost::math::gamma_q(df / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_independence(std::span<const std::array<double, 2>> table) {
  std::vector<std::array<double, 2>> kept;
  for (const auto& row : table)
    if (row[0] != 0.0 || row[1] != 0.0) kept.push_back(row);

  ChiSquareResult result;
  double col[2] = {0.0, 0.0};
  for (const auto& row : kept) {
    col[0] += row[0];
    col[1] += row[1];
  }
  if (kept.size() < 2 || col[0] == 0.0 || col[1] == 0.0) {
    result.degenerate = true;
    return result;
  }
  const double total = col[0] + col[1];
  double stat = 0.0;
  for (const auto& row : kept) {
    const double rsum = row[0] + row[1];
    for (int j = 0; j < 2; ++j) {
      const double expected = rsum * col[j] / total;
      const double diff = row[j] - expected;
      stat += diff * diff / expected;
    }
  }
  result.statistic = stat;
  result.df = kept.size() - 1;
  result.p_value = chi_square_upper_tail(stat, static_cast<double>(result.df));
  return result;
}

}  // namespace psica
