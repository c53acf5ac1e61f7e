#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "psica/dataset.hpp"

namespace psica::test {

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("psica_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// One numeric feature, treatments named by `treatment_set`.
inline Dataset one_feature(std::vector<double> x, std::vector<double> y, std::vector<std::size_t> t,
                           std::vector<std::string> treatment_set = {"A", "B"}) {
  return Dataset({FeatureSpec{"x", FeatureKind::numeric()}}, {std::move(x)}, std::move(y), std::move(t),
                 std::move(treatment_set));
}

}  // namespace psica::test
