#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "psica/dataset.hpp"
#include "psica/forest.hpp"

namespace psica {

enum class ProbabilityMethod { bootstrap = 1, jackknife = 2 };

ProbabilityMethod parse_probability_method(const std::string& text);
std::string to_string(ProbabilityMethod m);

/// Joint effect draws: value(i, b, k) is the b-th sample of the effect of
/// treatment k at observation i.
class EffectSamples {
 public:
  EffectSamples(std::size_t n, std::size_t B, std::size_t m);

  std::size_t rows() const { return n_; }
  std::size_t draws() const { return B_; }
  std::size_t treatments() const { return m_; }

  double& at(std::size_t i, std::size_t b, std::size_t k) { return values_[(i * B_ + b) * m_ + k]; }
  double at(std::size_t i, std::size_t b, std::size_t k) const { return values_[(i * B_ + b) * m_ + k]; }

  bool operator==(const EffectSamples&) const = default;

 private:
  std::size_t n_, B_, m_;
  std::vector<double> values_;
};

/// n x m matrix of best-treatment probabilities; each row is a distribution.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  ProbabilityMatrix(std::size_t n, std::size_t m, std::size_t B = 0, int method_tag = 0);

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return m_; }
  std::size_t draws() const { return B_; }
  int method_tag() const { return method_tag_; }

  double& operator()(std::size_t i, std::size_t k) { return values_[i * m_ + k]; }
  double operator()(std::size_t i, std::size_t k) const { return values_[i * m_ + k]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * m_, m_}; }

  // Largest |row sum - 1| over all rows.
  double max_row_error() const;

  bool operator==(const ProbabilityMatrix&) const = default;

 private:
  std::size_t n_ = 0, m_ = 0, B_ = 0;
  int method_tag_ = 0;
  std::vector<double> values_;
};

/// Method 1: for every (draw b, treatment k) a forest is fit to a bootstrap
/// resample of that treatment arm and evaluated at all rows.
EffectSamples sample_effects_method1(const Dataset& d, std::size_t B, const ForestParams& params);

/// Method 2: one forest per arm; draws are Normal(prediction, IJ variance),
/// independent across rows, draws and treatments.
EffectSamples sample_effects_method2(const Dataset& d, std::size_t B, const ForestParams& params);

/// Fraction of draws in which each treatment attains the maximum; a tie for
/// the maximum between t treatments credits 1/t to each.
ProbabilityMatrix compute_best_probabilities(const EffectSamples& s);

ProbabilityMatrix estimate_probabilities(const Dataset& d, ProbabilityMethod method, std::size_t B,
                                         const ForestParams& params);

// Audit dump: row id followed by one column per treatment.
std::string format_probabilities(const ProbabilityMatrix& p, const std::vector<std::string>& treatments);
ProbabilityMatrix parse_probabilities(const std::string& text);

}  // namespace psica
