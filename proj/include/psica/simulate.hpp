#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psica/dataset.hpp"
#include "psica/random.hpp"

namespace psica {

enum class SimModel { M1, M2, M3, M4, M5, M6, Demo };

SimModel parse_model(const std::string& text);
std::string to_string(SimModel model);

enum class NoiseKind { normal, laplace };

struct SimModelSpec {
  SimModel id = SimModel::M1;
  std::size_t treatments = 2;
  // Features entering the noise-free effect, in column order first.
  std::size_t relevant_p = 1;
  // Padding features drawn from U[-1, 1] and appended after the relevant ones.
  std::size_t irrelevant_p = 2;
  NoiseKind noise = NoiseKind::normal;
  // Standard deviation of the noise (Laplace noise uses the same variance).
  double noise_sd = 0.8;
};

SimModelSpec model_spec(SimModel model);

// Column layout of a simulated dataset.
std::vector<FeatureSpec> model_schema(const SimModelSpec& spec);
std::vector<std::string> model_treatments(const SimModelSpec& spec);
std::size_t num_features(const SimModelSpec& spec);
// True for the columns that enter the noise-free effect.
std::vector<bool> relevant_features(const SimModelSpec& spec);

/// Noise-free effect f(x, treatment k).
double true_effect(const SimModelSpec& spec, std::span<const double> x, std::size_t k);
/// Treatments attaining the maximum noise-free effect (exact ties included).
TreatmentSet true_best_set(const SimModelSpec& spec, std::span<const double> x);

struct Simulation {
  Dataset data;
  std::vector<TreatmentSet> oracle;
};

/// n rows with U[-1,1] features (M6's x0 uniform over K1..K4), uniform random
/// treatment assignment and additive noise.
Simulation generate_model(const SimModelSpec& spec, std::size_t n, RandomStream& rng);

// Oracle table: row id and "|"-joined best-treatment names.
std::string format_oracle(const std::vector<TreatmentSet>& oracle, const std::vector<std::string>& names);
std::vector<TreatmentSet> parse_oracle(const std::string& text, const std::vector<std::string>& names);

}  // namespace psica
