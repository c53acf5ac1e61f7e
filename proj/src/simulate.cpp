#include "psica/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace psica {

SimModel parse_model(const std::string& text) {
  if (text == "M1") return SimModel::M1;
  if (text == "M2") return SimModel::M2;
  if (text == "M3") return SimModel::M3;
  if (text == "M4") return SimModel::M4;
  if (text == "M5") return SimModel::M5;
  if (text == "M6") return SimModel::M6;
  if (text == "demo" || text == "Demo") return SimModel::Demo;
  throw std::invalid_argument("unknown model '" + text + "' (expected M1..M6 or demo)");
}

std::string to_string(SimModel model) {
  switch (model) {
    case SimModel::M1: return "M1";
    case SimModel::M2: return "M2";
    case SimModel::M3: return "M3";
    case SimModel::M4: return "M4";
    case SimModel::M5: return "M5";
    case SimModel::M6: return "M6";
    case SimModel::Demo: return "demo";
  }
  return "M1";
}

SimModelSpec model_spec(SimModel model) {
  switch (model) {
    case SimModel::M1: return {model, 2, 1, 2, NoiseKind::normal, 0.8};
    case SimModel::M2: return {model, 2, 2, 2, NoiseKind::normal, 0.2};
    case SimModel::M3: return {model, 2, 2, 2, NoiseKind::laplace, 0.2};
    case SimModel::M4: return {model, 2, 40, 160, NoiseKind::normal, 2.0};
    case SimModel::M5: return {model, 3, 1, 2, NoiseKind::normal, 0.2};
    // x0 plus x1..x40.
    case SimModel::M6: return {model, 4, 41, 160, NoiseKind::normal, 2.0};
    case SimModel::Demo: return {model, 3, 1, 0, NoiseKind::normal, 0.1};
  }
  throw std::invalid_argument("unknown model");
}

std::size_t num_features(const SimModelSpec& spec) { return spec.relevant_p + spec.irrelevant_p; }

std::vector<FeatureSpec> model_schema(const SimModelSpec& spec) {
  std::vector<FeatureSpec> schema;
  if (spec.id == SimModel::M6) {
    schema.push_back({"x0", FeatureKind::categorical({"K1", "K2", "K3", "K4"})});
    for (std::size_t j = 1; j < spec.relevant_p; ++j) schema.push_back({"x" + std::to_string(j), FeatureKind::numeric()});
  } else {
    for (std::size_t j = 1; j <= spec.relevant_p; ++j)
      schema.push_back({"x" + std::to_string(j), FeatureKind::numeric()});
  }
  for (std::size_t j = 1; j <= spec.irrelevant_p; ++j) schema.push_back({"z" + std::to_string(j), FeatureKind::numeric()});
  return schema;
}

std::vector<std::string> model_treatments(const SimModelSpec& spec) {
  if (spec.id == SimModel::Demo) return {"A", "B", "C"};
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= spec.treatments; ++k) names.push_back("T" + std::to_string(k));
  return names;
}

std::vector<bool> relevant_features(const SimModelSpec& spec) {
  std::vector<bool> out(num_features(spec), false);
  for (std::size_t j = 0; j < spec.relevant_p; ++j) out[j] = true;
  return out;
}

namespace {

double sum_first(std::span<const double> x, std::size_t from, std::size_t count) {
  double s = 0.0;
  for (std::size_t j = from; j < from + count; ++j) s += x[j];
  return s;
}

double indicator(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

double true_effect(const SimModelSpec& spec, std::span<const double> x, std::size_t k) {
  switch (spec.id) {
    case SimModel::M1:
      return k == 0 ? 2.0 * std::tanh(2.0 * x[0]) + 3.0 : 2.0 * std::tanh(x[0]) + 2.3;
    case SimModel::M2:
    case SimModel::M3:
      if (k == 0) return 0.5 * indicator(x[0] >= 0.0 && x[1] >= 0.0);
      return 0.5 * indicator(x[0] < 0.0 && x[1] < 0.0);
    case SimModel::M4: {
      double base = sum_first(x, 0, 40);
      if (k == 0) return base + 5.0 * x[0] * indicator(x[0] > 0.5);
      return base + 5.0 * indicator(x[0] < 0.5 && x[1] > 0.5);
    }
    case SimModel::M5:
      if (k == 0) return -0.7 * x[0] - 0.7;
      if (k == 1) return -1.5 * x[0] - 1.1;
      return x[0] - 1.0;
    case SimModel::M6: {
      // Column 0 is x0 (level code, 0 == K1); x1..x40 follow.
      double base = sum_first(x, 1, 40);
      const double x1 = x[1];
      if (k == 0 || k == 1) return base + 5.0 * x1 * indicator(x1 > 0.5);
      if (k == 2) return base + 10.0 * indicator(x1 < 0.0 && x[0] == 0.0);
      return base;
    }
    case SimModel::Demo:
      if (k == 0) return -0.7 * x[0];
      if (k == 1) return -1.5 * x[0] + 0.2;
      return x[0] - 1.0;
  }
  throw std::invalid_argument("unknown model");
}

TreatmentSet true_best_set(const SimModelSpec& spec, std::span<const double> x) {
  std::vector<double> f(spec.treatments);
  for (std::size_t k = 0; k < spec.treatments; ++k) f[k] = true_effect(spec, x, k);
  double best = f[0];
  for (double v : f) best = std::max(best, v);
  TreatmentSet s;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (f[k] == best) s.insert(k);
  return s;
}

Simulation generate_model(const SimModelSpec& spec, std::size_t n, RandomStream& rng) {
  if (n == 0) throw std::invalid_argument("simulation needs n >= 1");
  const std::size_t p = num_features(spec);
  const auto schema = model_schema(spec);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  std::vector<double> y(n);
  std::vector<std::size_t> t(n);
  std::vector<TreatmentSet> oracle(n);
  std::vector<double> x(p);
  const double laplace_scale = spec.noise_sd / std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x[j] = schema[j].kind.is_categorical() ? static_cast<double>(rng.index(schema[j].kind.levels.size()))
                                             : rng.uniform(-1.0, 1.0);
      cols[j][i] = x[j];
    }
    t[i] = rng.index(spec.treatments);
    double noise;
    if (spec.noise == NoiseKind::normal) {
      noise = rng.normal(0.0, spec.noise_sd);
    } else {
      double u = rng.uniform(-0.5, 0.5);
      while (u == -0.5) u = rng.uniform(-0.5, 0.5);
      noise = -laplace_scale * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
    }
    y[i] = true_effect(spec, x, t[i]) + noise;
    oracle[i] = true_best_set(spec, x);
  }
  return {Dataset(schema, std::move(cols), std::move(y), std::move(t), model_treatments(spec)), std::move(oracle)};
}

std::string format_oracle(const std::vector<TreatmentSet>& oracle, const std::vector<std::string>& names) {
  std::string out = "row,best\n";
  for (std::size_t i = 0; i < oracle.size(); ++i) out += std::to_string(i + 1) + "," + format_set(oracle[i], names) + "\n";
  return out;
}

std::vector<TreatmentSet> parse_oracle(const std::string& text, const std::vector<std::string>& names) {
  RawTable raw = parse_csv(text);
  const std::size_t col = raw.column("best");
  std::vector<TreatmentSet> out;
  for (const auto& r : raw.rows) out.push_back(parse_set(r[col], names));
  return out;
}

}  // namespace psica
