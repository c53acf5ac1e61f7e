#include "psica/bestprob.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "psica/parallel.hpp"

namespace psica {

ProbabilityMethod parse_probability_method(const std::string& text) {
  if (text == "bootstrap" || text == "1") return ProbabilityMethod::bootstrap;
  if (text == "jackknife" || text == "2") return ProbabilityMethod::jackknife;
  throw std::invalid_argument("probability method must be 'bootstrap' or 'jackknife', got '" + text + "'");
}

std::string to_string(ProbabilityMethod m) { return m == ProbabilityMethod::bootstrap ? "bootstrap" : "jackknife"; }

EffectSamples::EffectSamples(std::size_t n, std::size_t B, std::size_t m) : n_(n), B_(B), m_(m), values_(n * B * m) {
  if (B == 0) throw std::invalid_argument("number of draws B must be positive");
}

ProbabilityMatrix::ProbabilityMatrix(std::size_t n, std::size_t m, std::size_t B, int method_tag)
    : n_(n), m_(m), B_(B), method_tag_(method_tag), values_(n * m, 0.0) {}

double ProbabilityMatrix::max_row_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m_; ++k) s += (*this)(i, k);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

namespace {

std::vector<std::vector<double>> all_rows(const Dataset& d) {
  std::vector<std::vector<double>> rows(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) rows[i] = d.row(i);
  return rows;
}

}  // namespace

EffectSamples sample_effects_method1(const Dataset& d, std::size_t B, const ForestParams& params) {
  const std::size_t n = d.size(), m = d.num_treatments();
  EffectSamples out(n, B, m);
  const auto arms = partition_by_treatment(d);
  const auto rows = all_rows(d);
  parallel_for(B * m, params.threads, [&](std::size_t job) {
    const std::size_t b = job / m, k = job % m;
    RandomStream rng(derive_seed(params.seed, {tag(StreamTag::method1_fit), b, k}));
    Dataset resample = bootstrap_resample(arms[k], rng);
    ForestParams fp = params;
    fp.seed = rng.engine()();
    fp.threads = 1;
    ForestModel forest = fit_forest(resample, fp);
    for (std::size_t i = 0; i < n; ++i) out.at(i, b, k) = forest.predict(rows[i]);
  });
  return out;
}

EffectSamples sample_effects_method2(const Dataset& d, std::size_t B, const ForestParams& params) {
  const std::size_t n = d.size(), m = d.num_treatments();
  EffectSamples out(n, B, m);
  const auto arms = partition_by_treatment(d);
  const auto rows = all_rows(d);
  for (std::size_t k = 0; k < m; ++k) {
    ForestParams fp = params;
    fp.seed = derive_seed(params.seed, {tag(StreamTag::method2_fit), k});
    ForestModel forest = fit_forest(arms[k], fp);
    parallel_for(n, params.threads, [&](std::size_t i) {
      const double mean = forest.predict(rows[i]);
      const double sd = std::sqrt(forest.ij_variance(rows[i]));
      RandomStream rng(derive_seed(params.seed, {tag(StreamTag::method2_draw), i, k}));
      for (std::size_t b = 0; b < B; ++b) out.at(i, b, k) = sd > 0 ? rng.normal(mean, sd) : mean;
    });
  }
  return out;
}

ProbabilityMatrix compute_best_probabilities(const EffectSamples& s) {
  const std::size_t n = s.rows(), B = s.draws(), m = s.treatments();
  ProbabilityMatrix p(n, m, B);
  std::vector<double> acc(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      double best = s.at(i, b, 0);
      for (std::size_t k = 1; k < m; ++k) best = std::max(best, s.at(i, b, k));
      std::size_t ties = 0;
      for (std::size_t k = 0; k < m; ++k) ties += s.at(i, b, k) == best;
      const double share = 1.0 / static_cast<double>(ties);
      for (std::size_t k = 0; k < m; ++k)
        if (s.at(i, b, k) == best) acc[k] += share;
    }
    for (std::size_t k = 0; k < m; ++k) p(i, k) = acc[k] / static_cast<double>(B);
  }
  return p;
}

ProbabilityMatrix estimate_probabilities(const Dataset& d, ProbabilityMethod method, std::size_t B,
                                         const ForestParams& params) {
  const EffectSamples s = method == ProbabilityMethod::bootstrap ? sample_effects_method1(d, B, params)
                                                                 : sample_effects_method2(d, B, params);
  ProbabilityMatrix reduced = compute_best_probabilities(s);
  ProbabilityMatrix p(reduced.rows(), reduced.cols(), B, static_cast<int>(method));
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < p.cols(); ++k) p(i, k) = reduced(i, k);
  return p;
}

std::string format_probabilities(const ProbabilityMatrix& p, const std::vector<std::string>& treatments) {
  std::string out = "row";
  for (const auto& t : treatments) out += "," + t;
  out += "\n";
  for (std::size_t i = 0; i < p.rows(); ++i) {
    out += std::to_string(i + 1);
    for (std::size_t k = 0; k < p.cols(); ++k) out += "," + format_double(p(i, k));
    out += "\n";
  }
  return out;
}

ProbabilityMatrix parse_probabilities(const std::string& text) {
  RawTable raw = parse_csv(text);
  if (raw.header.size() < 3) throw DataError("probability table needs a row column and at least two treatments");
  const std::size_t m = raw.header.size() - 1;
  ProbabilityMatrix p(raw.rows.size(), m);
  for (std::size_t i = 0; i < raw.rows.size(); ++i)
    for (std::size_t k = 0; k < m; ++k) p(i, k) = std::stod(raw.rows[i][k + 1]);
  return p;
}

}  // namespace psica
