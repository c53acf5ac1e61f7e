#include <gtest/gtest.h>

#include <cmath>

#include "psica/bestprob.hpp"
#include "psica/pipeline.hpp"
#include "psica/simulate.hpp"
#include "test_util.hpp"

using namespace psica;

namespace {

// Two arms on x in [-1, 1]: arm A has mean a0 + a1*x, arm B has mean b0 + b1*x.
Dataset two_arm_linear(std::size_t n, double a0, double a1, double b0, double b1, double sd, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> x(n), y(n);
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-1, 1);
    t[i] = i % 2;
    y[i] = (t[i] == 0 ? a0 + a1 * x[i] : b0 + b1 * x[i]) + rng.normal(0, sd);
  }
  return test::one_feature(x, y, t);
}

ForestParams small_forest(std::uint64_t seed) {
  ForestParams p;
  p.num_trees = 50;
  p.min_split = 0;
  p.seed = seed;
  return p;
}

}  // namespace

TEST(BestProbabilities, DirectCount) {
  EffectSamples s(1, 4, 2);
  double v[4][2] = {{1, 0}, {0, 1}, {2, 1}, {3, 0}};
  for (int b = 0; b < 4; ++b)
    for (int k = 0; k < 2; ++k) s.at(0, b, k) = v[b][k];
  auto p = compute_best_probabilities(s);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.25);
}

TEST(BestProbabilities, TiesSplitEvenly) {
  EffectSamples s(2, 3, 3);
  for (int i = 0; i < 2; ++i)
    for (int b = 0; b < 3; ++b)
      for (int k = 0; k < 3; ++k) s.at(i, b, k) = b;
  auto p = compute_best_probabilities(s);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(p(i, k), 1.0 / 3.0, 1e-15);
  EXPECT_LE(p.max_row_error(), 1e-12);
}

TEST(Method1, ConstantArmsSingleDraw) {
  auto d = test::one_feature({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {2, 5, 2, 5, 2, 5}, {0, 1, 0, 1, 0, 1});
  auto s = sample_effects_method1(d, 1, small_forest(1));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(s.at(i, 0, 0), 2.0);
    EXPECT_DOUBLE_EQ(s.at(i, 0, 1), 5.0);
  }
}

TEST(Method1, DeterministicUnderThreads) {
  auto d = two_arm_linear(80, 0, 1, 0.2, -1, 0.3, 4);
  auto p = small_forest(9);
  p.num_trees = 10;
  p.threads = 1;
  auto a = sample_effects_method1(d, 6, p);
  p.threads = 3;
  auto b = sample_effects_method1(d, 6, p);
  EXPECT_EQ(a, b);
}

TEST(Method1, MeansTrackArmMeans) {
  auto d = two_arm_linear(200, 0, 0, 1, 0, 0.1, 5);
  auto p = small_forest(3);
  p.num_trees = 20;
  p.min_leaf = 5;  // near-interpolating leaves would leave single-row noise
  auto s = sample_effects_method1(d, 20, p);
  for (std::size_t i = 0; i < d.size(); i += 17) {
    if (std::abs(d.feature(i, 0)) > 0.8) continue;
    double m0 = 0, m1 = 0;
    for (std::size_t b = 0; b < 20; ++b) m0 += s.at(i, b, 0) / 20, m1 += s.at(i, b, 1) / 20;
    // Draws resample one fixed sample, so local noise in leaves of five rows
    // (se 0.045) shifts every draw alike.
    EXPECT_NEAR(m0, 0.0, 0.15);
    EXPECT_NEAR(m1, 1.0, 0.15);
  }
}

TEST(Method2, ConstantDataDrawsEqualMean) {
  auto d = test::one_feature({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {2, 5, 2, 5, 2, 5}, {0, 1, 0, 1, 0, 1});
  auto s = sample_effects_method2(d, 30, small_forest(1));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t b = 0; b < 30; ++b) {
      EXPECT_NEAR(s.at(i, b, 0), 2.0, 1e-4);
      EXPECT_NEAR(s.at(i, b, 1), 5.0, 1e-4);
    }
}

TEST(Method2, GaussianSampleMean) {
  auto d = two_arm_linear(120, 0, 1, 0, -1, 0.5, 6);
  auto fp = small_forest(2);
  const std::size_t B = 10000;
  auto s = sample_effects_method2(d, B, fp);
  // Rebuild the arm forests the sampler used to get M_k and sigma_k.
  auto arms = partition_by_treatment(d);
  for (std::size_t k = 0; k < 2; ++k) {
    ForestParams p = fp;
    p.seed = derive_seed(fp.seed, {tag(StreamTag::method2_fit), k});
    auto f = fit_forest(arms[k], p);
    for (std::size_t i = 0; i < d.size(); i += 13) {
      auto x = d.row(i);
      double mean = 0;
      for (std::size_t b = 0; b < B; ++b) mean += s.at(i, b, k) / static_cast<double>(B);
      double sd = std::sqrt(f.ij_variance(x));
      EXPECT_NEAR(mean, f.predict(x), 4 * sd / std::sqrt(static_cast<double>(B)) + 1e-12);
    }
  }
}

TEST(Method2, RowsAreIndependent) {
  auto d = two_arm_linear(60, 0, 1, 0, -1, 0.5, 7);
  const std::size_t B = 4000;
  auto s = sample_effects_method2(d, B, small_forest(3));
  // Correlation of the draws at two different rows.
  for (std::size_t i : {1u, 10u, 30u}) {
    std::size_t j = i + 1;
    double mi = 0, mj = 0;
    for (std::size_t b = 0; b < B; ++b) mi += s.at(i, b, 0) / B, mj += s.at(j, b, 0) / B;
    double cij = 0, vi = 0, vj = 0;
    for (std::size_t b = 0; b < B; ++b) {
      double a = s.at(i, b, 0) - mi, c = s.at(j, b, 0) - mj;
      cij += a * c, vi += a * a, vj += c * c;
    }
    if (vi == 0 || vj == 0) continue;
    EXPECT_LT(std::abs(cij / std::sqrt(vi * vj)), 0.1);
  }
}

TEST(Estimate, ConstantArmsFavorHigherArm) {
  auto d = test::one_feature({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {5, 2, 5, 2, 5, 2}, {0, 1, 0, 1, 0, 1});
  auto p = estimate_probabilities(d, ProbabilityMethod::jackknife, 50, small_forest(1));
  EXPECT_EQ(p.method_tag(), 2);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(p(i, 0), 1.0, 1e-12);
    EXPECT_NEAR(p(i, 1), 0.0, 1e-12);
  }
}

TEST(Estimate, Method1IsComposition) {
  auto d = two_arm_linear(60, 0, 1, 0, -1, 0.3, 8);
  auto fp = small_forest(4);
  fp.num_trees = 10;
  auto p = estimate_probabilities(d, ProbabilityMethod::bootstrap, 8, fp);
  auto q = compute_best_probabilities(sample_effects_method1(d, 8, fp));
  EXPECT_EQ(p.method_tag(), 1);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(p(i, k), q(i, k));
}

TEST(Estimate, MethodsAgreeOnLinearModel) {
  auto d = two_arm_linear(300, 0, 1, 0, -1, 0.5, 9);
  auto fp = small_forest(5);
  fp.num_trees = 30;
  auto p1 = estimate_probabilities(d, ProbabilityMethod::bootstrap, 100, fp);
  auto p2 = estimate_probabilities(d, ProbabilityMethod::jackknife, 200, fp);
  double total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) total += std::abs(p1(i, 0) - p2(i, 0));
  // Per-entry agreement on average, with every entry bounded more loosely.
  EXPECT_LT(total / d.size(), 0.15);
}

TEST(Estimate, ShiftInvarianceOfMethod1) {
  auto d = two_arm_linear(80, 0, 1, 0.1, -1, 0.3, 10);
  std::vector<double> shifted(d.effects().begin(), d.effects().end());
  for (double& y : shifted) y += 3.0;
  auto fp = small_forest(6);
  fp.num_trees = 10;
  auto a = estimate_probabilities(d, ProbabilityMethod::bootstrap, 10, fp);
  auto b = estimate_probabilities(d.with_effects(shifted), ProbabilityMethod::bootstrap, 10, fp);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(a(i, 0), b(i, 0), 1e-9);
}

TEST(Estimate, ShiftInvarianceOfMethod2InDistribution) {
  auto d = two_arm_linear(100, 0, 1, 0.1, -1, 0.3, 11);
  std::vector<double> shifted(d.effects().begin(), d.effects().end());
  for (double& y : shifted) y += 3.0;
  const std::size_t B = 400;
  auto a = estimate_probabilities(d, ProbabilityMethod::jackknife, B, small_forest(7));
  auto b = estimate_probabilities(d.with_effects(shifted), ProbabilityMethod::jackknife, B, small_forest(7));
  for (std::size_t i = 0; i < d.size(); ++i) {
    double pi = a(i, 0);
    EXPECT_LE(std::abs(a(i, 0) - b(i, 0)), 3 * std::sqrt(pi * (1 - pi) / B) + 0.02);
  }
}

TEST(Estimate, RaisedArmDominates) {
  auto d = two_arm_linear(100, 0, 1, 0.1, -1, 0.3, 12);
  std::vector<double> y(d.effects().begin(), d.effects().end());
  for (std::size_t i = 0; i < y.size(); ++i)
    if (d.treatments()[i] == 1) y[i] += 100.0;
  auto p = estimate_probabilities(d.with_effects(y), ProbabilityMethod::jackknife, 100, small_forest(8));
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(p(i, 1), 1.0, 1e-12);
}

TEST(Estimate, M5LeftEndFavorsSecondTreatment) {
  auto spec = model_spec(SimModel::M5);
  RandomStream rng(31);
  auto sim = generate_model(spec, 1800, rng);
  PipelineConfig pc;
  pc.B = 500;
  auto p = estimate_probabilities(sim.data, ProbabilityMethod::jackknife, pc.B, forest_params(pc, sim.data));
  double mass = 0, count = 0;
  for (std::size_t i = 0; i < sim.data.size(); ++i)
    if (sim.data.feature(i, 0) < -0.9) mass += p(i, 1), count += 1;
  ASSERT_GT(count, 0);
  EXPECT_GE(mass / count, 0.9);
}

TEST(Estimate, RowsSumToOne) {
  RandomStream rng(13);
  auto sim = generate_model(model_spec(SimModel::M6), 200, rng);
  auto fp = small_forest(9);
  fp.num_trees = 20;
  fp.mtry = 15;
  auto p = estimate_probabilities(sim.data, ProbabilityMethod::jackknife, 100, fp);
  EXPECT_LE(p.max_row_error(), 1e-9);
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < p.cols(); ++k) {
      EXPECT_GE(p(i, k), 0.0);
      EXPECT_LE(p(i, k), 1.0);
    }
}

TEST(ProbabilityTable, RoundTrip) {
  ProbabilityMatrix p(2, 3);
  p(0, 0) = 0.1, p(0, 1) = 0.2, p(0, 2) = 0.7;
  p(1, 0) = 1.0 / 3, p(1, 1) = 1.0 / 3, p(1, 2) = 1.0 / 3;
  auto q = parse_probabilities(format_probabilities(p, {"A", "B", "C"}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(p(i, k), q(i, k));
}
