#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>

#include "psica/pipeline.hpp"
#include "psica/serialize.hpp"
#include "psica/simulate.hpp"

using namespace psica;

namespace {

struct Fitted {
  Dataset data;
  PipelineResult result;
};

const Fitted& m6_fit() {
  static const Fitted f = [] {
    RandomStream rng(11);
    auto sim = generate_model(model_spec(SimModel::M6), 240, rng);
    PipelineConfig c;
    c.B = 100;
    c.trees = 20;
    c.tree.min_leaf = 30;
    c.tree.costs = CostMatrix(4, {0, 1, 2, 3, 1, 0, 1, 2, 2, 1, 0, 1, 3, 2, 1, 0});
    return Fitted{sim.data, run_pipeline(sim.data, c)};
  }();
  return f;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t c = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++c;
  return c;
}

}  // namespace

TEST(TreeJson, RoundTripIsExact) {
  const auto& tree = m6_fit().result.tree;
  ASSERT_GT(tree.num_leaves(), 1u);
  auto text = tree_to_json(tree);
  auto back = tree_from_json(text);
  EXPECT_EQ(back, tree);
  EXPECT_EQ(tree_to_json(back), text);
  auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j.at("format_version").get<int>(), interchange_format_version);
}

TEST(TreeJson, ReloadedTreePredictsIdentically) {
  const auto& f = m6_fit();
  auto back = tree_from_json(tree_to_json(f.result.tree));
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    auto x = f.data.row(i);
    auto a = f.result.tree.predict_label(x), b = back.predict_label(x);
    EXPECT_EQ(a.leaf, b.leaf);
    EXPECT_EQ(a.potential, b.potential);
    EXPECT_EQ(a.trunc_probs, b.trunc_probs);
  }
}

TEST(TreeJson, RejectsBadDocuments) {
  auto j = nlohmann::json::parse(tree_to_json(m6_fit().result.tree));
  j["format_version"] = interchange_format_version + 1;
  EXPECT_THROW(tree_from_json(j.dump()), FormatError);
  EXPECT_THROW(tree_from_json("{not json"), FormatError);
  EXPECT_THROW(tree_from_json("{}"), FormatError);
}

TEST(ForestJson, RoundTripKeepsVariance) {
  RandomStream rng(2);
  auto sim = generate_model(model_spec(SimModel::M6), 120, rng);
  ForestParams p;
  p.num_trees = 15;
  p.min_split = 10;
  auto f = fit_forest(sim.data, p);
  auto back = forest_from_json(forest_to_json(f));
  EXPECT_EQ(back, f);
  auto x = sim.data.row(3);
  EXPECT_EQ(back.predict(x), f.predict(x));
  EXPECT_EQ(back.ij_variance(x), f.ij_variance(x));
}

TEST(Dot, OneBoxPerNode) {
  const auto& tree = m6_fit().result.tree;
  auto dot = tree_to_dot(tree);
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  EXPECT_EQ(count(dot, "->"), tree.nodes().size() - 1);
  EXPECT_EQ(count(dot, "style=rounded"), tree.num_leaves());
  EXPECT_EQ(count(dot, "[label=\""), tree.nodes().size() + 2 * (tree.nodes().size() - tree.num_leaves()));
}

TEST(LeafTable, OneLinePerLeaf) {
  const auto& tree = m6_fit().result.tree;
  auto table = format_leaf_table(tree);
  auto lines = static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n'));
  EXPECT_EQ(lines, tree.num_leaves());
  EXPECT_EQ(count(table, "leaf "), tree.num_leaves());
}
