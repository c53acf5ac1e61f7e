#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "psica/cli.hpp"
#include "psica/serialize.hpp"
#include "psica/simulate.hpp"
#include "test_util.hpp"

using namespace psica;
using namespace psica::cli;

namespace {

std::filesystem::path simulate(const std::filesystem::path& dir, const std::string& model, std::size_t n,
                               std::uint64_t seed, const std::string& name = "sim") {
  std::ostringstream log;
  SimulateOptions o;
  o.model = model;
  o.n = n;
  o.seed = seed;
  o.out = dir / name;
  cmd_simulate(o, log);
  return o.out;
}

FitOptions quick_fit(const std::filesystem::path& prefix, const std::filesystem::path& out) {
  FitOptions f;
  f.data = prefix.string() + ".csv";
  f.schema_file = prefix.string() + ".schema";
  f.B = 60;
  f.trees = 15;
  f.out = out;
  return f;
}

}  // namespace

TEST(CliSimulate, ReproducibleFiles) {
  auto dir = test::scratch_dir("cli_sim");
  auto a = simulate(dir, "M5", 90, 3, "a"), b = simulate(dir, "M5", 90, 3, "b");
  for (const char* ext : {".csv", ".oracle.csv", ".schema"})
    EXPECT_EQ(read_file(a.string() + ext), read_file(b.string() + ext)) << ext;
  auto c = simulate(dir, "M5", 90, 4, "c");
  EXPECT_NE(read_file(a.string() + ".csv"), read_file(c.string() + ".csv"));
}

TEST(CliSimulate, OracleMatchesData) {
  auto dir = test::scratch_dir("cli_oracle");
  auto p = simulate(dir, "M6", 50, 2);
  auto d = load_table(p.string() + ".csv", read_schema_file(p.string() + ".schema"));
  auto spec = model_spec(SimModel::M6);
  auto oracle = parse_oracle(read_file(p.string() + ".oracle.csv"), d.treatment_set());
  ASSERT_EQ(oracle.size(), 50u);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(oracle[i], true_best_set(spec, d.row(i)));
}

TEST(CliFit, ConstantEffectsGiveOneLeafWithAllTreatments) {
  auto dir = test::scratch_dir("cli_const");
  std::string csv = "x,treatment,effect\n";
  for (int i = 0; i < 40; ++i)
    csv += std::to_string(i * 0.025) + "," + (i % 3 == 0 ? "A" : i % 3 == 1 ? "B" : "C") + ",1.5\n";
  write_file_atomic(dir / "const.csv", csv);
  FitOptions f;
  f.data = dir / "const.csv";
  f.B = 30;
  f.trees = 10;
  f.out = dir / "tree.json";
  std::ostringstream out, err;
  cmd_fit(f, out, err);
  auto tree = tree_from_json(read_file(f.out));
  EXPECT_EQ(tree.num_leaves(), 1u);
  EXPECT_EQ(tree.root().summary.potential, TreatmentSet::all(3));
  EXPECT_NE(out.str().find("1 leaves"), std::string::npos);
}

TEST(CliFit, RefitIsByteIdentical) {
  auto dir = test::scratch_dir("cli_refit");
  auto p = simulate(dir, "M5", 150, 1);
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t1.json");
  f.probabilities_out = dir / "p1.csv";
  cmd_fit(f, out, err);
  f.out = dir / "t2.json";
  f.probabilities_out = dir / "p2.csv";
  f.threads = 3;
  cmd_fit(f, out, err);
  EXPECT_EQ(read_file(dir / "t1.json"), read_file(dir / "t2.json"));
  EXPECT_EQ(read_file(dir / "p1.csv"), read_file(dir / "p2.csv"));
}

TEST(CliFit, BootstrapCostWarning) {
  auto dir = test::scratch_dir("cli_warn");
  auto p = simulate(dir, "M1", 60, 1);
  auto f = quick_fit(p, dir / "t.json");
  f.method_prob = "bootstrap";
  f.B = 10;
  f.trees = 3;
  f.fit_warning_ceiling = 5;
  std::ostringstream out, err;
  cmd_fit(f, out, err);
  EXPECT_NE(err.str().find("warning"), std::string::npos);
}

TEST(CliFit, RejectsBadOptions) {
  auto dir = test::scratch_dir("cli_bad");
  auto p = simulate(dir, "M1", 60, 1);
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t.json");
  f.alpha = 1.0;
  EXPECT_THROW(cmd_fit(f, out, err), std::invalid_argument);
  f = quick_fit(p, dir / "t.json");
  write_file_atomic(dir / "costs.txt", "0,1,1\n1,0,1\n1,1,0\n");
  f.costs = dir / "costs.txt";
  EXPECT_THROW(cmd_fit(f, out, err), std::invalid_argument);
  f = quick_fit(p, dir / "t.json");
  f.method_prob = "magic";
  EXPECT_THROW(cmd_fit(f, out, err), std::invalid_argument);
}

TEST(CliPredict, MatchesTreePrediction) {
  auto dir = test::scratch_dir("cli_predict");
  auto p = simulate(dir, "M6", 160, 5);
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t.json");
  f.min_leaf = 20;
  cmd_fit(f, out, err);
  auto tree = tree_from_json(read_file(f.out));
  auto d = load_table(p.string() + ".csv", read_schema_file(p.string() + ".schema"));
  auto table = parse_csv(predict_table(tree, read_file(p.string() + ".csv")));
  ASSERT_EQ(table.rows.size(), d.size());
  EXPECT_EQ(table.header[2], "potential");
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto lab = tree.predict_label(d.row(i));
    EXPECT_EQ(table.rows[i][1], std::to_string(lab.leaf));
    EXPECT_EQ(table.rows[i][2], format_set(lab.potential, tree.treatments()));
    for (std::size_t k = 0; k < lab.trunc_probs.size(); ++k)
      EXPECT_EQ(std::stod(table.rows[i][3 + k]), lab.trunc_probs[k]);
  }
}

TEST(CliPredict, ReportsBadRows) {
  auto dir = test::scratch_dir("cli_predict_bad");
  auto p = simulate(dir, "M6", 120, 6);
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t.json");
  cmd_fit(f, out, err);
  auto tree = tree_from_json(read_file(f.out));
  std::string header = "x0";
  for (std::size_t j = 1; j < tree.schema().size(); ++j) header += "," + tree.schema()[j].name;
  std::string zeros;
  for (std::size_t j = 1; j < tree.schema().size(); ++j) zeros += ",0";
  auto level = tree.schema()[0].kind.levels.front();
  EXPECT_NO_THROW(predict_table(tree, header + "\n" + level + zeros + "\n"));
  EXPECT_THROW(predict_table(tree, header + "\nnope" + zeros + "\n"), DataError);
  EXPECT_THROW(predict_table(tree, header + "\n" + zeros + "\n"), DataError);
  EXPECT_THROW(predict_table(tree, header + "\n" + level + ",abc" + zeros.substr(2) + "\n"), DataError);
}

TEST(CliExport, GraphAndInterchange) {
  auto dir = test::scratch_dir("cli_export");
  auto p = simulate(dir, "M5", 150, 2);
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t.json");
  cmd_fit(f, out, err);
  auto tree = tree_from_json(read_file(f.out));
  std::ostringstream dot, json;
  cmd_export({f.out, "graph", std::nullopt}, dot);
  cmd_export({f.out, "interchange", std::nullopt}, json);
  EXPECT_EQ(dot.str(), tree_to_dot(tree));
  EXPECT_EQ(json.str(), read_file(f.out));
  std::ostringstream sink;
  EXPECT_THROW(cmd_export({f.out, "pdf", std::nullopt}, sink), std::invalid_argument);
}

TEST(CliExperiment, WritesOutputs) {
  auto dir = test::scratch_dir("cli_experiment");
  write_file_atomic(dir / "exp.cfg", "models=M1\nn=90\nmethods=m1\nreplicates=2\nB=30\ntrees=8\n");
  std::ostringstream out;
  auto failed = cmd_experiment({dir / "exp.cfg", dir / "res", std::nullopt}, out);
  EXPECT_EQ(failed, 0u);
  for (const char* ext : {".raw.csv", ".summary.csv", ".summary.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir.string() + "/res" + ext)) << ext;
}

TEST(CliPredict, RootOnlyModelGivesIdenticalRows) {
  auto dir = test::scratch_dir("cli_root_only");
  std::string csv = "x,treatment,effect\n";
  for (int i = 0; i < 30; ++i) csv += std::to_string(i) + "," + (i % 2 ? "A" : "B") + ",2\n";
  write_file_atomic(dir / "c.csv", csv);
  FitOptions f;
  f.data = dir / "c.csv";
  f.B = 20;
  f.trees = 5;
  f.out = dir / "t.json";
  std::ostringstream out, err;
  cmd_fit(f, out, err);
  auto table = parse_csv(predict_table(tree_from_json(read_file(f.out)), csv));
  ASSERT_EQ(table.rows.size(), 30u);
  for (const auto& row : table.rows)
    EXPECT_EQ(std::vector<std::string>(row.begin() + 1, row.end()),
              std::vector<std::string>(table.rows[0].begin() + 1, table.rows[0].end()));
  std::ostringstream dot;
  cmd_export({f.out, "graph", std::nullopt}, dot);
  EXPECT_EQ(dot.str().find("->"), std::string::npos);
}

TEST(CliPredict, ThousandRowRun) {
  auto dir = test::scratch_dir("cli_predict_1000");
  auto p = simulate(dir, "M5", 200, 8);
  auto q = simulate(dir, "M5", 1000, 9, "big");
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t.json");
  cmd_fit(f, out, err);
  std::ostringstream table;
  cmd_predict({f.out, q.string() + ".csv", std::nullopt}, table);
  auto s = table.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1001);
}

TEST(CliExport, DemoLabelsAppearVerbatim) {
  auto dir = test::scratch_dir("cli_export_demo");
  auto p = simulate(dir, "demo", 600, 1);
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t.json");
  f.min_leaf = 60;
  f.prune_same_label = true;
  cmd_fit(f, out, err);
  auto tree = tree_from_json(read_file(f.out));
  std::ostringstream dot;
  cmd_export({f.out, "graph", std::nullopt}, dot);
  for (auto leaf : tree.leaves()) {
    auto label = "label: {" + format_set(tree.nodes()[leaf].summary.potential, tree.treatments()) + "}";
    EXPECT_NE(dot.str().find(label), std::string::npos) << label;
    EXPECT_NE(out.str().find(label), std::string::npos) << label;
  }
}

TEST(CliEvaluate, MatchesInProcessMetrics) {
  auto dir = test::scratch_dir("cli_evaluate");
  auto p = simulate(dir, "M2", 200, 3);
  auto q = simulate(dir, "M2", 200, 4, "test");
  std::ostringstream out, err;
  auto f = quick_fit(p, dir / "t.json");
  cmd_fit(f, out, err);
  std::ostringstream text;
  auto m = cmd_evaluate({f.out, q.string() + ".csv", q.string() + ".oracle.csv", std::string("M2")}, text);
  auto tree = tree_from_json(read_file(f.out));
  auto d = load_table(q.string() + ".csv", read_schema_file(q.string() + ".schema"));
  auto oracle = parse_oracle(read_file(q.string() + ".oracle.csv"), d.treatment_set());
  auto direct = evaluate(tree, d, oracle, relevant_features(model_spec(SimModel::M2)));
  EXPECT_EQ(m.accuracy, direct.accuracy);
  EXPECT_EQ(m.uncertainty, direct.uncertainty);
  EXPECT_EQ(m.suspect, direct.suspect);
  EXPECT_EQ(m.decision_accuracy, direct.decision_accuracy);
  EXPECT_NE(text.str().find("suspect"), std::string::npos);
  auto short_oracle = dir / "short.csv";
  write_file_atomic(short_oracle, "row,best\n1,A\n");
  std::ostringstream sink;
  EXPECT_THROW(cmd_evaluate({f.out, q.string() + ".csv", short_oracle, std::nullopt}, sink), DataError);
}
