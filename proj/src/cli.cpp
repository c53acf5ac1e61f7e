#include "psica/cli.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "psica/experiment.hpp"
#include "psica/serialize.hpp"
#include "psica/simulate.hpp"

namespace psica::cli {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
  auto p = prefix;
  p += suffix;
  return p;
}

IngestionSchema fit_schema(const FitOptions& o) {
  if (o.schema_file) return read_schema_file(*o.schema_file);
  IngestionSchema s;
  s.treatment_col = o.treatment_col;
  s.effect_col = o.effect_col;
  for (const auto& decl : o.features) {
    auto eq = decl.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("feature declaration must be name=kind, got '" + decl + "'");
    s.features.push_back({decl.substr(0, eq), parse_feature_kind(decl.substr(eq + 1))});
  }
  return s;
}

}  // namespace

PipelineConfig pipeline_config(const FitOptions& o, std::size_t treatments) {
  PipelineConfig pc;
  pc.probability = parse_probability_method(o.method_prob);
  pc.mtry = parse_mtry(o.mtry);
  pc.B = o.B;
  pc.trees = o.trees;
  pc.forest_min_split = o.forest_min_split;
  pc.tree.method = parse_growth_method(o.method_grow);
  pc.tree.alpha = o.alpha;
  pc.tree.min_leaf = o.min_leaf;
  pc.tree.max_depth = o.max_depth;
  if (o.costs) {
    auto costs = CostMatrix::parse(read_file(*o.costs));
    if (costs.size() != treatments)
      throw std::invalid_argument("cost matrix is " + std::to_string(costs.size()) + "x" +
                                  std::to_string(costs.size()) + " but the data has " + std::to_string(treatments) +
                                  " treatments");
    pc.tree.costs = costs;
  }
  pc.prune.collapse_same_label = o.prune_same_label;
  pc.prune.max_leaves = o.prune_max_leaves;
  pc.prune.min_gain = o.prune_min_gain;
  pc.seed = o.seed;
  pc.threads = o.threads;
  if (pc.B == 0 || pc.trees == 0) throw std::invalid_argument("--B and --trees must be positive");
  if (!(pc.tree.alpha > 0.0 && pc.tree.alpha < 1.0)) throw std::invalid_argument("--alpha must lie in (0, 1)");
  return pc;
}

void cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  if (o.out.empty()) throw std::invalid_argument("--out is required");
  const auto spec = model_spec(parse_model(o.model));
  RandomStream rng(derive_seed(o.seed, {tag(StreamTag::simulate)}));
  auto sim = generate_model(spec, o.n, rng);
  const auto data_path = with_suffix(o.out, ".csv");
  const auto oracle_path = with_suffix(o.out, ".oracle.csv");
  const auto schema_path = with_suffix(o.out, ".schema");
  write_table(sim.data, data_path);
  write_file_atomic(oracle_path, format_oracle(sim.oracle, sim.data.treatment_set()));
  write_schema_file(sim.data, schema_path);
  out << "wrote " << sim.data.size() << " rows to " << data_path.string() << "\n"
      << "wrote oracle to " << oracle_path.string() << "\n"
      << "wrote schema to " << schema_path.string() << "\n";
}

void cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw std::invalid_argument("--out is required");
  const Dataset d = load_table(o.data, fit_schema(o));
  const PipelineConfig pc = pipeline_config(o, d.num_treatments());
  if (pc.probability == ProbabilityMethod::bootstrap && pc.B * d.num_treatments() > o.fit_warning_ceiling)
    err << "warning: bootstrap probabilities fit " << pc.B * d.num_treatments() << " forests of " << pc.trees
        << " trees; this may take a long time\n";
  auto result = run_pipeline(d, pc);
  write_file_atomic(o.out, tree_to_json(result.tree));
  if (o.probabilities_out)
    write_file_atomic(*o.probabilities_out, format_probabilities(result.probabilities, d.treatment_set()));
  out << "PSICA tree: " << result.tree.nodes().size() << " nodes, " << result.tree.num_leaves() << " leaves\n"
      << format_leaf_table(result.tree);
}

std::vector<std::vector<double>> feature_rows(const std::vector<FeatureSpec>& schema, const std::string& csv) {
  RawTable raw = parse_csv(csv);
  std::vector<std::size_t> cols;
  for (const auto& f : schema) cols.push_back(raw.column(f.name));
  std::vector<std::vector<double>> rows(raw.rows.size(), std::vector<double>(schema.size()));
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    auto& x = rows[i];
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto& cell = raw.rows[i][cols[f]];
      if (cell.empty()) throw DataError("missing value at row " + std::to_string(i + 1));
      if (schema[f].kind.is_categorical()) {
        const auto& lv = schema[f].kind.levels;
        auto it = std::find(lv.begin(), lv.end(), cell);
        if (it == lv.end())
          throw DataError("unseen level '" + cell + "' for feature '" + schema[f].name + "' at row " +
                          std::to_string(i + 1));
        x[f] = static_cast<double>(it - lv.begin());
      } else {
        try {
          std::size_t pos = 0;
          x[f] = std::stod(cell, &pos);
          if (pos != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw DataError("non-numeric value '" + cell + "' in column '" + schema[f].name + "' at row " +
                          std::to_string(i + 1));
        }
      }
    }
  }
  return rows;
}

std::string predict_table(const PsicaTree& tree, const std::string& csv) {
  std::string out = "row,leaf,potential";
  for (const auto& t : tree.treatments()) out += ",p_" + t;
  out += "\n";
  const auto rows = feature_rows(tree.schema(), csv);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto label = tree.predict_label(rows[i]);
    out += std::to_string(i + 1) + "," + std::to_string(label.leaf) + "," + format_set(label.potential, tree.treatments());
    for (double p : label.trunc_probs) out += "," + format_double(p);
    out += "\n";
  }
  return out;
}

void cmd_predict(const PredictOptions& o, std::ostream& out) {
  auto tree = tree_from_json(read_file(o.model));
  auto table = predict_table(tree, read_file(o.data));
  if (o.out)
    write_file_atomic(*o.out, table);
  else
    out << table;
}

void cmd_export(const ExportOptions& o, std::ostream& out) {
  auto tree = tree_from_json(read_file(o.model));
  std::string text;
  if (o.format == "graph" || o.format == "dot")
    text = tree_to_dot(tree);
  else if (o.format == "interchange" || o.format == "json")
    text = tree_to_json(tree);
  else
    throw std::invalid_argument("export format must be 'graph' or 'interchange', got '" + o.format + "'");
  if (o.out)
    write_file_atomic(*o.out, text);
  else
    out << text;
}

MetricsReport cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  auto tree = tree_from_json(read_file(o.model));
  const auto rows = feature_rows(tree.schema(), read_file(o.data));
  const auto oracle = parse_oracle(read_file(o.oracle), tree.treatments());
  if (oracle.size() != rows.size())
    throw DataError("oracle has " + std::to_string(oracle.size()) + " rows, data has " + std::to_string(rows.size()));
  std::vector<std::vector<double>> columns(tree.schema().size(), std::vector<double>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t f = 0; f < columns.size(); ++f) columns[f][i] = rows[i][f];
  // Metrics only read features, so effects and treatments are placeholders.
  const Dataset d(tree.schema(), std::move(columns), std::vector<double>(rows.size(), 0.0),
                  std::vector<std::size_t>(rows.size(), 0), tree.treatments());
  std::vector<bool> relevant(tree.schema().size(), true);
  if (o.sim_model) relevant = relevant_features(model_spec(parse_model(*o.sim_model)));
  if (relevant.size() != tree.schema().size())
    throw std::invalid_argument("simulation model does not match the tree's features");
  auto m = evaluate(tree, d, oracle, relevant);
  out << "accuracy " << format_double(m.accuracy) << "\n"
      << "uncertainty " << format_double(m.uncertainty) << "\n"
      << "decision_accuracy " << format_double(m.decision_accuracy) << "\n";
  if (o.sim_model) out << "suspect " << format_double(m.suspect) << "\n";
  return m;
}

std::size_t cmd_experiment(const ExperimentOptions& o, std::ostream& out) {
  if (o.out.empty()) throw std::invalid_argument("--out is required");
  auto config = parse_experiment_config(read_file(o.config));
  if (o.threads) config.threads = *o.threads;
  auto report = run_experiment(config);
  write_file_atomic(with_suffix(o.out, ".raw.csv"), format_records(report.records));
  write_file_atomic(with_suffix(o.out, ".summary.csv"), format_summary(report.cells));
  auto text = format_summary_text(report.cells);
  write_file_atomic(with_suffix(o.out, ".summary.txt"), text);
  out << text;
  std::size_t failed = 0;
  for (const auto& r : report.records) {
    if (r.ok) continue;
    ++failed;
    out << "replicate failed: " << to_string(r.model) << " n=" << r.n << " " << to_string(r.method) << " #"
        << r.replicate + 1 << ": " << r.message << "\n";
  }
  return failed;
}

}  // namespace psica::cli
