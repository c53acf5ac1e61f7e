#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "psica/experiment.hpp"
#include "psica/pipeline.hpp"
#include "psica/serialize.hpp"
#include "psica/simulate.hpp"

namespace py = pybind11;
using namespace psica;

namespace {

std::vector<std::string> set_names(TreatmentSet s, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (auto k : s.indices()) out.push_back(names[k]);
  return out;
}

std::vector<std::vector<double>> rows_of(const ProbabilityMatrix& p) {
  std::vector<std::vector<double>> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i].assign(p.row(i).begin(), p.row(i).end());
  return out;
}

ProbabilityMatrix matrix_of(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("probability matrix needs at least one row");
  ProbabilityMatrix p(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p.cols()) throw std::invalid_argument("probability rows differ in length");
    for (std::size_t k = 0; k < p.cols(); ++k) p(i, k) = rows[i][k];
  }
  return p;
}

// (name, kind) pairs, kinds as accepted by parse_feature_kind.
std::vector<FeatureSpec> schema_of_pairs(const std::vector<std::pair<std::string, std::string>>& features) {
  std::vector<FeatureSpec> out;
  for (const auto& [name, kind] : features) out.push_back({name, parse_feature_kind(kind)});
  return out;
}

std::vector<std::size_t> treatment_indices(const std::vector<std::string>& labels,
                                           const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (const auto& l : labels) {
    auto it = std::find(names.begin(), names.end(), l);
    if (it == names.end()) throw std::invalid_argument("treatment '" + l + "' is not in the treatment set");
    out.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  return out;
}

py::dict label_dict(const LeafLabel& l, const std::vector<std::string>& names) {
  py::dict d;
  d["leaf"] = l.leaf;
  d["potential"] = set_names(l.potential, names);
  d["probabilities"] = l.trunc_probs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Subgroup identification from best-treatment probabilities";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const std::vector<std::pair<std::string, std::string>>& features,
                       std::vector<std::vector<double>> columns, std::vector<double> effects,
                       const std::vector<std::string>& treatments, std::vector<std::string> treatment_set) {
             auto idx = treatment_indices(treatments, treatment_set);
             return Dataset(schema_of_pairs(features), std::move(columns), std::move(effects), std::move(idx),
                            std::move(treatment_set));
           }),
           py::arg("features"), py::arg("columns"), py::arg("effects"), py::arg("treatments"),
           py::arg("treatment_set"))
      .def_static(
          "load",
          [](const std::filesystem::path& path, const std::string& treatment_col, const std::string& effect_col) {
            IngestionSchema s;
            s.treatment_col = treatment_col;
            s.effect_col = effect_col;
            return load_table(path, s);
          },
          py::arg("path"), py::arg("treatment_col") = "treatment", py::arg("effect_col") = "effect")
      .def("__len__", &Dataset::size)
      .def_property_readonly("feature_names",
                             [](const Dataset& d) {
                               std::vector<std::string> out;
                               for (const auto& f : d.schema()) out.push_back(f.name);
                               return out;
                             })
      .def_property_readonly("treatment_set", &Dataset::treatment_set)
      .def("row", &Dataset::row)
      .def_property_readonly("effects",
                             [](const Dataset& d) { return std::vector<double>(d.effects().begin(), d.effects().end()); })
      .def("to_csv", &format_table);

  m.def(
      "simulate",
      [](const std::string& model, std::size_t n, std::uint64_t seed) {
        const auto spec = model_spec(parse_model(model));
        RandomStream rng(derive_seed(seed, {tag(StreamTag::simulate)}));
        auto sim = generate_model(spec, n, rng);
        std::vector<std::vector<std::string>> oracle;
        for (auto s : sim.oracle) oracle.push_back(set_names(s, sim.data.treatment_set()));
        return py::make_tuple(sim.data, oracle);
      },
      py::arg("model"), py::arg("n"), py::arg("seed") = 1,
      "Simulated trial data and the true best-treatment set of every row.");

  py::class_<PsicaTree>(m, "Tree")
      .def_static("from_json", &tree_from_json)
      .def("to_json", &tree_to_json)
      .def("to_dot", &tree_to_dot)
      .def("leaf_table", &format_leaf_table)
      .def_property_readonly("num_nodes", [](const PsicaTree& t) { return t.nodes().size(); })
      .def_property_readonly("num_leaves", &PsicaTree::num_leaves)
      .def_property_readonly("treatments", &PsicaTree::treatments)
      .def_property_readonly("total_loss", &PsicaTree::total_loss)
      .def(
          "leaves",
          [](const PsicaTree& t) {
            py::list out;
            for (auto i : t.leaves_in_order()) {
              const auto& s = t.nodes()[i].summary;
              py::dict d;
              d["node"] = i;
              d["size"] = s.size;
              d["potential"] = set_names(s.potential, t.treatments());
              d["probabilities"] = s.agg_probs;
              d["truncated"] = s.trunc_probs;
              d["loss"] = s.loss;
              out.append(d);
            }
            return out;
          },
          "Leaves in left-to-right order with their summaries.")
      .def(
          "splits",
          [](const PsicaTree& t) {
            std::vector<std::string> out;
            for (const auto& n : t.nodes())
              if (!n.is_leaf()) out.push_back(describe(*n.split, t.schema()));
            return out;
          })
      .def(
          "predict",
          [](const PsicaTree& t, const std::vector<double>& x) {
            validate_row(t.schema(), x);
            return label_dict(t.predict_label(x), t.treatments());
          },
          py::arg("x"))
      .def(
          "predict_dataset",
          [](const PsicaTree& t, const Dataset& d) {
            py::list out;
            for (std::size_t i = 0; i < d.size(); ++i) out.append(label_dict(t.predict_label(d.row(i)), t.treatments()));
            return out;
          },
          py::arg("data"));

  m.def(
      "estimate_probabilities",
      [](const Dataset& d, const std::string& method, std::size_t B, std::size_t trees, const std::string& mtry,
         std::uint64_t seed, int threads) {
        PipelineConfig c;
        c.probability = parse_probability_method(method);
        c.mtry = parse_mtry(mtry);
        c.B = B;
        c.trees = trees;
        c.seed = seed;
        c.threads = threads;
        auto fp = forest_params(c, d);
        return rows_of(estimate_probabilities(d, c.probability, B, fp));
      },
      py::arg("data"), py::arg("method") = "jackknife", py::arg("B") = 500, py::arg("trees") = 100,
      py::arg("mtry") = "all", py::arg("seed") = 1, py::arg("threads") = 1,
      "n x m matrix of best-treatment probabilities.");

  m.def(
      "grow",
      [](const std::vector<std::vector<double>>& probabilities, const Dataset& d, const std::string& method,
         double alpha, std::size_t min_leaf, std::optional<std::size_t> max_depth) {
        TreeConfig c;
        c.method = parse_growth_method(method);
        c.alpha = alpha;
        c.min_leaf = min_leaf;
        c.max_depth = max_depth;
        return grow(matrix_of(probabilities), d, c);
      },
      py::arg("probabilities"), py::arg("data"), py::arg("method") = "full", py::arg("alpha") = 0.05,
      py::arg("min_leaf") = 0, py::arg("max_depth") = py::none());

  m.def(
      "fit",
      [](const Dataset& d, const std::string& probability, const std::string& growth, double alpha, std::size_t B,
         std::size_t trees, const std::string& mtry, std::size_t min_leaf, std::optional<std::size_t> max_depth,
         bool collapse_same_label, std::uint64_t seed, int threads) {
        PipelineConfig c;
        c.probability = parse_probability_method(probability);
        c.tree.method = parse_growth_method(growth);
        c.tree.alpha = alpha;
        c.B = B;
        c.trees = trees;
        c.mtry = parse_mtry(mtry);
        c.tree.min_leaf = min_leaf;
        c.tree.max_depth = max_depth;
        c.prune.collapse_same_label = collapse_same_label;
        c.seed = seed;
        c.threads = threads;
        py::gil_scoped_release release;
        auto r = run_pipeline(d, c);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(r.tree, rows_of(r.probabilities));
      },
      py::arg("data"), py::arg("probability") = "jackknife", py::arg("growth") = "full", py::arg("alpha") = 0.05,
      py::arg("B") = 500, py::arg("trees") = 100, py::arg("mtry") = "all", py::arg("min_leaf") = 0,
      py::arg("max_depth") = py::none(), py::arg("collapse_same_label") = false, py::arg("seed") = 1,
      py::arg("threads") = 1, "Probability estimation followed by tree growth: returns (tree, probabilities).");

  m.def(
      "evaluate",
      [](const PsicaTree& t, const Dataset& d, const std::vector<std::vector<std::string>>& oracle,
         const std::vector<bool>& relevant) {
        std::vector<TreatmentSet> sets;
        for (const auto& names : oracle) {
          TreatmentSet s;
          for (auto k : treatment_indices(names, t.treatments())) s.insert(k);
          sets.push_back(s);
        }
        auto r = evaluate(t, d, sets, relevant);
        py::dict out;
        out["accuracy"] = r.accuracy;
        out["uncertainty"] = r.uncertainty;
        out["suspect"] = r.suspect;
        out["decision_accuracy"] = r.decision_accuracy;
        return out;
      },
      py::arg("tree"), py::arg("data"), py::arg("oracle"), py::arg("relevant"));

  m.def(
      "relevant_features", [](const std::string& model) { return relevant_features(model_spec(parse_model(model))); },
      py::arg("model"));
}
