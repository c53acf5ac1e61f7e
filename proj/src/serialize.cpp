#include "psica/serialize.hpp"

#include <cstdio>
#include <json.hpp>

namespace psica {

using nlohmann::json;

namespace {

json features_to_json(const std::vector<FeatureSpec>& schema) {
  json arr = json::array();
  for (const auto& f : schema) {
    json j{{"name", f.name}, {"kind", f.kind.type == FeatureType::numeric   ? "numeric"
                                      : f.kind.type == FeatureType::ordinal ? "ordinal"
                                                                            : "categorical"}};
    if (f.kind.is_categorical()) j["levels"] = f.kind.levels;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<FeatureSpec> features_from_json(const json& arr) {
  std::vector<FeatureSpec> out;
  for (const auto& j : arr) {
    const std::string kind = j.at("kind");
    FeatureSpec f{j.at("name"), FeatureKind::numeric()};
    if (kind == "ordinal") f.kind = FeatureKind::ordinal();
    else if (kind == "categorical") f.kind = FeatureKind::categorical(j.at("levels").get<std::vector<std::string>>());
    else if (kind != "numeric") throw FormatError("unknown feature kind '" + kind + "'");
    out.push_back(std::move(f));
  }
  return out;
}

json rule_to_json(const SplitRule& r, const std::vector<FeatureSpec>& schema) {
  json j{{"feature", schema.at(r.feature).name}, {"feature_index", r.feature}};
  if (r.categorical) {
    j["type"] = "categorical";
    std::vector<std::string> levels;
    const auto& all = schema[r.feature].kind.levels;
    for (std::size_t l = 0; l < all.size(); ++l)
      if ((r.left_levels >> l) & 1ULL) levels.push_back(all[l]);
    j["left_levels"] = levels;
  } else {
    j["type"] = "numeric";
    j["threshold"] = r.threshold;
  }
  return j;
}

SplitRule rule_from_json(const json& j, const std::vector<FeatureSpec>& schema) {
  SplitRule r;
  r.feature = j.at("feature_index").get<std::size_t>();
  if (r.feature >= schema.size()) throw FormatError("split refers to an unknown feature");
  if (j.at("type") == "categorical") {
    r.categorical = true;
    const auto& all = schema[r.feature].kind.levels;
    for (const auto& name : j.at("left_levels")) {
      auto it = std::find(all.begin(), all.end(), name.get<std::string>());
      if (it == all.end()) throw FormatError("split refers to an unknown level");
      r.left_levels |= 1ULL << static_cast<std::size_t>(it - all.begin());
    }
  } else {
    r.threshold = j.at("threshold").get<double>();
  }
  return r;
}

json set_to_json(TreatmentSet s, const std::vector<std::string>& names) {
  json arr = json::array();
  for (auto k : s.indices()) arr.push_back(names.at(k));
  return arr;
}

TreatmentSet set_from_json(const json& arr, const std::vector<std::string>& names) {
  TreatmentSet s;
  for (const auto& v : arr) {
    auto it = std::find(names.begin(), names.end(), v.get<std::string>());
    if (it == names.end()) throw FormatError("unknown treatment in label set");
    s.insert(static_cast<std::size_t>(it - names.begin()));
  }
  return s;
}

json costs_to_json(const CostMatrix& c) {
  json rows = json::array();
  for (std::size_t k = 0; k < c.size(); ++k) {
    json row = json::array();
    for (std::size_t j = 0; j < c.size(); ++j) row.push_back(c(k, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

CostMatrix costs_from_json(const json& rows) {
  std::vector<double> values;
  for (const auto& row : rows)
    for (const auto& v : row) values.push_back(v.get<double>());
  return CostMatrix(rows.size(), std::move(values));
}

void check_header(const json& doc, const std::string& format) {
  if (!doc.is_object() || doc.value("format", "") != format) throw FormatError("not a " + format + " document");
  if (doc.value("format_version", 0) != interchange_format_version)
    throw FormatError("unsupported " + format + " format version");
}

std::string probs_text(const std::vector<double>& p) {
  std::string out = "[";
  for (std::size_t k = 0; k < p.size(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", p[k]);
    out += (k ? ", " : "") + std::string(buf);
  }
  return out + "]";
}

}  // namespace

std::string tree_to_json(const PsicaTree& tree) {
  const auto& cfg = tree.config();
  json config{{"growth", to_string(cfg.method)},
              {"alpha", cfg.alpha},
              {"min_leaf", cfg.min_leaf},
              {"max_depth", cfg.max_depth ? json(*cfg.max_depth) : json(nullptr)},
              {"omega_max", cfg.omega_max},
              {"gain_floor_rel", cfg.gain_floor_rel},
              {"costs", cfg.costs ? costs_to_json(*cfg.costs) : json(nullptr)}};
  json nodes = json::array();
  const auto& names = tree.treatments();
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const auto& n = tree.nodes()[i];
    const auto& s = n.summary;
    json j{{"id", i},
           {"depth", n.depth},
           {"size", s.size},
           {"agg_probs", s.agg_probs},
           {"useless", set_to_json(s.useless, names)},
           {"potential", set_to_json(s.potential, names)},
           {"trunc_probs", s.trunc_probs},
           {"loss", s.loss}};
    if (n.is_leaf()) {
      j["rule"] = nullptr;
    } else {
      j["rule"] = rule_to_json(*n.split, tree.schema());
      j["left"] = n.left;
      j["right"] = n.right;
      j["gain"] = n.gain;
    }
    nodes.push_back(std::move(j));
  }
  json doc{{"format", "psica-tree"},
           {"format_version", interchange_format_version},
           {"treatments", names},
           {"features", features_to_json(tree.schema())},
           {"config", config},
           {"nodes", nodes}};
  return doc.dump(2) + "\n";
}

PsicaTree tree_from_json(const std::string& text) {
  try {
    json doc = json::parse(text);
    check_header(doc, "psica-tree");
    auto names = doc.at("treatments").get<std::vector<std::string>>();
    auto schema = features_from_json(doc.at("features"));
    const auto& c = doc.at("config");
    TreeConfig cfg;
    cfg.method = parse_growth_method(c.at("growth"));
    cfg.alpha = c.at("alpha");
    cfg.min_leaf = c.at("min_leaf");
    if (!c.at("max_depth").is_null()) cfg.max_depth = c.at("max_depth").get<std::size_t>();
    cfg.omega_max = c.at("omega_max");
    cfg.gain_floor_rel = c.at("gain_floor_rel");
    if (!c.at("costs").is_null()) cfg.costs = costs_from_json(c.at("costs"));
    std::vector<PsicaNode> nodes;
    for (const auto& j : doc.at("nodes")) {
      PsicaNode n;
      n.depth = j.at("depth");
      n.summary.size = j.at("size");
      n.summary.agg_probs = j.at("agg_probs").get<std::vector<double>>();
      n.summary.useless = set_from_json(j.at("useless"), names);
      n.summary.potential = set_from_json(j.at("potential"), names);
      n.summary.trunc_probs = j.at("trunc_probs").get<std::vector<double>>();
      n.summary.loss = j.at("loss");
      if (!j.at("rule").is_null()) {
        n.split = rule_from_json(j.at("rule"), schema);
        n.left = j.at("left");
        n.right = j.at("right");
        n.gain = j.at("gain");
      }
      nodes.push_back(std::move(n));
    }
    return PsicaTree(std::move(nodes), std::move(schema), std::move(names), std::move(cfg));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed tree document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid tree document: ") + e.what());
  }
}

std::string forest_to_json(const ForestModel& forest) {
  const auto& p = forest.params();
  json params{{"num_trees", p.num_trees},
              {"mtry", p.mtry},
              {"min_split", p.min_split},
              {"min_leaf", p.min_leaf},
              {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
              {"seed", p.seed}};
  json trees = json::array();
  for (const auto& t : forest.trees()) {
    json nodes = json::array();
    for (const auto& n : t.nodes()) {
      json j{{"value", n.value}, {"size", n.size}};
      if (!n.is_leaf()) {
        j["rule"] = rule_to_json(*n.split, forest.schema());
        j["left"] = n.left;
        j["right"] = n.right;
      }
      nodes.push_back(std::move(j));
    }
    trees.push_back(std::move(nodes));
  }
  json doc{{"format", "psica-forest"},
           {"format_version", interchange_format_version},
           {"features", features_to_json(forest.schema())},
           {"params", params},
           {"variance_floor", forest.variance_floor()},
           {"trees", trees},
           {"membership", forest.membership()}};
  return doc.dump() + "\n";
}

ForestModel forest_from_json(const std::string& text) {
  try {
    json doc = json::parse(text);
    check_header(doc, "psica-forest");
    auto schema = features_from_json(doc.at("features"));
    const auto& pj = doc.at("params");
    ForestParams p;
    p.num_trees = pj.at("num_trees");
    p.mtry = pj.at("mtry");
    p.min_split = pj.at("min_split");
    p.min_leaf = pj.at("min_leaf");
    if (!pj.at("max_depth").is_null()) p.max_depth = pj.at("max_depth").get<std::size_t>();
    p.seed = pj.at("seed");
    std::vector<RegressionTree> trees;
    for (const auto& tj : doc.at("trees")) {
      std::vector<RegressionTreeNode> nodes;
      for (const auto& j : tj) {
        RegressionTreeNode n;
        n.value = j.at("value");
        n.size = j.at("size");
        if (j.contains("rule")) {
          n.split = rule_from_json(j.at("rule"), schema);
          n.left = j.at("left");
          n.right = j.at("right");
        }
        nodes.push_back(n);
      }
      trees.emplace_back(std::move(nodes));
    }
    auto membership = doc.at("membership").get<std::vector<std::vector<std::uint32_t>>>();
    return ForestModel(std::move(trees), std::move(membership), p, std::move(schema), doc.at("variance_floor"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed forest document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid forest document: ") + e.what());
  }
}

std::string tree_to_dot(const PsicaTree& tree) {
  std::string out = "digraph psica {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  const auto& names = tree.treatments();
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const auto& n = tree.nodes()[i];
    const auto& s = n.summary;
    std::string label;
    if (!n.is_leaf()) label = describe(*n.split, tree.schema()) + "\\n";
    label += "label: {" + format_set(s.potential, names) + "}, \xCF\x80: " + probs_text(s.agg_probs) +
             ", |\xCE\x94|=" + std::to_string(static_cast<long long>(s.size));
    out += "  n" + std::to_string(i) + " [label=\"" + label + "\"" + (n.is_leaf() ? ", style=rounded" : "") + "];\n";
  }
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const auto& n = tree.nodes()[i];
    if (n.is_leaf()) continue;
    out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.left) + " [label=\"yes\"];\n";
    out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.right) + " [label=\"no\"];\n";
  }
  return out + "}\n";
}

std::string format_leaf_table(const PsicaTree& tree) {
  std::string out;
  for (auto i : tree.leaves_in_order()) {
    const auto& s = tree.nodes()[i].summary;
    char line[64];
    std::snprintf(line, sizeof(line), "leaf %-4zu |D|=%-6lld loss=%-10.4f", i, static_cast<long long>(s.size), s.loss);
    out += std::string(line) + "label: {" + format_set(s.potential, tree.treatments()) + "}  pi: " +
           probs_text(s.agg_probs) + "  truncated: " + probs_text(s.trunc_probs) + "\n";
  }
  return out;
}

}  // namespace psica
