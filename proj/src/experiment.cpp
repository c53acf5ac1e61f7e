#include "psica/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "psica/parallel.hpp"

namespace psica {

StudyMethod parse_study_method(const std::string& text) {
  if (text == "m1") return StudyMethod::m1;
  if (text == "m2") return StudyMethod::m2;
  if (text == "m3") return StudyMethod::m3;
  throw std::invalid_argument("unknown study method '" + text + "' (expected m1, m2 or m3)");
}

std::string to_string(StudyMethod m) {
  switch (m) {
    case StudyMethod::m1: return "m1";
    case StudyMethod::m2: return "m2";
    case StudyMethod::m3: return "m3";
  }
  return "m1";
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("experiment config: '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
}

MetricSummary mean_se(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return {std::nan(""), std::nan("")};
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "--";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("experiment config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "models") {
      c.models.clear();
      for (const auto& m : split_list(value)) c.models.push_back(parse_model(m));
    } else if (key == "n") {
      c.sizes.clear();
      for (const auto& n : split_list(value)) c.sizes.push_back(parse_count(key, n));
    } else if (key == "methods") {
      c.methods.clear();
      for (const auto& m : split_list(value)) c.methods.push_back(parse_study_method(m));
    } else if (key == "replicates") {
      c.replicates = parse_count(key, value);
    } else if (key == "seed") {
      c.seed = parse_count(key, value);
    } else if (key == "B") {
      c.B = parse_count(key, value);
    } else if (key == "trees") {
      c.trees = parse_count(key, value);
    } else if (key == "growth") {
      c.growth = parse_growth_method(value);
    } else if (key == "alpha") {
      c.alpha = std::stod(value);
    } else if (key == "min_leaf") {
      c.min_leaf = parse_count(key, value);
    } else if (key == "threads") {
      c.threads = static_cast<int>(parse_count(key, value));
    } else {
      throw std::invalid_argument("experiment config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (c.models.empty() || c.sizes.empty() || c.methods.empty() || c.replicates == 0)
    throw std::invalid_argument("experiment config needs models, n, methods and replicates >= 1");
  if (c.B == 0 || c.trees == 0) throw std::invalid_argument("B and trees must be positive");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  return c;
}

PipelineConfig study_pipeline(const ExperimentConfig& config, StudyMethod method) {
  PipelineConfig pc;
  pc.probability = method == StudyMethod::m3 ? ProbabilityMethod::bootstrap : ProbabilityMethod::jackknife;
  pc.mtry = method == StudyMethod::m1 ? MtryRule::all : MtryRule::sqrt;
  pc.B = config.B;
  pc.trees = config.trees;
  pc.tree.method = config.growth;
  pc.tree.alpha = config.alpha;
  pc.tree.min_leaf = config.min_leaf;
  pc.threads = 1;
  return pc;
}

static std::uint64_t replicate_seed(const ExperimentConfig& config, SimModel model, std::size_t n, std::size_t replicate) {
  // Training and evaluation data depend on (model, n, replicate) only, so all
  // methods in a cell see the same samples.
  return derive_seed(config.seed, {tag(StreamTag::replicate), static_cast<std::uint64_t>(model), n, replicate});
}

ReplicateFit fit_replicate(const ExperimentConfig& config, SimModel model, std::size_t n, StudyMethod method,
                           std::size_t replicate, int threads) {
  ReplicateFit fit;
  fit.seed = replicate_seed(config, model, n, replicate);
  const auto spec = model_spec(model);
  RandomStream train_rng(derive_seed(fit.seed, {tag(StreamTag::simulate)}));
  RandomStream eval_rng(derive_seed(fit.seed, {tag(StreamTag::evaluate)}));
  fit.train = generate_model(spec, n, train_rng);
  fit.test = generate_model(spec, n, eval_rng);
  PipelineConfig pc = study_pipeline(config, method);
  pc.seed = derive_seed(fit.seed, {static_cast<std::uint64_t>(method)});
  pc.threads = threads;
  fit.result = run_pipeline(fit.train.data, pc);
  return fit;
}

ReplicateRecord run_replicate(const ExperimentConfig& config, SimModel model, std::size_t n, StudyMethod method,
                              std::size_t replicate) {
  ReplicateRecord rec;
  rec.model = model;
  rec.n = n;
  rec.method = method;
  rec.replicate = replicate;
  rec.seed = replicate_seed(config, model, n, replicate);
  try {
    auto fit = fit_replicate(config, model, n, method, replicate);
    rec.metrics = evaluate(fit.result.tree, fit.test.data, fit.test.oracle, relevant_features(model_spec(model)));
    rec.row_sum_error = fit.result.probabilities.max_row_error();
    rec.leaves = fit.result.tree.num_leaves();
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.message = e.what();
  }
  return rec;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  struct Job {
    SimModel model;
    std::size_t n;
    StudyMethod method;
    std::size_t replicate;
  };
  std::vector<Job> jobs;
  for (auto model : config.models)
    for (auto n : config.sizes)
      for (auto method : config.methods)
        for (std::size_t r = 0; r < config.replicates; ++r) jobs.push_back({model, n, method, r});
  ExperimentReport report;
  report.records.resize(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    report.records[j] = run_replicate(config, job.model, job.n, job.method, job.replicate);
  });
  report.cells = summarize_records(report.records);
  return report;
}

std::vector<CellSummary> summarize_records(const std::vector<ReplicateRecord>& records) {
  std::vector<CellSummary> cells;
  std::size_t i = 0;
  while (i < records.size()) {
    CellSummary cell;
    cell.model = records[i].model;
    cell.n = records[i].n;
    cell.method = records[i].method;
    std::vector<double> a, u, s, d;
    for (; i < records.size() && records[i].model == cell.model && records[i].n == cell.n &&
           records[i].method == cell.method;
         ++i) {
      const auto& r = records[i];
      if (!r.ok) {
        ++cell.failed;
        continue;
      }
      ++cell.completed;
      a.push_back(r.metrics.accuracy);
      u.push_back(r.metrics.uncertainty);
      s.push_back(r.metrics.suspect);
      d.push_back(r.metrics.decision_accuracy);
    }
    cell.accuracy = mean_se(a);
    cell.uncertainty = mean_se(u);
    cell.suspect = mean_se(s);
    cell.decision_accuracy = mean_se(d);
    cells.push_back(cell);
  }
  return cells;
}

std::string format_records(const std::vector<ReplicateRecord>& records) {
  std::string out = "model,n,method,replicate,seed,status,accuracy,uncertainty,suspect,decision_accuracy,leaves,message\n";
  for (const auto& r : records) {
    out += to_string(r.model) + "," + std::to_string(r.n) + "," + to_string(r.method) + "," +
           std::to_string(r.replicate + 1) + "," + std::to_string(r.seed) + "," + (r.ok ? "ok" : "failed") + ",";
    if (r.ok) {
      out += format_double(r.metrics.accuracy) + "," + format_double(r.metrics.uncertainty) + "," +
             format_double(r.metrics.suspect) + "," + format_double(r.metrics.decision_accuracy) + "," +
             std::to_string(r.leaves) + ",";
    } else {
      out += ",,,,,";
    }
    std::string msg = r.message;
    for (auto& ch : msg)
      if (ch == '"' || ch == '\n') ch = '\'';
    out += msg.empty() ? "\n" : "\"" + msg + "\"\n";
  }
  return out;
}

std::string format_summary(const std::vector<CellSummary>& cells) {
  std::string out =
      "model,n,method,completed,failed,accuracy_mean,accuracy_se,uncertainty_mean,uncertainty_se,suspect_mean,"
      "suspect_se,decision_accuracy_mean,decision_accuracy_se,m4\n";
  for (const auto& c : cells) {
    out += to_string(c.model) + "," + std::to_string(c.n) + "," + to_string(c.method) + "," +
           std::to_string(c.completed) + "," + std::to_string(c.failed);
    for (const auto* m : {&c.accuracy, &c.uncertainty, &c.suspect, &c.decision_accuracy})
      out += "," + fixed(m->mean, 6) + "," + fixed(m->se, 6);
    // The QUINT comparison column is not produced.
    out += ",absent\n";
  }
  return out;
}

std::string format_summary_text(const std::vector<CellSummary>& cells) {
  std::ostringstream os;
  const std::pair<const char*, MetricSummary CellSummary::*> metrics[] = {
      {"accuracy (a)", &CellSummary::accuracy},
      {"uncertainty (u)", &CellSummary::uncertainty},
      {"suspect (s)", &CellSummary::suspect},
      {"decision accuracy (delta)", &CellSummary::decision_accuracy},
  };
  for (const auto& [title, member] : metrics) {
    os << "Mean " << title << ", standard error in parentheses\n";
    os << "    n  model  method  value            failed\n";
    for (const auto& c : cells) {
      const MetricSummary& m = c.*member;
      char line[160];
      std::snprintf(line, sizeof(line), "%5zu  %-5s  %-6s  %-15s  %zu\n", c.n, to_string(c.model).c_str(),
                    to_string(c.method).c_str(), (fixed(m.mean, 2) + " (" + fixed(m.se, 3) + ")").c_str(), c.failed);
      os << line;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace psica
