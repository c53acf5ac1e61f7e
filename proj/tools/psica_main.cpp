// psica: simulate, fit, predict, evaluate, export and batch experiments.
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "psica/cli.hpp"
#include "psica/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic subgroup identification for categorical treatments"};
  app.require_subcommand(1);
  int threads = 1;
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads (PSICA_THREADS overrides)")->check(CLI::PositiveNumber);

  psica::cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Write a simulated dataset, its oracle and schema");
  simulate->add_option("--model", sim.model, "M1..M6 or demo")->required();
  simulate->add_option("--n", sim.n, "Rows")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output prefix")->required();

  psica::cli::FitOptions fit;
  std::string data_path, out_path, schema_path, costs_path, probs_path;
  auto* fitcmd = app.add_subcommand("fit", "Estimate best-treatment probabilities and grow a PSICA tree");
  fitcmd->add_option("--data", fit.data, "Input table")->required();
  fitcmd->add_option("--schema", schema_path, "key=value ingestion schema file");
  fitcmd->add_option("--treatment-col", fit.treatment_col, "Treatment column");
  fitcmd->add_option("--effect-col", fit.effect_col, "Effect column");
  fitcmd->add_option("--feature", fit.features, "Feature declaration name=numeric|ordinal|categorical[:L1|L2]");
  fitcmd->add_option("--method-prob", fit.method_prob, "bootstrap|jackknife")
      ->check(CLI::IsMember({"bootstrap", "jackknife"}));
  fitcmd->add_option("--method-grow", fit.method_grow, "full|preprune")->check(CLI::IsMember({"full", "preprune"}));
  fitcmd->add_option("--alpha", fit.alpha, "Risk level");
  fitcmd->add_option("--B", fit.B, "Effect draws per observation")->check(CLI::PositiveNumber);
  fitcmd->add_option("--trees", fit.trees, "Trees per forest")->check(CLI::PositiveNumber);
  fitcmd->add_option("--mtry", fit.mtry, "Features per forest split: all|sqrt")->check(CLI::IsMember({"all", "sqrt"}));
  fitcmd->add_option("--min-leaf", fit.min_leaf, "Minimum rows per PSICA leaf (0: n/5)");
  fitcmd->add_option("--max-depth", fit.max_depth, "Maximum PSICA tree depth");
  fitcmd->add_option("--forest-min-split", fit.forest_min_split, "Forest node split threshold (0: n/10)");
  fitcmd->add_option("--costs", costs_path, "m x m cost matrix file");
  fitcmd->add_flag("--prune-same-label", fit.prune_same_label, "Merge sibling leaves with equal labels");
  fitcmd->add_option("--prune-max-leaves", fit.prune_max_leaves, "Prune to at most this many leaves");
  fitcmd->add_option("--prune-min-gain", fit.prune_min_gain, "Remove splits gaining less than this");
  fitcmd->add_option("--seed", fit.seed, "Random seed");
  fitcmd->add_option("--out", fit.out, "Tree interchange document")->required();
  fitcmd->add_option("--probabilities-out", probs_path, "Also write the probability matrix");

  psica::cli::PredictOptions pred;
  auto* predict = app.add_subcommand("predict", "Label rows with a fitted tree");
  predict->add_option("--model-path", pred.model, "Tree interchange document")->required();
  predict->add_option("--data", pred.data, "Input table")->required();
  std::string pred_out;
  predict->add_option("--out", pred_out, "Output table (default stdout)");

  psica::cli::EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score a fitted tree against true best-treatment sets");
  evaluate->add_option("--model-path", eval.model, "Tree interchange document")->required();
  evaluate->add_option("--data", eval.data, "Feature table")->required();
  evaluate->add_option("--oracle", eval.oracle, "Oracle table written by simulate")->required();
  std::string eval_model;
  evaluate->add_option("--sim-model", eval_model, "Generating model, enables the suspect metric");

  psica::cli::ExportOptions exp;
  auto* exportcmd = app.add_subcommand("export", "Render a fitted tree");
  exportcmd->add_option("--model-path", exp.model, "Tree interchange document")->required();
  exportcmd->add_option("--format", exp.format, "graph|interchange")->check(CLI::IsMember({"graph", "interchange"}));
  std::string export_out;
  exportcmd->add_option("--out", export_out, "Output file (default stdout)");

  psica::cli::ExperimentOptions ex;
  auto* experiment = app.add_subcommand("experiment", "Run the simulation study from a config file");
  experiment->add_option("--config", ex.config, "key=value experiment config")->required();
  experiment->add_option("--out", ex.out, "Output prefix")->required();

  CLI11_PARSE(app, argc, argv);
  const bool threads_given = threads_opt->count() > 0 || std::getenv("PSICA_THREADS") != nullptr;
  threads = psica::threads_from_env(threads);

  try {
    if (*simulate) {
      psica::cli::cmd_simulate(sim, std::cout);
    } else if (*fitcmd) {
      if (!schema_path.empty()) fit.schema_file = schema_path;
      if (!costs_path.empty()) fit.costs = costs_path;
      if (!probs_path.empty()) fit.probabilities_out = probs_path;
      fit.threads = threads;
      psica::cli::cmd_fit(fit, std::cout, std::cerr);
    } else if (*predict) {
      if (!pred_out.empty()) pred.out = pred_out;
      psica::cli::cmd_predict(pred, std::cout);
    } else if (*evaluate) {
      if (!eval_model.empty()) eval.sim_model = eval_model;
      psica::cli::cmd_evaluate(eval, std::cout);
    } else if (*exportcmd) {
      if (!export_out.empty()) exp.out = export_out;
      psica::cli::cmd_export(exp, std::cout);
    } else if (*experiment) {
      if (threads_given) ex.threads = threads;
      auto failed = psica::cli::cmd_experiment(ex, std::cout);
      if (failed > 0) {
        std::cerr << "error: " << failed << " replicate(s) failed; see the raw log\n";
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
