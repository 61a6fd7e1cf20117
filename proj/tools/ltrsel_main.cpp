#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltrsel/harness.hpp"

namespace {

namespace fs = std::filesystem;
using ltrsel::ExperimentConfig;

struct TrainCli {
  std::string config_path;
  std::string method, train, valid, test, output, cost_table;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> hidden;
  int epochs = -1;
  double lr = -1.0;
  double budget_fraction = -1.0;
  std::size_t k = 0;
  bool log1p = false;
  bool sample_eval_masks = false;
};

ExperimentConfig merge_train_flags(const TrainCli& cli) {
  ExperimentConfig cfg;
  if (!cli.config_path.empty()) cfg = ltrsel::load_config(cli.config_path);
  if (!cli.method.empty()) cfg.method = cli.method;
  if (!cli.train.empty()) cfg.train_path = cli.train;
  if (!cli.valid.empty()) cfg.valid_path = cli.valid;
  if (!cli.test.empty()) cfg.test_path = cli.test;
  if (!cli.output.empty()) cfg.output_dir = cli.output;
  if (!cli.cost_table.empty()) cfg.cost_table_path = cli.cost_table;
  if (!cli.seeds.empty()) cfg.seeds = cli.seeds;
  if (!cli.hidden.empty()) cfg.hidden = cli.hidden;
  if (cli.epochs >= 0) cfg.epochs = cli.epochs;
  if (cli.lr >= 0.0) cfg.lr = cli.lr;
  if (cli.budget_fraction >= 0.0) cfg.budget_fraction = cli.budget_fraction;
  if (cli.k > 0) cfg.k = cli.k;
  if (cli.log1p) cfg.log1p = true;
  if (cli.sample_eval_masks) cfg.sample_eval_masks = true;
  const auto errors = ltrsel::config_errors(cfg);
  if (!errors.empty()) {
    std::string msg = "config error:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw std::runtime_error(msg);
  }
  return cfg;
}

int cmd_train(const TrainCli& cli) {
  const ExperimentConfig cfg = merge_train_flags(cli);
  const ltrsel::RunResult rr = ltrsel::run_scenario1(cfg);
  std::cout << "method=" << rr.method << " seeds=" << rr.seeds.size()
            << " ndcg1=" << rr.ndcg1_mean << " (" << rr.ndcg1_std << ")"
            << " ndcg10=" << rr.ndcg10_mean << " (" << rr.ndcg10_std << ")"
            << " num_features=" << rr.num_features_mean << "\n"
            << "reports written to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_budget_eval(const std::string& run_dir, const std::vector<double>& budgets) {
  const ltrsel::BudgetCurve curve = ltrsel::run_scenario2(run_dir, budgets);
  for (const auto& p : curve.points) {
    std::cout << "budget=" << p.budget << " ndcg1=" << p.ndcg1
              << " ndcg10=" << p.ndcg10;
    if (p.has_cost) std::cout << " cost=" << p.cost;
    std::cout << "\n";
  }
  std::cout << "curve written to " << run_dir << "/budget_eval\n";
  return 0;
}

int cmd_synth(const ltrsel::SyntheticSpec& spec, const std::string& out_dir) {
  const ltrsel::SyntheticData data = ltrsel::generate_synthetic(spec);
  fs::create_directories(out_dir);
  auto dump = [&](const ltrsel::Dataset& d, const std::string& name) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw std::runtime_error("cannot write " + name);
    ltrsel::serialize_svmlight(d, out);
  };
  dump(data.train, "train.txt");
  dump(data.valid, "valid.txt");
  dump(data.test, "test.txt");
  nlohmann::ordered_json truth;
  std::vector<std::size_t> one_based;
  for (std::size_t j : data.informative) one_based.push_back(j + 1);
  truth["informative_features"] = one_based;
  truth["d"] = spec.d;
  truth["s"] = spec.s;
  std::ofstream tf(fs::path(out_dir) / "truth.json");
  tf << truth.dump(2) << "\n";
  std::cout << "synthetic dataset written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedded feature selection for neural learning-to-rank"};
  app.require_subcommand(1);

  TrainCli train_cli;
  CLI::App* train = app.add_subcommand(
      "train", "Scenario 1: jointly train selector and ranker over seeds");
  train->add_option("--config", train_cli.config_path, "JSON experiment config");
  train->add_option("--method", train_cli.method,
                    "dnn|l2x|gl2x|cae|ifg|invase|lassonet|tabnet");
  train->add_option("--train", train_cli.train, "train split (SVMLight)");
  train->add_option("--valid", train_cli.valid, "validation split");
  train->add_option("--test", train_cli.test, "test split");
  train->add_option("--output", train_cli.output, "output directory");
  train->add_option("--cost-table", train_cli.cost_table, "feature cost CSV");
  train->add_option("--seeds", train_cli.seeds, "seeds, e.g. --seeds 1 2 3");
  train->add_option("--hidden", train_cli.hidden, "hidden layer widths");
  train->add_option("--epochs", train_cli.epochs, "training epochs");
  train->add_option("--lr", train_cli.lr, "Adam learning rate");
  train->add_option("--budget-fraction", train_cli.budget_fraction,
                    "selection budget as a fraction of d");
  train->add_option("--k", train_cli.k, "selection budget as a feature count");
  train->add_flag("--log1p", train_cli.log1p, "apply signed log1p to features");
  train->add_flag("--sample-eval-masks", train_cli.sample_eval_masks,
                  "sample masks at evaluation instead of deterministic top-k");

  std::string run_dir;
  std::vector<double> budgets;
  CLI::App* be = app.add_subcommand(
      "budget-eval", "Scenario 2: evaluate a trained run under feature budgets");
  be->add_option("--run-dir", run_dir, "scenario-1 output directory")->required();
  be->add_option("--budgets", budgets, "ascending budget fractions")->required();

  ltrsel::SyntheticSpec spec;
  std::string synth_out = "synth_data";
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--d", spec.d, "feature count");
  synth->add_option("--s", spec.s, "informative feature count");
  synth->add_option("--train-queries", spec.train_queries, "queries in train");
  synth->add_option("--valid-queries", spec.valid_queries, "queries in valid");
  synth->add_option("--test-queries", spec.test_queries, "queries in test");
  synth->add_option("--docs-per-query", spec.docs_per_query, "documents per query");
  synth->add_option("--label-levels", spec.label_levels, "graded label count");
  synth->add_option("--noise", spec.noise, "hidden score noise scale");
  synth->add_option("--seed", spec.seed, "generator seed");
  synth->add_option("--output", synth_out, "output directory");

  std::string results_path;
  CLI::App* report = app.add_subcommand(
      "report", "Re-render table.csv / curve.csv from results.json");
  report->add_option("--results", results_path, "path to results.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_cli);
    if (be->parsed()) return cmd_budget_eval(run_dir, budgets);
    if (synth->parsed()) return cmd_synth(spec, synth_out);
    if (report->parsed()) {
      ltrsel::rerender_reports(results_path);
      std::cout << "reports re-rendered next to " << results_path << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
