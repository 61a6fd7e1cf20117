#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltrsel/data.hpp"
#include "ltrsel/methods.hpp"

namespace ltrsel {

struct ExperimentConfig {
  std::string method = "dnn";

  // dataset: either file paths or a synthetic spec
  std::string train_path, valid_path, test_path;
  std::optional<std::size_t> d_override;
  bool log1p = false;
  bool standardize = false;
  std::string cost_table_path;
  std::optional<SyntheticSpec> synthetic;

  std::vector<std::size_t> hidden{512, 256, 128};

  int epochs = 50;
  double lr = 1e-3;
  int patience = 10;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  double budget_fraction = 0.1;
  std::size_t k = 0;  // 0 -> max(1, floor(budget_fraction * d))
  double tau_start = 10.0, tau_end = 0.1;
  std::optional<double> fixed_tau;
  bool sample_eval_masks = false;

  std::size_t groups = 0, group_budget = 0;
  double lambda_rec = 1.0;
  std::vector<double> lambda_inv{0.1};       // grid
  double lassonet_m = 10.0;
  std::vector<double> lassonet_lambda_path;  // empty -> geometric default
  int lassonet_epochs_per_lambda = 15;
  std::vector<double> tabnet_lambda_sparse{1e-3};  // grid
  std::size_t tabnet_steps = 4;
  double tabnet_gamma = 1.3;
  std::size_t tabnet_width = 32;

  std::string output_dir = "out";

  std::size_t resolve_k(std::size_t d) const {
    if (k > 0) return k;
    auto kk = static_cast<std::size_t>(budget_fraction * static_cast<double>(d));
    return std::max<std::size_t>(1, kk);
  }
};

// Parses and validates the JSON config; unknown keys and constraint
// violations are reported together in the exception message.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);
std::string resolved_config_json(const ExperimentConfig& cfg);

// Constraint violations, one message per problem; empty means valid.
std::vector<std::string> config_errors(const ExperimentConfig& cfg);

struct LoadedData {
  Dataset train, valid, test;
  std::optional<FeatureCostTable> costs;
  std::vector<std::size_t> informative;  // synthetic ground truth, else empty
};

LoadedData load_experiment_data(const ExperimentConfig& cfg);

struct GridPointResult {
  double lambda = 0.0;
  std::size_t num_features = 0;
  double valid_ndcg10 = 0.0;
  bool chosen = false;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double ndcg1 = 0.0, ndcg10 = 0.0;
  std::size_t num_features = 0;
  int best_epoch = -1;
  double best_valid_ndcg10 = 0.0;
  std::vector<double> feature_scores;
  std::vector<GridPointResult> grid;           // budget-agnostic sweeps
  std::vector<LambdaPoint> lassonet_path;
  std::size_t tabnet_importance_count = 0;
};

struct RunResult {
  std::string method;
  std::vector<SeedResult> seeds;
  double ndcg1_mean = 0.0, ndcg1_std = 0.0;
  double ndcg10_mean = 0.0, ndcg10_std = 0.0;
  double num_features_mean = 0.0;
};

struct BudgetPoint {
  double budget = 0.0;
  double ndcg1 = 0.0, ndcg10 = 0.0;
  double cost = 0.0;
  bool has_cost = false;
  std::vector<double> per_seed_ndcg10;
  std::vector<double> per_seed_ndcg1;
};

struct BudgetCurve {
  std::vector<double> budgets;
  std::vector<BudgetPoint> points;
};

// Scenario 1: joint train-and-select over all seeds; writes results.json,
// table.csv, per-seed checkpoints and feature score CSVs under output_dir.
RunResult run_scenario1(const ExperimentConfig& cfg);

// Scenario 2: reload scenario-1 artifacts from run_dir and evaluate the test
// split under hard top-ceil(b*d) budget masks; writes curve.csv/results.json
// under run_dir/budget_eval.
BudgetCurve run_scenario2(const std::string& run_dir, std::vector<double> budgets);

// Re-render table.csv / curve.csv from an existing results.json.
void rerender_reports(const std::string& results_json_path);

std::vector<std::uint8_t> budget_mask_from_scores(const std::vector<double>& scores,
                                                  double budget, std::size_t d);

}  // namespace ltrsel
