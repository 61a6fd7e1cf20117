#include "ltrsel/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ltrsel {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string num_str(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& scope, std::vector<std::string>& errors) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      errors.push_back("unknown key '" + scope + key + "'");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::vector<double> read_number_or_list(const json& obj, const char* key,
                                        std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (v.is_array()) return v.get<std::vector<double>>();
  return {v.get<double>()};
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
  json root = json::parse(text);
  std::vector<std::string> errors;
  ExperimentConfig cfg;

  reject_unknown_keys(root, {"method", "dataset", "model", "train", "selector",
                             "output_dir"},
                      "", errors);
  read_field(root, "method", cfg.method);
  read_field(root, "output_dir", cfg.output_dir);

  if (root.contains("dataset")) {
    const json& ds = root.at("dataset");
    reject_unknown_keys(ds, {"train", "valid", "test", "d", "log1p", "standardize",
                             "cost_table", "synthetic"},
                        "dataset.", errors);
    read_field(ds, "train", cfg.train_path);
    read_field(ds, "valid", cfg.valid_path);
    read_field(ds, "test", cfg.test_path);
    if (ds.contains("d")) cfg.d_override = ds.at("d").get<std::size_t>();
    read_field(ds, "log1p", cfg.log1p);
    read_field(ds, "standardize", cfg.standardize);
    read_field(ds, "cost_table", cfg.cost_table_path);
    if (ds.contains("synthetic")) {
      const json& sy = ds.at("synthetic");
      reject_unknown_keys(sy, {"d", "s", "train_queries", "valid_queries",
                               "test_queries", "docs_per_query", "label_levels",
                               "noise", "seed"},
                          "dataset.synthetic.", errors);
      SyntheticSpec spec;
      read_field(sy, "d", spec.d);
      read_field(sy, "s", spec.s);
      read_field(sy, "train_queries", spec.train_queries);
      read_field(sy, "valid_queries", spec.valid_queries);
      read_field(sy, "test_queries", spec.test_queries);
      read_field(sy, "docs_per_query", spec.docs_per_query);
      read_field(sy, "label_levels", spec.label_levels);
      read_field(sy, "noise", spec.noise);
      read_field(sy, "seed", spec.seed);
      cfg.synthetic = spec;
    }
  }

  if (root.contains("model")) {
    const json& m = root.at("model");
    reject_unknown_keys(m, {"hidden"}, "model.", errors);
    read_field(m, "hidden", cfg.hidden);
  }

  if (root.contains("train")) {
    const json& t = root.at("train");
    reject_unknown_keys(t, {"epochs", "lr", "patience", "seeds"}, "train.", errors);
    read_field(t, "epochs", cfg.epochs);
    read_field(t, "lr", cfg.lr);
    read_field(t, "patience", cfg.patience);
    read_field(t, "seeds", cfg.seeds);
  }

  if (root.contains("selector")) {
    const json& s = root.at("selector");
    reject_unknown_keys(s, {"budget_fraction", "k", "tau_start", "tau_end",
                            "fixed_tau", "sample_eval_masks", "groups",
                            "group_budget", "lambda_rec", "lambda_inv", "lassonet",
                            "tabnet"},
                        "selector.", errors);
    read_field(s, "budget_fraction", cfg.budget_fraction);
    read_field(s, "k", cfg.k);
    read_field(s, "tau_start", cfg.tau_start);
    read_field(s, "tau_end", cfg.tau_end);
    if (s.contains("fixed_tau") && !s.at("fixed_tau").is_null())
      cfg.fixed_tau = s.at("fixed_tau").get<double>();
    read_field(s, "sample_eval_masks", cfg.sample_eval_masks);
    read_field(s, "groups", cfg.groups);
    read_field(s, "group_budget", cfg.group_budget);
    read_field(s, "lambda_rec", cfg.lambda_rec);
    cfg.lambda_inv = read_number_or_list(s, "lambda_inv", cfg.lambda_inv);
    if (s.contains("lassonet")) {
      const json& ln = s.at("lassonet");
      reject_unknown_keys(ln, {"m", "lambda_path", "epochs_per_lambda"},
                          "selector.lassonet.", errors);
      read_field(ln, "m", cfg.lassonet_m);
      read_field(ln, "lambda_path", cfg.lassonet_lambda_path);
      read_field(ln, "epochs_per_lambda", cfg.lassonet_epochs_per_lambda);
    }
    if (s.contains("tabnet")) {
      const json& tn = s.at("tabnet");
      reject_unknown_keys(tn, {"steps", "gamma", "lambda_sparse", "width"},
                          "selector.tabnet.", errors);
      read_field(tn, "steps", cfg.tabnet_steps);
      read_field(tn, "gamma", cfg.tabnet_gamma);
      cfg.tabnet_lambda_sparse =
          read_number_or_list(tn, "lambda_sparse", cfg.tabnet_lambda_sparse);
      read_field(tn, "width", cfg.tabnet_width);
    }
  }

  for (const auto& e : config_errors(cfg)) errors.push_back(e);

  if (!errors.empty()) {
    std::string msg = "config error:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw std::runtime_error(msg);
  }
  return cfg;
}

std::vector<std::string> config_errors(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  const auto& names = method_names();
  if (std::find(names.begin(), names.end(), cfg.method) == names.end())
    errors.push_back("method '" + cfg.method + "' is not one of the known methods");
  if (!(cfg.budget_fraction > 0.0 && cfg.budget_fraction <= 1.0))
    errors.push_back("selector.budget_fraction must lie in (0, 1]");
  if (cfg.seeds.empty()) errors.push_back("train.seeds must be non-empty");
  if (cfg.epochs < 1) errors.push_back("train.epochs must be >= 1");
  if (cfg.lr <= 0.0) errors.push_back("train.lr must be positive");
  if (cfg.tau_start <= 0.0 || cfg.tau_end <= 0.0)
    errors.push_back("selector.tau_start/tau_end must be positive");
  if (cfg.fixed_tau && *cfg.fixed_tau <= 0.0)
    errors.push_back("selector.fixed_tau must be positive");
  if (cfg.tabnet_gamma < 1.0) errors.push_back("selector.tabnet.gamma must be >= 1");
  if (cfg.tabnet_steps < 1) errors.push_back("selector.tabnet.steps must be >= 1");
  if (cfg.lambda_inv.empty()) errors.push_back("selector.lambda_inv must be non-empty");
  if (cfg.tabnet_lambda_sparse.empty())
    errors.push_back("selector.tabnet.lambda_sparse must be non-empty");
  if (cfg.hidden.empty()) errors.push_back("model.hidden must name at least one layer");
  if (!cfg.synthetic &&
      (cfg.train_path.empty() || cfg.valid_path.empty() || cfg.test_path.empty()))
    errors.push_back("dataset must give train/valid/test paths or a synthetic block");
  if (cfg.synthetic && cfg.synthetic->s > cfg.synthetic->d)
    errors.push_back("dataset.synthetic.s must not exceed d");
  return errors;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  ordered_json root;
  root["method"] = cfg.method;
  ordered_json ds;
  ds["train"] = cfg.train_path;
  ds["valid"] = cfg.valid_path;
  ds["test"] = cfg.test_path;
  if (cfg.d_override) ds["d"] = *cfg.d_override;
  ds["log1p"] = cfg.log1p;
  ds["standardize"] = cfg.standardize;
  ds["cost_table"] = cfg.cost_table_path;
  if (cfg.synthetic) {
    const SyntheticSpec& s = *cfg.synthetic;
    ds["synthetic"] = {{"d", s.d},
                       {"s", s.s},
                       {"train_queries", s.train_queries},
                       {"valid_queries", s.valid_queries},
                       {"test_queries", s.test_queries},
                       {"docs_per_query", s.docs_per_query},
                       {"label_levels", s.label_levels},
                       {"noise", s.noise},
                       {"seed", s.seed}};
  }
  root["dataset"] = std::move(ds);
  root["model"] = {{"hidden", cfg.hidden}};
  root["train"] = {{"epochs", cfg.epochs},
                   {"lr", cfg.lr},
                   {"patience", cfg.patience},
                   {"seeds", cfg.seeds}};
  ordered_json sel;
  sel["budget_fraction"] = cfg.budget_fraction;
  sel["k"] = cfg.k;
  sel["tau_start"] = cfg.tau_start;
  sel["tau_end"] = cfg.tau_end;
  if (cfg.fixed_tau) sel["fixed_tau"] = *cfg.fixed_tau;
  sel["sample_eval_masks"] = cfg.sample_eval_masks;
  sel["groups"] = cfg.groups;
  sel["group_budget"] = cfg.group_budget;
  sel["lambda_rec"] = cfg.lambda_rec;
  sel["lambda_inv"] = cfg.lambda_inv;
  sel["lassonet"] = {{"m", cfg.lassonet_m},
                     {"lambda_path", cfg.lassonet_lambda_path},
                     {"epochs_per_lambda", cfg.lassonet_epochs_per_lambda}};
  sel["tabnet"] = {{"steps", cfg.tabnet_steps},
                   {"gamma", cfg.tabnet_gamma},
                   {"lambda_sparse", cfg.tabnet_lambda_sparse},
                   {"width", cfg.tabnet_width}};
  root["selector"] = std::move(sel);
  root["output_dir"] = cfg.output_dir;
  return root.dump(2) + "\n";
}

LoadedData load_experiment_data(const ExperimentConfig& cfg) {
  LoadedData out;
  if (cfg.synthetic) {
    SyntheticData sd = generate_synthetic(*cfg.synthetic);
    out.train = std::move(sd.train);
    out.valid = std::move(sd.valid);
    out.test = std::move(sd.test);
    out.informative = std::move(sd.informative);
  } else {
    out.train = load_svmlight(cfg.train_path, cfg.d_override);
    out.train.split = "train";
    // Valid/test widths must not exceed the train width.
    out.valid = load_svmlight(cfg.valid_path, out.train.num_features);
    out.valid.split = "valid";
    out.test = load_svmlight(cfg.test_path, out.train.num_features);
    out.test.split = "test";
  }
  if (cfg.log1p) {
    transform_log1p(out.train);
    transform_log1p(out.valid);
    transform_log1p(out.test);
  }
  if (cfg.standardize) {
    Standardizer st;
    st.fit(out.train);
    st.apply(out.train);
    st.apply(out.valid);
    st.apply(out.test);
  }
  if (!cfg.cost_table_path.empty())
    out.costs = load_cost_table(cfg.cost_table_path, out.train.num_features);
  return out;
}

std::vector<std::uint8_t> budget_mask_from_scores(const std::vector<double>& scores,
                                                  double budget, std::size_t d) {
  if (scores.size() != d)
    throw std::invalid_argument("budget mask: feature score length mismatch");
  const auto take = std::min<std::size_t>(
      d, static_cast<std::size_t>(std::ceil(budget * static_cast<double>(d))));
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::uint8_t> mask(d, 0);
  for (std::size_t i = 0; i < take; ++i) mask[idx[i]] = 1;
  return mask;
}

namespace {

MethodHyper hyper_from_config(const ExperimentConfig& cfg, std::size_t d) {
  MethodHyper h;
  h.hidden = cfg.hidden;
  h.k = cfg.resolve_k(d);
  h.groups = cfg.groups;
  h.group_budget = cfg.group_budget;
  h.lambda_rec = cfg.lambda_rec;
  h.lambda_inv = cfg.lambda_inv.front();
  h.lassonet_m = cfg.lassonet_m;
  h.tabnet_steps = cfg.tabnet_steps;
  h.tabnet_gamma = cfg.tabnet_gamma;
  h.tabnet_lambda_sparse = cfg.tabnet_lambda_sparse.front();
  h.tabnet_width = cfg.tabnet_width;
  return h;
}

TrainOptions train_options_from_config(const ExperimentConfig& cfg, std::size_t d) {
  TrainOptions t;
  t.epochs = cfg.epochs;
  t.lr = cfg.lr;
  t.patience = cfg.patience;
  t.tau_start = cfg.tau_start;
  t.tau_end = cfg.tau_end;
  t.fixed_tau = cfg.fixed_tau;
  t.target_features = cfg.resolve_k(d);
  t.lambda_path = cfg.lassonet_lambda_path;
  t.epochs_per_lambda = cfg.lassonet_epochs_per_lambda;
  return t;
}

void write_feature_scores_csv(const std::string& path,
                              const std::vector<double>& scores) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "feature_index,frequency\n";
  for (std::size_t j = 0; j < scores.size(); ++j)
    out << (j + 1) << ',' << num_str(scores[j]) << '\n';
}

std::vector<double> read_feature_scores_csv(const std::string& path, std::size_t d) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> scores(d, 0.0);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("bad feature score line in " + path);
    const std::size_t idx = std::stoul(line.substr(0, comma));
    if (idx < 1 || idx > d) throw std::runtime_error("bad feature index in " + path);
    scores[idx - 1] = std::stod(line.substr(comma + 1));
  }
  return scores;
}

double vec_mean(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) /
                         static_cast<double>(v.size());
}

double vec_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = vec_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Grid rule for budget-agnostic sweeps: best validation NDCG@10 among points
// with 0 < #F <= 2 * k_target; otherwise the sparsest point with #F > 0;
// otherwise the first point.
std::size_t choose_grid_point(const std::vector<GridPointResult>& grid,
                              std::size_t k_target) {
  std::size_t best = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].num_features == 0 || grid[i].num_features > 2 * k_target) continue;
    if (best == grid.size() || grid[i].valid_ndcg10 > grid[best].valid_ndcg10)
      best = i;
  }
  if (best < grid.size()) return best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].num_features == 0) continue;
    if (best == grid.size() || grid[i].num_features < grid[best].num_features)
      best = i;
  }
  return best < grid.size() ? best : 0;
}

struct SeedArtifacts {
  SeedResult result;
  std::unique_ptr<SelectionMethod> method;
};

SeedArtifacts run_one_seed(const ExperimentConfig& cfg, const LoadedData& data,
                           std::uint64_t seed) {
  const std::size_t d = data.train.num_features;
  const std::size_t k_target = cfg.resolve_k(d);

  std::vector<double> grid_values{0.0};
  const bool invase_grid = cfg.method == "invase";
  const bool tabnet_grid = cfg.method == "tabnet";
  if (invase_grid) grid_values = cfg.lambda_inv;
  if (tabnet_grid) grid_values = cfg.tabnet_lambda_sparse;

  SeedArtifacts out;
  out.result.seed = seed;

  std::vector<GridPointResult> grid;
  std::vector<std::unique_ptr<SelectionMethod>> candidates;
  std::vector<TrainResult> train_results;
  for (double gv : grid_values) {
    MethodHyper hyper = hyper_from_config(cfg, d);
    if (invase_grid) hyper.lambda_inv = gv;
    if (tabnet_grid) hyper.tabnet_lambda_sparse = gv;

    Rng master(seed);
    Rng init_rng = master.fork(0);
    Rng train_rng = master.fork(1);
    auto method = make_method(cfg.method, d, hyper, init_rng);
    TrainOptions topt = train_options_from_config(cfg, d);
    TrainResult tr = method->train(data.train, data.valid, topt, train_rng);

    GridPointResult gp;
    gp.lambda = gv;
    gp.num_features = method->selected_count(data.train);
    gp.valid_ndcg10 = tr.best_valid_ndcg10;
    grid.push_back(gp);
    candidates.push_back(std::move(method));
    train_results.push_back(std::move(tr));
  }

  const std::size_t pick =
      grid.size() == 1 ? 0 : choose_grid_point(grid, k_target);
  grid[pick].chosen = true;

  out.method = std::move(candidates[pick]);
  const TrainResult& tr = train_results[pick];
  out.result.best_epoch = tr.best_epoch;
  out.result.best_valid_ndcg10 = tr.best_valid_ndcg10;
  out.result.lassonet_path = tr.path;
  if (grid.size() > 1) out.result.grid = grid;

  Rng master(seed);
  Rng eval_rng = master.fork(9);
  EvalReport test_report =
      evaluate(*out.method, data.test, nullptr, {1, 10}, cfg.tau_end,
               cfg.sample_eval_masks ? &eval_rng : nullptr);
  out.result.ndcg1 = test_report.ndcg_mean.at(1);
  out.result.ndcg10 = test_report.ndcg_mean.at(10);
  out.result.num_features = out.method->selected_count(data.train);
  out.result.feature_scores = out.method->feature_scores(data.train);
  if (cfg.method == "tabnet")
    out.result.tabnet_importance_count =
        measure_selected_count(out.result.feature_scores);
  return out;
}

ordered_json seed_result_to_json(const SeedResult& sr, const std::string& method) {
  ordered_json j;
  j["seed"] = sr.seed;
  j["ndcg1"] = sr.ndcg1;
  j["ndcg10"] = sr.ndcg10;
  j["num_features"] = sr.num_features;
  j["best_epoch"] = sr.best_epoch;
  j["best_valid_ndcg10"] = sr.best_valid_ndcg10;
  if (!sr.grid.empty()) {
    ordered_json grid = ordered_json::array();
    for (const auto& g : sr.grid)
      grid.push_back({{"lambda", g.lambda},
                      {"num_features", g.num_features},
                      {"valid_ndcg10", g.valid_ndcg10},
                      {"chosen", g.chosen}});
    j["grid"] = std::move(grid);
  }
  if (!sr.lassonet_path.empty()) {
    ordered_json path = ordered_json::array();
    for (const auto& p : sr.lassonet_path)
      path.push_back({{"lambda", p.lambda},
                      {"num_features", p.num_features},
                      {"valid_ndcg10", p.valid_ndcg10}});
    j["lambda_path"] = std::move(path);
  }
  if (method == "tabnet") j["num_features_by_importance"] = sr.tabnet_importance_count;
  return j;
}

void write_table_csv(const std::string& path, const RunResult& rr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,ndcg1_mean,ndcg1_std,ndcg10_mean,ndcg10_std,num_features\n";
  out << rr.method << ',' << num_str(rr.ndcg1_mean) << ',' << num_str(rr.ndcg1_std)
      << ',' << num_str(rr.ndcg10_mean) << ',' << num_str(rr.ndcg10_std) << ','
      << num_str(rr.num_features_mean) << '\n';
}

void write_curve_csv(const std::string& path, const BudgetCurve& curve,
                     bool has_cost) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << (has_cost ? "budget,ndcg1,ndcg10,cost\n" : "budget,ndcg1,ndcg10\n");
  for (const auto& p : curve.points) {
    out << num_str(p.budget) << ',' << num_str(p.ndcg1) << ',' << num_str(p.ndcg10);
    if (has_cost) out << ',' << num_str(p.cost);
    out << '\n';
  }
}

}  // namespace

RunResult run_scenario1(const ExperimentConfig& cfg) {
  const LoadedData data = load_experiment_data(cfg);
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream cfg_out(fs::path(cfg.output_dir) / "resolved_config.json");
    if (!cfg_out)
      throw std::runtime_error("cannot write to output dir: " + cfg.output_dir);
    cfg_out << resolved_config_json(cfg);
  }
  std::ofstream log(fs::path(cfg.output_dir) / "run.log");

  RunResult rr;
  rr.method = cfg.method;
  std::vector<double> n1, n10, nf;
  for (std::uint64_t seed : cfg.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedArtifacts art = run_one_seed(cfg, data, seed);
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);

    const fs::path seed_dir = fs::path(cfg.output_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    art.method->params().save((seed_dir / "checkpoint").string());
    write_feature_scores_csv((seed_dir / "feature_scores.csv").string(),
                             art.result.feature_scores);

    log << "seed " << seed << ": ndcg10=" << art.result.ndcg10
        << " num_features=" << art.result.num_features
        << " wall_clock_seconds=" << dt.count() << "\n";
    n1.push_back(art.result.ndcg1);
    n10.push_back(art.result.ndcg10);
    nf.push_back(static_cast<double>(art.result.num_features));
    rr.seeds.push_back(std::move(art.result));
  }
  rr.ndcg1_mean = vec_mean(n1);
  rr.ndcg1_std = vec_std(n1);
  rr.ndcg10_mean = vec_mean(n10);
  rr.ndcg10_std = vec_std(n10);
  rr.num_features_mean = vec_mean(nf);

  ordered_json results;
  results["scenario"] = 1;
  results["method"] = cfg.method;
  results["eval_mask_mode"] =
      cfg.sample_eval_masks ? "sampled" : "deterministic_topk";
  results["config"] = json::parse(resolved_config_json(cfg));
  ordered_json seeds = ordered_json::array();
  for (const auto& sr : rr.seeds) seeds.push_back(seed_result_to_json(sr, cfg.method));
  results["seeds"] = std::move(seeds);
  results["aggregate"] = {{"ndcg1_mean", rr.ndcg1_mean},
                          {"ndcg1_std", rr.ndcg1_std},
                          {"ndcg10_mean", rr.ndcg10_mean},
                          {"ndcg10_std", rr.ndcg10_std},
                          {"num_features_mean", rr.num_features_mean}};
  {
    std::ofstream out(fs::path(cfg.output_dir) / "results.json");
    if (!out) throw std::runtime_error("cannot write results.json");
    out << results.dump(2) << "\n";
  }
  write_table_csv((fs::path(cfg.output_dir) / "table.csv").string(), rr);
  return rr;
}

BudgetCurve run_scenario2(const std::string& run_dir, std::vector<double> budgets) {
  if (budgets.empty()) throw std::invalid_argument("budget-eval: no budgets given");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 0.0 || budgets[i] > 1.0)
      throw std::invalid_argument("budget-eval: budgets must lie in [0, 1]");
    if (i > 0 && budgets[i] <= budgets[i - 1])
      throw std::invalid_argument("budget-eval: budgets must be strictly increasing");
  }
  const ExperimentConfig cfg =
      load_config((fs::path(run_dir) / "resolved_config.json").string());
  const LoadedData data = load_experiment_data(cfg);
  const std::size_t d = data.train.num_features;

  BudgetCurve curve;
  curve.budgets = budgets;
  curve.points.resize(budgets.size());
  for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
    curve.points[bi].budget = budgets[bi];
    curve.points[bi].has_cost = data.costs.has_value();
  }

  for (std::uint64_t seed : cfg.seeds) {
    const fs::path seed_dir = fs::path(run_dir) / ("seed_" + std::to_string(seed));
    MethodHyper hyper = hyper_from_config(cfg, d);
    Rng dummy(seed);
    auto method = make_method(cfg.method, d, hyper, dummy);
    method->params().load((seed_dir / "checkpoint").string());
    const auto scores =
        read_feature_scores_csv((seed_dir / "feature_scores.csv").string(), d);

    for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
      const auto mask = budget_mask_from_scores(scores, budgets[bi], d);
      EvalReport er = evaluate(*method, data.test, &mask, {1, 10}, cfg.tau_end);
      BudgetPoint& p = curve.points[bi];
      p.per_seed_ndcg1.push_back(er.ndcg_mean.at(1));
      p.per_seed_ndcg10.push_back(er.ndcg_mean.at(10));
      if (data.costs) p.cost += cost_of_selection(mask, *data.costs);
    }
  }

  const double n_seeds = static_cast<double>(cfg.seeds.size());
  for (auto& p : curve.points) {
    p.ndcg1 = vec_mean(p.per_seed_ndcg1);
    p.ndcg10 = vec_mean(p.per_seed_ndcg10);
    if (p.has_cost) p.cost /= n_seeds;
  }

  const fs::path out_dir = fs::path(run_dir) / "budget_eval";
  fs::create_directories(out_dir);
  ordered_json results;
  results["scenario"] = 2;
  results["method"] = cfg.method;
  results["budgets"] = budgets;
  ordered_json points = ordered_json::array();
  for (const auto& p : curve.points) {
    ordered_json pj;
    pj["budget"] = p.budget;
    pj["ndcg1"] = p.ndcg1;
    pj["ndcg10"] = p.ndcg10;
    if (p.has_cost) pj["cost"] = p.cost;
    pj["per_seed_ndcg1"] = p.per_seed_ndcg1;
    pj["per_seed_ndcg10"] = p.per_seed_ndcg10;
    points.push_back(std::move(pj));
  }
  results["curve"] = std::move(points);
  {
    std::ofstream out(out_dir / "results.json");
    if (!out) throw std::runtime_error("cannot write budget_eval/results.json");
    out << results.dump(2) << "\n";
  }
  write_curve_csv((out_dir / "curve.csv").string(), curve,
                  !curve.points.empty() && curve.points.front().has_cost);
  return curve;
}

void rerender_reports(const std::string& results_json_path) {
  std::ifstream in(results_json_path);
  if (!in) throw std::runtime_error("cannot open " + results_json_path);
  json results = json::parse(in);
  const fs::path dir = fs::path(results_json_path).parent_path();
  const int scenario = results.at("scenario").get<int>();
  if (scenario == 1) {
    RunResult rr;
    rr.method = results.at("method").get<std::string>();
    const auto& agg = results.at("aggregate");
    rr.ndcg1_mean = agg.at("ndcg1_mean").get<double>();
    rr.ndcg1_std = agg.at("ndcg1_std").get<double>();
    rr.ndcg10_mean = agg.at("ndcg10_mean").get<double>();
    rr.ndcg10_std = agg.at("ndcg10_std").get<double>();
    rr.num_features_mean = agg.at("num_features_mean").get<double>();
    write_table_csv((dir / "table.csv").string(), rr);
  } else if (scenario == 2) {
    BudgetCurve curve;
    bool has_cost = false;
    for (const auto& pj : results.at("curve")) {
      BudgetPoint p;
      p.budget = pj.at("budget").get<double>();
      p.ndcg1 = pj.at("ndcg1").get<double>();
      p.ndcg10 = pj.at("ndcg10").get<double>();
      if (pj.contains("cost")) {
        p.cost = pj.at("cost").get<double>();
        p.has_cost = true;
        has_cost = true;
      }
      curve.points.push_back(std::move(p));
    }
    write_curve_csv((dir / "curve.csv").string(), curve, has_cost);
  } else {
    throw std::runtime_error("unknown scenario in " + results_json_path);
  }
}

}  // namespace ltrsel
