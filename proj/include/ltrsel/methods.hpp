#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ltrsel/data.hpp"
#include "ltrsel/ltr.hpp"
#include "ltrsel/nn.hpp"
#include "ltrsel/optim.hpp"
#include "ltrsel/rng.hpp"

namespace ltrsel {

struct MethodHyper {
  std::vector<std::size_t> hidden{512, 256, 128};
  std::size_t k = 0;  // fixed selection budget (l2x / gl2x / cae)
  // ifg
  std::size_t groups = 0;        // 0 -> ceil(d / 5)
  std::size_t group_budget = 0;  // 0 -> max(1, groups / 5)
  double lambda_rec = 1.0;
  // invase
  double lambda_inv = 0.1;
  // lassonet
  double lassonet_m = 10.0;
  // tabnet
  std::size_t tabnet_steps = 4;
  double tabnet_gamma = 1.3;
  double tabnet_lambda_sparse = 1e-3;
  std::size_t tabnet_width = 32;
};

struct TrainOptions {
  int epochs = 50;
  double lr = 1e-3;
  int patience = 10;
  double tau_start = 10.0;
  double tau_end = 0.1;
  std::optional<double> fixed_tau;
  // lassonet path
  std::size_t target_features = 0;  // 0 -> no budget target (keep densest fit)
  std::vector<double> lambda_path;  // empty -> geometric default
  int epochs_per_lambda = 15;
  std::function<void(class SelectionMethod&)> post_step_hook;
};

struct LambdaPoint {
  double lambda = 0.0;
  std::size_t num_features = 0;
  double valid_ndcg10 = 0.0;
};

struct TrainResult {
  double best_valid_ndcg10 = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  double first_epoch_loss = 0.0;
  double last_epoch_loss = 0.0;
  std::vector<LambdaPoint> path;  // lassonet lambda sweep
  double chosen_lambda = 0.0;
};

// One embedded feature-selection method bundled with its ranking model.
// Training builds one loss graph per query batch; evaluation is deterministic
// (per-document or global top-k masks) unless a sampling rng is supplied.
class SelectionMethod {
 public:
  virtual ~SelectionMethod() = default;

  virtual const char* name() const = 0;
  virtual ParamRegistry& params() = 0;

  virtual ad::Var training_loss(const QueryGroup& q, double tau, Rng& rng) = 0;
  virtual std::vector<double> score(const Tensor& x, double tau = 0.1,
                                    Rng* sample_rng = nullptr) = 0;

  // Per-feature selection frequency / importance over a dataset.
  virtual std::vector<double> feature_scores(const Dataset& data) = 0;
  // The method's #F counting rule.
  virtual std::size_t selected_count(const Dataset& data) = 0;

  virtual void post_step(double lr) { (void)lr; }

  virtual TrainResult train(const Dataset& train, const Dataset& valid,
                            const TrainOptions& opt, Rng& rng);
};

std::unique_ptr<SelectionMethod> make_method(const std::string& name, std::size_t d,
                                             const MethodHyper& hyper, Rng& rng);

const std::vector<std::string>& method_names();

// Joint selector+ranker loop: per-epoch query shuffle, one Adam step per
// query, geometric tau annealing, early stopping on validation NDCG@10.
TrainResult train_joint(SelectionMethod& m, const Dataset& train,
                        const Dataset& valid, const TrainOptions& opt, Rng& rng);

EvalReport evaluate(SelectionMethod& m, const Dataset& data,
                    const std::vector<std::uint8_t>* budget_mask = nullptr,
                    const std::vector<int>& cutoffs = {1, 10},
                    double tau = 0.1, Rng* sample_rng = nullptr);

// Count of entries strictly above rel_threshold * max; 0 for an all-zero or
// non-positive vector.
std::size_t measure_selected_count(const std::vector<double>& values,
                                   double rel_threshold = 1e-6);

// Closed-form hierarchical prox: minimizes 0.5(t - theta)^2 + 0.5|w - W_j|^2
// + lr*lambda*|t| subject to |w|_inf <= M*|t|. The constraint holds exactly
// on the output.
std::pair<std::vector<double>, double> lassonet_hierprox(
    const std::vector<double>& w_col, double theta, double lambda, double lr,
    double M);

std::vector<double> labels_as_double(const std::vector<int>& labels);

}  // namespace ltrsel
