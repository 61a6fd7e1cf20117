#pragma once

#include "ltrsel/methods.hpp"
#include "ltrsel/tabnet.hpp"

namespace ltrsel {

// Bernoulli masks with a REINFORCE-style selector loss: the per-query loss
// difference between a masked predictor and a full-input baseline scales the
// mask log-likelihood, plus an L1 term on the mean selection probability.
class InvaseMethod final : public SelectionMethod {
 public:
  InvaseMethod(std::size_t d, const MethodHyper& hyper, Rng& rng);

  const char* name() const override { return "invase"; }
  ParamRegistry& params() override { return reg_; }

  ad::Var training_loss(const QueryGroup& q, double tau, Rng& rng) override;
  std::vector<double> score(const Tensor& x, double tau, Rng* sample_rng) override;
  std::vector<double> feature_scores(const Dataset& data) override;
  std::size_t selected_count(const Dataset& data) override;

  FeedForwardNet& selector() { return selector_; }
  FeedForwardNet& predictor() { return predictor_; }
  FeedForwardNet& baseline() { return baseline_; }
  double lambda_inv() const { return lambda_inv_; }

 private:
  std::size_t d_;
  double lambda_inv_;
  FeedForwardNet selector_, predictor_, baseline_;
  ParamRegistry reg_;
};

// Residual-layer lasso with the hierarchical proximal step after every
// optimizer update; trains dense first, then walks a geometric lambda path.
class LassoNetMethod final : public SelectionMethod {
 public:
  LassoNetMethod(std::size_t d, const MethodHyper& hyper, Rng& rng);

  const char* name() const override { return "lassonet"; }
  ParamRegistry& params() override { return reg_; }

  ad::Var training_loss(const QueryGroup& q, double tau, Rng& rng) override;
  std::vector<double> score(const Tensor& x, double tau, Rng* sample_rng) override;
  void post_step(double lr) override;
  std::vector<double> feature_scores(const Dataset& data) override;
  std::size_t selected_count(const Dataset& data) override;

  TrainResult train(const Dataset& train_set, const Dataset& valid,
                    const TrainOptions& opt, Rng& rng) override;

  double lambda() const { return lambda_; }
  void set_lambda(double l) { lambda_ = l; }
  double hierarchy_m() const { return m_const_; }
  const Tensor& theta() const { return theta_.value(); }
  const Tensor& first_layer() const { return net_.layers[0].w.value(); }

 private:
  ad::Var score_graph(const ad::Var& x, bool training);

  std::size_t d_;
  double m_const_;
  double lambda_ = 0.0;
  FeedForwardNet net_;
  ad::Var theta_;
  ParamRegistry reg_;
};

class TabNetMethod final : public SelectionMethod {
 public:
  TabNetMethod(std::size_t d, const MethodHyper& hyper, Rng& rng);

  const char* name() const override { return "tabnet"; }
  ParamRegistry& params() override { return reg_; }

  ad::Var training_loss(const QueryGroup& q, double tau, Rng& rng) override;
  std::vector<double> score(const Tensor& x, double tau, Rng* sample_rng) override;
  // eta-weighted importance aggregated over steps and documents.
  std::vector<double> feature_scores(const Dataset& data) override;
  // #F as the union of sparsemax supports across steps and documents.
  std::size_t selected_count(const Dataset& data) override;
  // Importance-cutoff variant (measure_selected_count on feature_scores).
  std::size_t selected_count_by_importance(const Dataset& data);

  TabNetModel& model() { return model_; }

 private:
  std::size_t d_;
  double lambda_sparse_;
  TabNetModel model_;
  ParamRegistry reg_;
};

}  // namespace ltrsel
