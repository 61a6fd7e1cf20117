#include "ltrsel/selectors_regularized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ltrsel {

using ad::Var;

std::pair<std::vector<double>, double> lassonet_hierprox(
    const std::vector<double>& w_col, double theta, double lambda, double lr,
    double M) {
  if (M <= 0.0) throw std::invalid_argument("hierprox: M must be positive");
  const double penalty = lambda * lr;
  const std::size_t h = w_col.size();

  std::vector<double> abs_sorted(h);
  for (std::size_t i = 0; i < h; ++i) abs_sorted[i] = std::abs(w_col[i]);
  std::sort(abs_sorted.begin(), abs_sorted.end(), std::greater<double>());

  // Scan support sizes m; the candidate threshold is valid when it falls
  // between the m-th and (m+1)-th largest |w|.
  double threshold = 0.0;
  double prefix = 0.0;
  for (std::size_t m = 0; m <= h; ++m) {
    if (m > 0) prefix += abs_sorted[m - 1];
    const double soft = std::max(std::abs(theta) + M * prefix - penalty, 0.0);
    const double cand = M / (1.0 + static_cast<double>(m) * M * M) * soft;
    const double upper =
        m == 0 ? std::numeric_limits<double>::infinity() : abs_sorted[m - 1];
    const double lower = m < h ? abs_sorted[m] : 0.0;
    threshold = cand;
    if (cand <= upper && cand >= lower) break;
  }

  const double sign_theta = theta < 0.0 ? -1.0 : 1.0;
  std::vector<double> w_out(h);
  for (std::size_t i = 0; i < h; ++i) {
    const double sign_w = w_col[i] < 0.0 ? -1.0 : 1.0;
    w_out[i] = sign_w * std::min(std::abs(w_col[i]), threshold);
  }
  return {std::move(w_out), sign_theta * threshold / M};
}

InvaseMethod::InvaseMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
    : d_(d), lambda_inv_(hyper.lambda_inv),
      selector_(d, hyper.hidden, d, rng),
      predictor_(d, hyper.hidden, 1, rng),
      baseline_(d, hyper.hidden, 1, rng) {
  selector_.register_params(reg_, "selector");
  predictor_.register_params(reg_, "predictor");
  baseline_.register_params(reg_, "baseline");
}

Var InvaseMethod::training_loss(const QueryGroup& q, double, Rng& rng) {
  Var x = ad::constant(q.features);
  Var p = ad::sigmoid(selector_.forward(x, true));

  Tensor mask(q.features.shape);
  for (std::size_t i = 0; i < mask.numel(); ++i)
    mask[i] = rng.uniform() < p.value()[i] ? 1.0 : 0.0;
  Tensor masked_x = q.features;
  for (std::size_t i = 0; i < masked_x.numel(); ++i) masked_x[i] *= mask[i];

  Var l_pred = ad::listwise_softmax_ce(
      predictor_.forward(ad::constant(masked_x), true), labels_as_double(q.labels));
  Var l_base = ad::listwise_softmax_ce(baseline_.forward(x, true),
                                       labels_as_double(q.labels));
  // Score-function estimator: the per-query loss difference scales the mask
  // log-likelihood and is treated as a constant.
  const double advantage = l_pred.scalar() - l_base.scalar();
  Var selector_loss = ad::add(ad::scale(ad::bernoulli_loglik_sum(p, mask), advantage),
                              ad::scale(ad::mean_all(p), lambda_inv_));
  return ad::add(ad::add(l_pred, l_base), selector_loss);
}

std::vector<double> InvaseMethod::score(const Tensor& x, double, Rng* sample_rng) {
  Var p = ad::sigmoid(selector_.forward(ad::constant(x), false));
  Tensor masked = x;
  if (sample_rng) {
    for (std::size_t i = 0; i < masked.numel(); ++i)
      if (sample_rng->uniform() >= p.value()[i]) masked[i] = 0.0;
  } else {
    for (std::size_t i = 0; i < masked.numel(); ++i)
      if (p.value()[i] < 0.5) masked[i] = 0.0;
  }
  return predictor_.forward(ad::constant(masked), false).value().values;
}

std::vector<double> InvaseMethod::feature_scores(const Dataset& data) {
  std::vector<double> freq(d_, 0.0);
  std::size_t docs = 0;
  for (const auto& g : data.groups) {
    Var p = ad::sigmoid(selector_.forward(ad::constant(g.features), false));
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < d_; ++j)
        if (p.value().at(i, j) >= 0.5) freq[j] += 1.0;
    docs += g.size();
  }
  if (docs > 0)
    for (double& f : freq) f /= static_cast<double>(docs);
  return freq;
}

std::size_t InvaseMethod::selected_count(const Dataset& data) {
  return measure_selected_count(feature_scores(data));
}

LassoNetMethod::LassoNetMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
    : d_(d), m_const_(hyper.lassonet_m),
      net_(d, hyper.hidden, 1, rng),
      theta_(ad::param(Tensor({d}))) {
  if (m_const_ <= 0.0) throw std::invalid_argument("lassonet: M must be positive");
  // Residual weights start small but nonzero so the prox constraint does not
  // freeze the first layer at initialization.
  for (double& v : theta_.value().values) v = 0.01 * rng.normal();
  net_.register_params(reg_, "net");
  reg_.add("theta", theta_);
}

Var LassoNetMethod::score_graph(const Var& x, bool training) {
  Var deep = net_.forward(x, training);
  Var skip = ad::matmul(x, ad::reshape(theta_, {d_, 1}));
  return ad::add(deep, skip);
}

Var LassoNetMethod::training_loss(const QueryGroup& q, double, Rng&) {
  return ad::listwise_softmax_ce(score_graph(ad::constant(q.features), true),
                                 labels_as_double(q.labels));
}

std::vector<double> LassoNetMethod::score(const Tensor& x, double, Rng*) {
  return score_graph(ad::constant(x), false).value().values;
}

void LassoNetMethod::post_step(double lr) {
  Tensor& w = net_.layers[0].w.value();  // [h x d]
  const std::size_t h = w.rows();
  std::vector<double> col(h);
  for (std::size_t j = 0; j < d_; ++j) {
    for (std::size_t r = 0; r < h; ++r) col[r] = w.at(r, j);
    auto [col_out, theta_out] =
        lassonet_hierprox(col, theta_.value()[j], lambda_, lr, m_const_);
    for (std::size_t r = 0; r < h; ++r) w.at(r, j) = col_out[r];
    theta_.value()[j] = theta_out;
  }
}

std::vector<double> LassoNetMethod::feature_scores(const Dataset&) {
  std::vector<double> imp(d_);
  for (std::size_t j = 0; j < d_; ++j) imp[j] = std::abs(theta_.value()[j]);
  return imp;
}

std::size_t LassoNetMethod::selected_count(const Dataset&) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < d_; ++j)
    if (theta_.value()[j] != 0.0) ++n;
  return n;
}

TrainResult LassoNetMethod::train(const Dataset& train_set, const Dataset& valid,
                                  const TrainOptions& opt, Rng& rng) {
  if (train_set.groups.empty()) throw std::invalid_argument("train: empty dataset");
  Adam adam(params().vars(), AdamOptions{.lr = opt.lr});
  TrainResult result;

  std::vector<std::size_t> order(train_set.groups.size());
  std::iota(order.begin(), order.end(), 0);
  auto run_epochs = [&](int epochs) {
    for (int e = 0; e < epochs; ++e) {
      rng.shuffle(order);
      double loss_sum = 0.0;
      for (std::size_t qi : order) {
        Var loss = training_loss(train_set.groups[qi], 0.0, rng);
        const double lv = loss.scalar();
        if (!std::isfinite(lv))
          throw std::runtime_error("training diverged: non-finite loss for lassonet");
        ad::backward(loss);
        adam.step();
        adam.zero_grad();
        post_step(opt.lr);
        if (opt.post_step_hook) opt.post_step_hook(*this);
        loss_sum += lv;
      }
      const double epoch_loss = loss_sum / static_cast<double>(order.size());
      if (result.epochs_run == 0) result.first_epoch_loss = epoch_loss;
      result.last_epoch_loss = epoch_loss;
      ++result.epochs_run;
    }
  };

  // Dense warm start.
  lambda_ = 0.0;
  run_epochs(opt.epochs);

  std::vector<double> path = opt.lambda_path;
  if (path.empty())
    for (int i = 0; i < 10; ++i) path.push_back(1e-3 * std::pow(2.0, i));

  // Keep the first model whose #F reaches the target budget; before that,
  // track the best validation NDCG@10 as the fallback.
  std::vector<Tensor> chosen;
  bool target_reached = false;
  double best_valid = -1.0;
  for (double lambda : path) {
    lambda_ = lambda;
    run_epochs(opt.epochs_per_lambda);
    LambdaPoint point;
    point.lambda = lambda;
    point.num_features = selected_count(train_set);
    point.valid_ndcg10 = evaluate(*this, valid).ndcg_mean.at(10);
    result.path.push_back(point);
    const bool hits_target =
        opt.target_features > 0 && point.num_features <= opt.target_features;
    if (!target_reached && (hits_target || point.valid_ndcg10 > best_valid)) {
      best_valid = point.valid_ndcg10;
      chosen = params().snapshot();
      result.chosen_lambda = lambda;
      result.best_valid_ndcg10 = point.valid_ndcg10;
      if (hits_target) target_reached = true;
    }
    if (point.num_features == 0) break;  // fully sparse, nothing left to remove
  }
  if (!chosen.empty()) params().restore(chosen);
  result.best_epoch = result.epochs_run - 1;
  return result;
}

TabNetMethod::TabNetMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
    : d_(d), lambda_sparse_(hyper.tabnet_lambda_sparse),
      model_(d, TabNetConfig{.steps = hyper.tabnet_steps,
                             .gamma = hyper.tabnet_gamma,
                             .width = hyper.tabnet_width},
             rng) {
  model_.register_params(reg_, "tabnet");
}

Var TabNetMethod::training_loss(const QueryGroup& q, double, Rng&) {
  auto fwd = model_.forward(ad::constant(q.features), true);
  Var rank_loss = ad::listwise_softmax_ce(fwd.scores, labels_as_double(q.labels));
  return ad::add(rank_loss, ad::scale(fwd.sparsity, lambda_sparse_));
}

std::vector<double> TabNetMethod::score(const Tensor& x, double, Rng*) {
  return model_.forward(ad::constant(x), false).scores.value().values;
}

std::vector<double> TabNetMethod::feature_scores(const Dataset& data) {
  std::vector<double> importance(d_, 0.0);
  for (const auto& g : data.groups) {
    auto fwd = model_.forward(ad::constant(g.features), false);
    for (std::size_t s = 0; s < fwd.masks.size(); ++s) {
      const Tensor& mask = fwd.masks[s];
      const Tensor& dec = fwd.decisions[s];
      for (std::size_t i = 0; i < g.size(); ++i) {
        double eta = 0.0;
        for (std::size_t c = 0; c < dec.cols(); ++c) eta += dec.at(i, c);
        for (std::size_t j = 0; j < d_; ++j) importance[j] += eta * mask.at(i, j);
      }
    }
  }
  double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0.0)
    for (double& v : importance) v /= total;
  return importance;
}

std::size_t TabNetMethod::selected_count(const Dataset& data) {
  std::vector<std::uint8_t> used(d_, 0);
  for (const auto& g : data.groups) {
    auto fwd = model_.forward(ad::constant(g.features), false);
    for (const Tensor& mask : fwd.masks)
      for (std::size_t i = 0; i < mask.numel(); ++i)
        if (mask[i] > 0.0) used[i % d_] = 1;
  }
  return static_cast<std::size_t>(std::count(used.begin(), used.end(), 1));
}

std::size_t TabNetMethod::selected_count_by_importance(const Dataset& data) {
  return measure_selected_count(feature_scores(data));
}

std::unique_ptr<SelectionMethod> make_invase(std::size_t d, const MethodHyper& h,
                                             Rng& rng) {
  return std::make_unique<InvaseMethod>(d, h, rng);
}

std::unique_ptr<SelectionMethod> make_lassonet(std::size_t d, const MethodHyper& h,
                                               Rng& rng) {
  return std::make_unique<LassoNetMethod>(d, h, rng);
}

std::unique_ptr<SelectionMethod> make_tabnet(std::size_t d, const MethodHyper& h,
                                             Rng& rng) {
  return std::make_unique<TabNetMethod>(d, h, rng);
}

}  // namespace ltrsel
