#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ltrsel/methods.hpp"

namespace ltrsel {

namespace {

using ad::Var;

std::vector<double> tensor_to_scores(const Var& v) {
  return v.value().values;
}

Tensor gumbel_tensor(Rng& rng, const std::vector<std::size_t>& shape) {
  Tensor g(shape);
  for (double& v : g.values) v = sample_gumbel_from_uniform(rng.uniform());
  return g;
}

// Indices of the k largest entries, ties broken by ascending index.
std::vector<std::size_t> topk_indices(const double* v, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  idx.resize(std::min(k, n));
  return idx;
}

void check_budget(std::size_t k, std::size_t d) {
  if (k < 1 || k > d)
    throw std::invalid_argument("selection budget k=" + std::to_string(k) +
                                " outside [1, d=" + std::to_string(d) + "]");
}

// k-sample concrete relaxation combined by elementwise max (the L2X trick).
Var ksample_max_mask(const Var& log_probs, std::size_t k, double tau, Rng& rng) {
  Var mask;
  for (std::size_t j = 0; j < k; ++j) {
    Var draw = ad::concrete_rows(log_probs,
                                 gumbel_tensor(rng, log_probs.value().shape), tau);
    mask = mask.defined() ? ad::vmax(mask, draw) : draw;
  }
  return mask;
}

class DnnMethod final : public SelectionMethod {
 public:
  DnnMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
      : d_(d), ranker_(d, hyper.hidden, 1, rng) {
    ranker_.register_params(reg_, "ranker");
  }

  const char* name() const override { return "dnn"; }
  ParamRegistry& params() override { return reg_; }

  Var training_loss(const QueryGroup& q, double, Rng&) override {
    Var scores = ranker_.forward(ad::constant(q.features), true);
    return ad::listwise_softmax_ce(scores, labels_as_double(q.labels));
  }

  std::vector<double> score(const Tensor& x, double, Rng*) override {
    return tensor_to_scores(ranker_.forward(ad::constant(x), false));
  }

  std::vector<double> feature_scores(const Dataset&) override {
    return std::vector<double>(d_, 1.0);
  }

  std::size_t selected_count(const Dataset&) override { return d_; }

 private:
  std::size_t d_;
  FeedForwardNet ranker_;
  ParamRegistry reg_;
};

class L2xMethod final : public SelectionMethod {
 public:
  L2xMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
      : d_(d), k_(hyper.k),
        selector_(d, hyper.hidden, d, rng),
        ranker_(d, hyper.hidden, 1, rng) {
    check_budget(k_, d_);
    selector_.register_params(reg_, "selector");
    ranker_.register_params(reg_, "ranker");
  }

  const char* name() const override { return "l2x"; }
  ParamRegistry& params() override { return reg_; }

  Var training_loss(const QueryGroup& q, double tau, Rng& rng) override {
    Var x = ad::constant(q.features);
    Var log_probs = ad::log_softmax_rows(selector_.forward(x, true));
    Var mask = ksample_max_mask(log_probs, k_, tau, rng);
    Var scores = ranker_.forward(ad::mul(x, mask), true);
    return ad::listwise_softmax_ce(scores, labels_as_double(q.labels));
  }

  std::vector<double> score(const Tensor& x, double tau, Rng* sample_rng) override {
    Var xc = ad::constant(x);
    Var logits = selector_.forward(xc, false);
    Var masked;
    if (sample_rng) {
      Var mask = ksample_max_mask(ad::log_softmax_rows(logits), k_, tau, *sample_rng);
      masked = ad::mul(xc, mask);
    } else {
      Tensor hard(x.shape);
      const std::size_t n = x.rows();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : topk_indices(logits.value().data() + i * d_, d_, k_))
          hard.at(i, j) = 1.0;
      masked = ad::mul(xc, ad::constant(std::move(hard)));
    }
    return tensor_to_scores(ranker_.forward(masked, false));
  }

  std::vector<double> feature_scores(const Dataset& data) override {
    std::vector<double> freq(d_, 0.0);
    std::size_t docs = 0;
    for (const auto& g : data.groups) {
      Var logits = selector_.forward(ad::constant(g.features), false);
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j : topk_indices(logits.value().data() + i * d_, d_, k_))
          freq[j] += 1.0;
      docs += g.size();
    }
    if (docs > 0)
      for (double& f : freq) f /= static_cast<double>(docs);
    return freq;
  }

  std::size_t selected_count(const Dataset& data) override {
    const auto freq = feature_scores(data);
    std::size_t n = 0;
    for (double f : freq)
      if (f > 0.0) ++n;
    return n;
  }

 private:
  std::size_t d_, k_;
  FeedForwardNet selector_;
  FeedForwardNet ranker_;
  ParamRegistry reg_;
};

class Gl2xMethod final : public SelectionMethod {
 public:
  Gl2xMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
      : d_(d), k_(hyper.k), zeta_(ad::param(Tensor({d}))),
        ranker_(d, hyper.hidden, 1, rng) {
    check_budget(k_, d_);
    reg_.add("zeta", zeta_);
    ranker_.register_params(reg_, "ranker");
  }

  const char* name() const override { return "gl2x"; }
  ParamRegistry& params() override { return reg_; }

  Var training_loss(const QueryGroup& q, double tau, Rng& rng) override {
    Var x = ad::constant(q.features);
    // One global mask per optimizer step, shared by the whole query batch.
    Var mask = ksample_max_mask(ad::log_softmax_rows(zeta_), k_, tau, rng);
    Var scores = ranker_.forward(ad::rowwise_mul(x, mask), true);
    return ad::listwise_softmax_ce(scores, labels_as_double(q.labels));
  }

  std::vector<double> score(const Tensor& x, double tau, Rng* sample_rng) override {
    Var xc = ad::constant(x);
    Var masked;
    if (sample_rng) {
      Var mask = ksample_max_mask(ad::log_softmax_rows(zeta_), k_, tau, *sample_rng);
      masked = ad::rowwise_mul(xc, mask);
    } else {
      masked = ad::rowwise_mul(xc, ad::constant(hard_mask()));
    }
    return tensor_to_scores(ranker_.forward(masked, false));
  }

  std::vector<double> feature_scores(const Dataset&) override {
    Tensor probs = zeta_.value();
    ad::softmax_inplace(probs.data(), d_);
    return probs.values;
  }

  std::size_t selected_count(const Dataset&) override { return k_; }

 private:
  Tensor hard_mask() const {
    Tensor m({d_});
    for (std::size_t j : topk_indices(zeta_.value().data(), d_, k_)) m[j] = 1.0;
    return m;
  }

  std::size_t d_, k_;
  Var zeta_;
  FeedForwardNet ranker_;
  ParamRegistry reg_;
};

class CaeMethod final : public SelectionMethod {
 public:
  CaeMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
      : d_(d), k_(hyper.k), zeta_(ad::param(Tensor({hyper.k, d}))),
        ranker_(hyper.k, hyper.hidden, 1, rng) {
    check_budget(k_, d_);
    // Small random logits so row argmaxes start spread out.
    for (double& v : zeta_.value().values) v = 0.01 * rng.normal();
    reg_.add("zeta", zeta_);
    ranker_.register_params(reg_, "ranker");
  }

  const char* name() const override { return "cae"; }
  ParamRegistry& params() override { return reg_; }

  Var training_loss(const QueryGroup& q, double tau, Rng& rng) override {
    Var x = ad::constant(q.features);
    Var rows = ad::concrete_rows(ad::log_softmax_rows(zeta_),
                                 gumbel_tensor(rng, {k_, d_}), tau);
    Var encoded = ad::matmul_nt(x, rows);  // [n x k], row j = x . c_j
    Var scores = ranker_.forward(encoded, true);
    return ad::listwise_softmax_ce(scores, labels_as_double(q.labels));
  }

  std::vector<double> score(const Tensor& x, double tau, Rng* sample_rng) override {
    Var encoded;
    if (sample_rng) {
      Var rows = ad::concrete_rows(ad::log_softmax_rows(zeta_),
                                   gumbel_tensor(*sample_rng, {k_, d_}), tau);
      encoded = ad::matmul_nt(ad::constant(x), rows);
    } else {
      // Sampling with replacement collapses to the per-row argmax feature.
      const auto picks = row_argmaxes();
      Tensor enc({x.rows(), k_});
      for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t r = 0; r < k_; ++r) enc.at(i, r) = x.at(i, picks[r]);
      encoded = ad::constant(std::move(enc));
    }
    return tensor_to_scores(ranker_.forward(encoded, false));
  }

  std::vector<double> feature_scores(const Dataset&) override {
    std::vector<double> freq(d_, 0.0);
    for (std::size_t j : row_argmaxes()) freq[j] += 1.0 / static_cast<double>(k_);
    return freq;
  }

  std::size_t selected_count(const Dataset&) override {
    const auto picks = row_argmaxes();
    std::vector<std::uint8_t> seen(d_, 0);
    for (std::size_t j : picks) seen[j] = 1;
    return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
  }

 private:
  std::vector<std::size_t> row_argmaxes() const {
    std::vector<std::size_t> picks(k_);
    for (std::size_t r = 0; r < k_; ++r) {
      const double* row = zeta_.value().data() + r * d_;
      picks[r] = static_cast<std::size_t>(
          std::max_element(row, row + d_) - row);
    }
    return picks;
  }

  std::size_t d_, k_;
  Var zeta_;
  FeedForwardNet ranker_;
  ParamRegistry reg_;
};

class IfgMethod final : public SelectionMethod {
 public:
  IfgMethod(std::size_t d, const MethodHyper& hyper, Rng& rng)
      : d_(d),
        groups_(hyper.groups > 0 ? hyper.groups : (d + 4) / 5),
        group_budget_(hyper.group_budget > 0 ? hyper.group_budget
                                             : std::max<std::size_t>(1, groups_ / 5)),
        lambda_rec_(hyper.lambda_rec),
        assign_(ad::param(Tensor({d, groups_}))),
        group_logits_(ad::param(Tensor({groups_}))),
        recon_(d, d, rng),
        ranker_(d, hyper.hidden, 1, rng) {
    if (group_budget_ > groups_)
      throw std::invalid_argument("ifg: group budget k_g=" +
                                  std::to_string(group_budget_) + " exceeds G=" +
                                  std::to_string(groups_));
    for (double& v : assign_.value().values) v = 0.01 * rng.normal();
    reg_.add("assign", assign_);
    reg_.add("group_logits", group_logits_);
    recon_.register_params(reg_, "recon");
    ranker_.register_params(reg_, "ranker");
  }

  const char* name() const override { return "ifg"; }
  ParamRegistry& params() override { return reg_; }

  Var soft_mask(double tau, Rng& rng) {
    Var assign = ad::concrete_rows(ad::log_softmax_rows(assign_),
                                   gumbel_tensor(rng, {d_, groups_}), tau);
    Var gsel = ksample_max_mask(ad::log_softmax_rows(group_logits_), group_budget_,
                                tau, rng);
    return ad::reshape(ad::matmul(assign, ad::reshape(gsel, {groups_, 1})), {d_});
  }

  Var training_loss(const QueryGroup& q, double tau, Rng& rng) override {
    Var x = ad::constant(q.features);
    Var mask = soft_mask(tau, rng);
    Var masked = ad::rowwise_mul(x, mask);
    Var scores = ranker_.forward(masked, true);
    Var rank_loss = ad::listwise_softmax_ce(scores, labels_as_double(q.labels));
    if (lambda_rec_ == 0.0) return rank_loss;
    Var recon_loss = ad::mse_to(recon_.forward(masked), q.features);
    return ad::add(rank_loss, ad::scale(recon_loss, lambda_rec_));
  }

  std::vector<double> score(const Tensor& x, double tau, Rng* sample_rng) override {
    Var xc = ad::constant(x);
    Var masked;
    if (sample_rng) {
      masked = ad::rowwise_mul(xc, soft_mask(tau, *sample_rng));
    } else {
      masked = ad::rowwise_mul(xc, ad::constant(Tensor::vector(hard_mask())));
    }
    return tensor_to_scores(ranker_.forward(masked, false));
  }

  std::vector<double> feature_scores(const Dataset&) override { return hard_mask(); }

  std::size_t selected_count(const Dataset&) override {
    const auto m = hard_mask();
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1.0));
  }

 private:
  // Deterministic selection: argmax group per feature, top-k_g groups.
  std::vector<double> hard_mask() const {
    std::vector<std::uint8_t> group_on(groups_, 0);
    for (std::size_t g : topk_indices(group_logits_.value().data(), groups_,
                                      group_budget_))
      group_on[g] = 1;
    std::vector<double> mask(d_, 0.0);
    for (std::size_t i = 0; i < d_; ++i) {
      const double* row = assign_.value().data() + i * groups_;
      const std::size_t g =
          static_cast<std::size_t>(std::max_element(row, row + groups_) - row);
      if (group_on[g]) mask[i] = 1.0;
    }
    return mask;
  }

  std::size_t d_, groups_, group_budget_;
  double lambda_rec_;
  Var assign_;
  Var group_logits_;
  Linear recon_;
  FeedForwardNet ranker_;
  ParamRegistry reg_;
};

}  // namespace

std::vector<double> labels_as_double(const std::vector<int>& labels) {
  return std::vector<double>(labels.begin(), labels.end());
}

std::size_t measure_selected_count(const std::vector<double>& values,
                                   double rel_threshold) {
  double mx = 0.0;
  for (double v : values) mx = std::max(mx, v);
  if (mx <= 0.0) return 0;
  const double threshold = rel_threshold * mx;
  std::size_t n = 0;
  for (double v : values)
    if (v > threshold) ++n;
  return n;
}

EvalReport evaluate(SelectionMethod& m, const Dataset& data,
                    const std::vector<std::uint8_t>* budget_mask,
                    const std::vector<int>& cutoffs, double tau, Rng* sample_rng) {
  if (budget_mask && budget_mask->size() != data.num_features)
    throw std::invalid_argument("evaluate: budget mask length mismatch");
  EvalReport report;
  for (const auto& g : data.groups) {
    Tensor x = g.features;
    if (budget_mask)
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < data.num_features; ++j)
          if (!(*budget_mask)[j]) x.at(i, j) = 0.0;
    const auto scores = m.score(x, tau, sample_rng);
    if (!has_relevant(g.labels)) {
      ++report.queries_skipped;
      continue;
    }
    ++report.queries_evaluated;
    for (int k : cutoffs)
      report.per_query[k].push_back(ndcg_at_k(scores, g.labels, k));
  }
  for (int k : cutoffs) {
    const auto& v = report.per_query[k];
    report.ndcg_mean[k] =
        v.empty() ? 1.0
                  : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  return report;
}

TrainResult train_joint(SelectionMethod& m, const Dataset& train,
                        const Dataset& valid, const TrainOptions& opt, Rng& rng) {
  if (train.groups.empty()) throw std::invalid_argument("train: empty dataset");
  Adam adam(m.params().vars(), AdamOptions{.lr = opt.lr});
  TrainResult result;
  std::vector<Tensor> best_snapshot;
  int since_best = 0;

  std::vector<std::size_t> order(train.groups.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    double tau = opt.tau_end;
    if (opt.fixed_tau) {
      tau = *opt.fixed_tau;
    } else if (opt.epochs > 1) {
      const double t = static_cast<double>(epoch) / static_cast<double>(opt.epochs - 1);
      tau = opt.tau_start * std::pow(opt.tau_end / opt.tau_start, t);
    }

    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t qi : order) {
      ad::Var loss = m.training_loss(train.groups[qi], tau, rng);
      const double lv = loss.scalar();
      if (!std::isfinite(lv))
        throw std::runtime_error(std::string("training diverged: non-finite loss for method ") +
                                 m.name() + " at epoch " + std::to_string(epoch));
      ad::backward(loss);
      adam.step();
      adam.zero_grad();
      m.post_step(opt.lr);
      if (opt.post_step_hook) opt.post_step_hook(m);
      loss_sum += lv;
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    if (epoch == 0) result.first_epoch_loss = epoch_loss;
    result.last_epoch_loss = epoch_loss;
    result.epochs_run = epoch + 1;

    const double valid_ndcg = evaluate(m, valid).ndcg_mean.at(10);
    if (result.best_epoch < 0 || valid_ndcg > result.best_valid_ndcg10) {
      result.best_valid_ndcg10 = valid_ndcg;
      result.best_epoch = epoch;
      best_snapshot = m.params().snapshot();
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
  }
  if (!best_snapshot.empty()) m.params().restore(best_snapshot);
  return result;
}

TrainResult SelectionMethod::train(const Dataset& train_set, const Dataset& valid,
                                   const TrainOptions& opt, Rng& rng) {
  return train_joint(*this, train_set, valid, opt, rng);
}

// Defined in methods_regularized.cpp.
std::unique_ptr<SelectionMethod> make_invase(std::size_t d, const MethodHyper& h, Rng& rng);
std::unique_ptr<SelectionMethod> make_lassonet(std::size_t d, const MethodHyper& h, Rng& rng);
std::unique_ptr<SelectionMethod> make_tabnet(std::size_t d, const MethodHyper& h, Rng& rng);

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"dnn",    "l2x",      "gl2x",
                                              "cae",    "ifg",      "invase",
                                              "lassonet", "tabnet"};
  return names;
}

std::unique_ptr<SelectionMethod> make_method(const std::string& name, std::size_t d,
                                             const MethodHyper& hyper, Rng& rng) {
  if (name == "dnn") return std::make_unique<DnnMethod>(d, hyper, rng);
  if (name == "l2x") return std::make_unique<L2xMethod>(d, hyper, rng);
  if (name == "gl2x") return std::make_unique<Gl2xMethod>(d, hyper, rng);
  if (name == "cae") return std::make_unique<CaeMethod>(d, hyper, rng);
  if (name == "ifg") return std::make_unique<IfgMethod>(d, hyper, rng);
  if (name == "invase") return make_invase(d, hyper, rng);
  if (name == "lassonet") return make_lassonet(d, hyper, rng);
  if (name == "tabnet") return make_tabnet(d, hyper, rng);
  throw std::invalid_argument("unknown method: " + name);
}

}  // namespace ltrsel
