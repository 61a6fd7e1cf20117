#include "ltrsel/tabnet.hpp"

#include <cmath>
#include <stdexcept>

namespace ltrsel {

TabNetModel::TabNetModel(std::size_t d, const TabNetConfig& cfg, Rng& rng)
    : d_(d), cfg_(cfg), half_(cfg.width),
      input_bn_(d),
      shared1_(d, 2 * cfg.width, rng),
      shared2_(2 * cfg.width, 2 * cfg.width, rng),
      head_(cfg.width, 1, rng) {
  if (cfg.gamma < 1.0)
    throw std::invalid_argument("tabnet: gamma must be >= 1 (priors would go negative)");
  if (cfg.steps < 1) throw std::invalid_argument("tabnet: need at least one step");
  const std::size_t w = 2 * cfg.width;  // n_d + n_a
  for (std::size_t s = 0; s <= cfg.steps; ++s) {
    step1_.emplace_back(w, w, rng);
    step2_.emplace_back(w, w, rng);
  }
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    att_fc_.emplace_back(cfg.width, d, rng);
    att_bn_.emplace_back(d);
  }
}

ad::Var TabNetModel::feature_transform(const ad::Var& h, std::size_t instance,
                                       bool training) {
  const double inv_sqrt2 = std::sqrt(0.5);
  ad::Var out = shared1_.forward(h, training);
  out = ad::scale(ad::add(out, shared2_.forward(out, training)), inv_sqrt2);
  out = ad::scale(ad::add(out, step1_[instance].forward(out, training)), inv_sqrt2);
  out = ad::scale(ad::add(out, step2_[instance].forward(out, training)), inv_sqrt2);
  return out;
}

TabNetModel::Forward TabNetModel::forward(const ad::Var& x, bool training) {
  const std::size_t n = x.value().rows();
  const std::size_t w = 2 * half_;

  Forward result;
  ad::Var bn_x = input_bn_.forward(x, training);
  ad::Var repr = feature_transform(bn_x, 0, training);
  ad::Var att = ad::slice_cols(repr, half_, w);

  ad::Var prior = ad::constant(Tensor::full({n, d_}, 1.0));
  ad::Var agg, sparsity;

  for (std::size_t s = 1; s <= cfg_.steps; ++s) {
    ad::Var att_logits = att_bn_[s - 1].forward(att_fc_[s - 1].forward(att), training);
    ad::Var mask = ad::sparsemax_rows(ad::mul(prior, att_logits));
    result.masks.push_back(mask.value());

    ad::Var ent = ad::entropy_mean_rows(mask);
    sparsity = sparsity.defined() ? ad::add(sparsity, ent) : ent;

    prior = ad::mul(prior, ad::sub(ad::constant(Tensor::full({n, d_}, cfg_.gamma)), mask));

    ad::Var h = feature_transform(ad::mul(bn_x, mask), s, training);
    ad::Var decision = ad::relu(ad::slice_cols(h, 0, half_));
    result.decisions.push_back(decision.value());
    agg = agg.defined() ? ad::add(agg, decision) : decision;
    att = ad::slice_cols(h, half_, w);
  }

  result.scores = head_.forward(agg);
  result.sparsity = ad::scale(sparsity, 1.0 / static_cast<double>(cfg_.steps));
  return result;
}

void TabNetModel::register_params(ParamRegistry& reg, const std::string& prefix) {
  input_bn_.register_params(reg, prefix + ".input_bn");
  shared1_.fc.register_params(reg, prefix + ".shared1.fc");
  shared1_.bn.register_params(reg, prefix + ".shared1.bn");
  shared2_.fc.register_params(reg, prefix + ".shared2.fc");
  shared2_.bn.register_params(reg, prefix + ".shared2.bn");
  for (std::size_t s = 0; s < step1_.size(); ++s) {
    const std::string p = prefix + ".step" + std::to_string(s);
    step1_[s].fc.register_params(reg, p + ".block1.fc");
    step1_[s].bn.register_params(reg, p + ".block1.bn");
    step2_[s].fc.register_params(reg, p + ".block2.fc");
    step2_[s].bn.register_params(reg, p + ".block2.bn");
  }
  for (std::size_t s = 0; s < att_fc_.size(); ++s) {
    const std::string p = prefix + ".att" + std::to_string(s);
    att_fc_[s].register_params(reg, p + ".fc");
    att_bn_[s].register_params(reg, p + ".bn");
  }
  head_.register_params(reg, prefix + ".head");
}

}  // namespace ltrsel
