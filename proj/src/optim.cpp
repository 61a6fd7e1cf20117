#include "ltrsel/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ltrsel {

void adam_step(Tensor& param, const Tensor& grad, AdamParamState& state,
               std::int64_t t, const AdamOptions& opt) {
  if (!param.same_shape(grad))
    throw std::invalid_argument("adam_step: gradient shape " + grad.shape_str() +
                                " does not match parameter " + param.shape_str());
  if (state.m.values.empty()) {
    state.m = Tensor(param.shape);
    state.v = Tensor(param.shape);
  }
  if (!state.m.same_shape(param))
    throw std::invalid_argument("adam_step: moment shape does not match parameter");
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.numel(); ++i) {
    const double g = grad[i];
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    param[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

Adam::Adam(std::vector<ad::Var> params, AdamOptions opt)
    : params_(std::move(params)), states_(params_.size()), opt_(opt) {}

void Adam::step() {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i)
    adam_step(params_[i].value(), params_[i].grad(), states_[i], t_, opt_);
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace ltrsel
