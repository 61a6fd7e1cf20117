#pragma once

#include <cstdint>
#include <vector>

#include "ltrsel/autodiff.hpp"
#include "ltrsel/tensor.hpp"

namespace ltrsel {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamParamState {
  Tensor m, v;
};

// One Adam update with bias correction; t is the 1-based step count.
void adam_step(Tensor& param, const Tensor& grad, AdamParamState& state,
               std::int64_t t, const AdamOptions& opt);

class Adam {
 public:
  explicit Adam(std::vector<ad::Var> params, AdamOptions opt = {});

  void step();
  void zero_grad();

  std::int64_t step_count() const { return t_; }
  double& lr() { return opt_.lr; }
  const AdamOptions& options() const { return opt_; }

 private:
  std::vector<ad::Var> params_;
  std::vector<AdamParamState> states_;
  std::int64_t t_ = 0;
  AdamOptions opt_;
};

}  // namespace ltrsel
