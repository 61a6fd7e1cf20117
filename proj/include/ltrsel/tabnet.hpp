#pragma once

#include <vector>

#include "ltrsel/nn.hpp"
#include "ltrsel/rng.hpp"

namespace ltrsel {

// Step-wise attentive architecture: at each step an attentive transformer
// (linear + batch norm, scaled by the running prior) produces a sparsemax
// mask over features; the masked input runs through shared + step-specific
// GLU feature-transformer blocks; relu'd decision slices are summed into the
// final linear score head. Priors decay by (gamma - mask) after every step.
struct TabNetConfig {
  std::size_t steps = 4;
  double gamma = 1.3;
  std::size_t width = 32;  // decision width n_d; attention width n_a matches
};

class TabNetModel {
 public:
  TabNetModel(std::size_t d, const TabNetConfig& cfg, Rng& rng);

  struct Forward {
    ad::Var scores;    // [n x 1]
    ad::Var sparsity;  // scalar: (1/S) sum_s mean row entropy of a^(s)
    std::vector<Tensor> masks;      // per step, [n x d]
    std::vector<Tensor> decisions;  // per step, [n x n_d]
  };

  Forward forward(const ad::Var& x, bool training);

  void register_params(ParamRegistry& reg, const std::string& prefix);

  std::size_t num_features() const { return d_; }
  std::size_t steps() const { return cfg_.steps; }
  double gamma() const { return cfg_.gamma; }

 private:
  struct GluBlock {
    Linear fc;
    BatchNorm bn;
    GluBlock(std::size_t in, std::size_t out, Rng& rng)
        : fc(in, 2 * out, rng), bn(2 * out) {}
    ad::Var forward(const ad::Var& h, bool training) {
      return ad::glu_cols(bn.forward(fc.forward(h), training));
    }
  };

  // shared blocks + one step-specific pair; instance 0 builds the initial
  // attention representation from the unmasked input.
  ad::Var feature_transform(const ad::Var& h, std::size_t instance, bool training);

  std::size_t d_;
  TabNetConfig cfg_;
  std::size_t half_;  // n_d == n_a

  BatchNorm input_bn_;
  GluBlock shared1_, shared2_;
  std::vector<GluBlock> step1_, step2_;  // cfg_.steps + 1 instances
  std::vector<Linear> att_fc_;
  std::vector<BatchNorm> att_bn_;
  Linear head_;
};

}  // namespace ltrsel
