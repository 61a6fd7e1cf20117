#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ltrsel/autodiff.hpp"
#include "ltrsel/rng.hpp"
#include "ltrsel/tensor.hpp"

namespace ltrsel {

// Named view over a model's trainable parameters and persistent buffers
// (batch-norm running statistics). Backs checkpoints and best-epoch snapshots.
class ParamRegistry {
 public:
  void add(std::string name, ad::Var v) { trainable_.emplace_back(std::move(name), std::move(v)); }
  void add_buffer(std::string name, Tensor* t) { buffers_.emplace_back(std::move(name), t); }

  std::vector<ad::Var> vars() const;
  const std::vector<std::pair<std::string, ad::Var>>& trainable() const { return trainable_; }
  const std::vector<std::pair<std::string, Tensor*>>& buffers() const { return buffers_; }

  std::size_t total_values() const;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& snap);

  // Checkpoint: <dir>/manifest.json + <dir>/params.bin (little-endian f64
  // blobs concatenated in manifest order).
  void save(const std::string& dir) const;
  void load(const std::string& dir);

 private:
  std::vector<std::pair<std::string, ad::Var>> trainable_;
  std::vector<std::pair<std::string, Tensor*>> buffers_;
};

struct Linear {
  ad::Var w;  // [out x in]
  ad::Var b;  // [out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);

  ad::Var forward(const ad::Var& x) const;  // x [n x in] -> [n x out]
  void register_params(ParamRegistry& reg, const std::string& prefix);
};

struct BatchNorm {
  ad::Var gamma, beta;
  Tensor running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t width);

  ad::Var forward(const ad::Var& x, bool training);
  void register_params(ParamRegistry& reg, const std::string& prefix);
};

// Feed-forward scorer: per hidden layer Linear -> BatchNorm -> tanh, then a
// linear head. out_width 1 gives the ranking model f(x).
struct FeedForwardNet {
  std::vector<Linear> layers;
  std::vector<BatchNorm> norms;
  Linear head;
  std::size_t in_width = 0, out_width = 0;

  FeedForwardNet() = default;
  FeedForwardNet(std::size_t in, const std::vector<std::size_t>& hidden,
                 std::size_t out, Rng& rng);

  ad::Var forward(const ad::Var& x, bool training);
  void register_params(ParamRegistry& reg, const std::string& prefix);
};

}  // namespace ltrsel
