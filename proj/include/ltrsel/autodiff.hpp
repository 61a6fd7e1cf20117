#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ltrsel/tensor.hpp"

// Reverse-mode tape over dense tensors. Graphs are built per optimization
// step and freed when the last Var handle goes out of scope.

namespace ltrsel::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  bool grad_alloc = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;

  Tensor& ensure_grad() {
    if (!grad_alloc) {
      grad = Tensor(value.shape);
      grad_alloc = true;
    }
    return grad;
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad_alloc; }
  bool requires_grad() const { return node_->requires_grad; }
  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }

  double scalar() const { return node_->value.values.at(0); }

  void zero_grad() {
    if (node_->grad_alloc)
      std::fill(node_->grad.values.begin(), node_->grad.values.end(), 0.0);
  }

 private:
  NodePtr node_;
};

Var constant(Tensor t);
Var param(Tensor t);  // leaf with requires_grad

// Elementwise; shapes must match.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var vmax(const Var& a, const Var& b);  // ties resolve to a

Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var reshape(const Var& a, std::vector<std::size_t> shape);

// Row broadcasts over an [n x d] matrix with a length-d vector.
Var add_rowvec(const Var& m, const Var& v);
Var rowwise_mul(const Var& m, const Var& v);

Var matmul(const Var& a, const Var& b);     // [m x k] * [k x n]
Var matmul_nt(const Var& a, const Var& b);  // [m x k] * [n x k]^T

Var tanh(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var glu_cols(const Var& a);  // [n x 2w] -> [n x w], first half gated by sigmoid of second
Var slice_cols(const Var& a, std::size_t j0, std::size_t j1);

// Row-wise activations; a rank-1 input is one row.
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var sparsemax_rows(const Var& a);

// Gumbel-softmax sample: softmax((log_probs + gumbel) / tau) per row.
Var concrete_rows(const Var& log_probs, const Tensor& gumbel, double tau);

// Batch normalization over rows (one column = one feature).
Var batchnorm_train(const Var& x, const Var& gamma, const Var& beta,
                    Tensor& running_mean, Tensor& running_var,
                    double momentum, double eps);
Var batchnorm_eval(const Var& x, const Var& gamma, const Var& beta,
                   const Tensor& running_mean, const Tensor& running_var,
                   double eps);

// Scalar reductions.
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var mse_to(const Var& a, const Tensor& target);

// -(1/N) sum_i y_i log softmax(s)_i over one query's scores.
Var listwise_softmax_ce(const Var& scores, const std::vector<double>& labels);

// Mean over rows of -sum_j p_ij log(max(p_ij, 1e-15)).
Var entropy_mean_rows(const Var& p);

// sum_ij m_ij log p_ij + (1 - m_ij) log(1 - p_ij), p clamped to [1e-6, 1-1e-6].
Var bernoulli_loglik_sum(const Var& p, const Tensor& m);

void backward(const Var& root);  // root must be scalar

// Forward-only helpers shared with test oracles.
void softmax_inplace(double* z, std::size_t n);
void sparsemax_inplace(double* z, std::size_t n);

}  // namespace ltrsel::ad
