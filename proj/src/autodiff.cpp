#include "ltrsel/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ltrsel/kernels.hpp"

namespace ltrsel::ad {

namespace {

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.value().shape_str() + " vs " +
                                b.value().shape_str());
}

void check_rowvec(const Var& m, const Var& v, const char* op) {
  if (v.value().shape.size() != 1 || v.value().cols() != m.value().cols())
    throw std::invalid_argument(std::string(op) + ": vector length " +
                                v.value().shape_str() + " does not match " +
                                m.value().shape_str());
}

}  // namespace

Var constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  return Var(n);
}

Var param(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = true;
  n->ensure_grad();
  return Var(n);
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.value().shape);
  kern::add(a.value().data(), b.value().data(), out.data(), out.numel());
  return Var(make_node(std::move(out), {a.ptr(), b.ptr()}, [](Node& self) {
    const Tensor& g = self.grad;
    for (int p = 0; p < 2; ++p)
      if (self.parents[p]->requires_grad)
        kern::axpy(1.0, g.data(), self.parents[p]->ensure_grad().data(), g.numel());
  }));
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.value().shape);
  kern::sub(a.value().data(), b.value().data(), out.data(), out.numel());
  return Var(make_node(std::move(out), {a.ptr(), b.ptr()}, [](Node& self) {
    const Tensor& g = self.grad;
    if (self.parents[0]->requires_grad)
      kern::axpy(1.0, g.data(), self.parents[0]->ensure_grad().data(), g.numel());
    if (self.parents[1]->requires_grad)
      kern::axpy(-1.0, g.data(), self.parents[1]->ensure_grad().data(), g.numel());
  }));
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a.value().shape);
  kern::mul(a.value().data(), b.value().data(), out.data(), out.numel());
  return Var(make_node(std::move(out), {a.ptr(), b.ptr()}, [](Node& self) {
    const Tensor& g = self.grad;
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      Tensor& ga = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
    }
    if (self.parents[1]->requires_grad) {
      Tensor& gb = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
    }
  }));
}

Var vmax(const Var& a, const Var& b) {
  check_same_shape(a, b, "vmax");
  Tensor out(a.value().shape);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.numel(); ++i)
    out[i] = av[i] >= bv[i] ? av[i] : bv[i];
  return Var(make_node(std::move(out), {a.ptr(), b.ptr()}, [](Node& self) {
    const Tensor& g = self.grad;
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      Tensor& ga = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.numel(); ++i)
        if (av[i] >= bv[i]) ga[i] += g[i];
    }
    if (self.parents[1]->requires_grad) {
      Tensor& gb = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.numel(); ++i)
        if (av[i] < bv[i]) gb[i] += g[i];
    }
  }));
}

Var scale(const Var& a, double s) {
  Tensor out(a.value().shape);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * s;
  return Var(make_node(std::move(out), {a.ptr()}, [s](Node& self) {
    if (self.parents[0]->requires_grad)
      kern::axpy(s, self.grad.data(), self.parents[0]->ensure_grad().data(),
                 self.grad.numel());
  }));
}

Var add_scalar(const Var& a, double s) {
  Tensor out(a.value().shape);
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + s;
  return Var(make_node(std::move(out), {a.ptr()}, [](Node& self) {
    if (self.parents[0]->requires_grad)
      kern::axpy(1.0, self.grad.data(), self.parents[0]->ensure_grad().data(),
                 self.grad.numel());
  }));
}

Var reshape(const Var& a, std::vector<std::size_t> shape) {
  if (Tensor::numel_of(shape) != a.value().numel())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out(std::move(shape), a.value().values);
  return Var(make_node(std::move(out), {a.ptr()}, [](Node& self) {
    if (self.parents[0]->requires_grad)
      kern::axpy(1.0, self.grad.data(), self.parents[0]->ensure_grad().data(),
                 self.grad.numel());
  }));
}

Var add_rowvec(const Var& m, const Var& v) {
  check_rowvec(m, v, "add_rowvec");
  const std::size_t rows = m.value().rows(), cols = m.value().cols();
  Tensor out(m.value().shape);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = m.value()[i * cols + j] + v.value()[j];
  return Var(make_node(std::move(out), {m.ptr(), v.ptr()}, [rows, cols](Node& self) {
    const Tensor& g = self.grad;
    if (self.parents[0]->requires_grad)
      kern::axpy(1.0, g.data(), self.parents[0]->ensure_grad().data(), g.numel());
    if (self.parents[1]->requires_grad) {
      Tensor& gv = self.parents[1]->ensure_grad();
      for (std::size_t j = 0; j < cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rows; ++i) acc += g[i * cols + j];
        gv[j] += acc;
      }
    }
  }));
}

Var rowwise_mul(const Var& m, const Var& v) {
  check_rowvec(m, v, "rowwise_mul");
  const std::size_t rows = m.value().rows(), cols = m.value().cols();
  Tensor out(m.value().shape);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = m.value()[i * cols + j] * v.value()[j];
  return Var(make_node(std::move(out), {m.ptr(), v.ptr()}, [rows, cols](Node& self) {
    const Tensor& g = self.grad;
    const Tensor& mv = self.parents[0]->value;
    const Tensor& vv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      Tensor& gm = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          gm[i * cols + j] += g[i * cols + j] * vv[j];
    }
    if (self.parents[1]->requires_grad) {
      Tensor& gv = self.parents[1]->ensure_grad();
      for (std::size_t j = 0; j < cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
          acc += g[i * cols + j] * mv[i * cols + j];
        gv[j] += acc;
      }
    }
  }));
}

Var matmul(const Var& a, const Var& b) {
  const std::size_t m = a.value().rows(), k = a.value().cols();
  if (b.value().rows() != k)
    throw std::invalid_argument("matmul: inner dimensions disagree " +
                                a.value().shape_str() + " * " + b.value().shape_str());
  const std::size_t n = b.value().cols();
  Tensor out({m, n});
  kern::gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  return Var(make_node(std::move(out), {a.ptr(), b.ptr()}, [m, k, n](Node& self) {
    const Tensor& g = self.grad;
    if (self.parents[0]->requires_grad) {
      Tensor ga({m, k});
      kern::gemm_nt(g.data(), self.parents[1]->value.data(), ga.data(), m, n, k);
      kern::axpy(1.0, ga.data(), self.parents[0]->ensure_grad().data(), ga.numel());
    }
    if (self.parents[1]->requires_grad) {
      Tensor gb({k, n});
      kern::gemm_tn(self.parents[0]->value.data(), g.data(), gb.data(), k, m, n);
      kern::axpy(1.0, gb.data(), self.parents[1]->ensure_grad().data(), gb.numel());
    }
  }));
}

Var matmul_nt(const Var& a, const Var& b) {
  const std::size_t m = a.value().rows(), k = a.value().cols();
  if (b.value().cols() != k)
    throw std::invalid_argument("matmul_nt: inner dimensions disagree " +
                                a.value().shape_str() + " * " + b.value().shape_str() + "^T");
  const std::size_t n = b.value().rows();
  Tensor out({m, n});
  kern::gemm_nt(a.value().data(), b.value().data(), out.data(), m, k, n);
  return Var(make_node(std::move(out), {a.ptr(), b.ptr()}, [m, k, n](Node& self) {
    const Tensor& g = self.grad;
    if (self.parents[0]->requires_grad) {
      Tensor ga({m, k});
      kern::gemm_nn(g.data(), self.parents[1]->value.data(), ga.data(), m, n, k);
      kern::axpy(1.0, ga.data(), self.parents[0]->ensure_grad().data(), ga.numel());
    }
    if (self.parents[1]->requires_grad) {
      Tensor gb({n, k});
      kern::gemm_tn(g.data(), self.parents[0]->value.data(), gb.data(), n, m, k);
      kern::axpy(1.0, gb.data(), self.parents[1]->ensure_grad().data(), gb.numel());
    }
  }));
}

Var tanh(const Var& a) {
  Tensor out(a.value().shape);
  kern::tanh_fwd(a.value().data(), out.data(), out.numel());
  return Var(make_node(std::move(out), {a.ptr()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& y = self.value;
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  }));
}

Var relu(const Var& a) {
  Tensor out(a.value().shape);
  kern::relu_fwd(a.value().data(), out.data(), out.numel());
  return Var(make_node(std::move(out), {a.ptr()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& x = self.parents[0]->value;
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  }));
}

Var sigmoid(const Var& a) {
  Tensor out(a.value().shape);
  kern::sigmoid_fwd(a.value().data(), out.data(), out.numel());
  return Var(make_node(std::move(out), {a.ptr()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& y = self.value;
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  }));
}

Var glu_cols(const Var& a) {
  const std::size_t rows = a.value().rows(), cols = a.value().cols();
  if (cols % 2 != 0) throw std::invalid_argument("glu_cols: odd column count");
  const std::size_t w = cols / 2;
  Tensor out({rows, w});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double lin = a.value()[i * cols + j];
      const double gate = 1.0 / (1.0 + std::exp(-a.value()[i * cols + w + j]));
      out[i * w + j] = lin * gate;
    }
  return Var(make_node(std::move(out), {a.ptr()}, [rows, cols, w](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& av = self.parents[0]->value;
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double lin = av[i * cols + j];
        const double gate = 1.0 / (1.0 + std::exp(-av[i * cols + w + j]));
        const double go = g[i * w + j];
        ga[i * cols + j] += go * gate;
        ga[i * cols + w + j] += go * lin * gate * (1.0 - gate);
      }
  }));
}

Var slice_cols(const Var& a, std::size_t j0, std::size_t j1) {
  const std::size_t rows = a.value().rows(), cols = a.value().cols();
  if (j0 >= j1 || j1 > cols) throw std::invalid_argument("slice_cols: bad range");
  const std::size_t w = j1 - j0;
  Tensor out({rows, w});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.value()[i * cols + j0 + j];
  return Var(make_node(std::move(out), {a.ptr()}, [rows, cols, j0, w](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < w; ++j) ga[i * cols + j0 + j] += g[i * w + j];
  }));
}

void softmax_inplace(double* z, std::size_t n) {
  double mx = z[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, z[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = std::exp(z[i] - mx);
    sum += z[i];
  }
  for (std::size_t i = 0; i < n; ++i) z[i] /= sum;
}

// Euclidean projection onto the probability simplex (Martins & Astudillo).
void sparsemax_inplace(double* z, std::size_t n) {
  std::vector<double> sorted(z, z + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cumsum += sorted[k];
    const double kk = static_cast<double>(k + 1);
    if (1.0 + kk * sorted[k] > cumsum) tau = (cumsum - 1.0) / kk;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = std::max(z[i] - tau, 0.0);
}

Var softmax_rows(const Var& a) {
  if (a.value().numel() == 0)
    throw std::invalid_argument("softmax: empty input");
  const std::size_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out = a.value();
  for (std::size_t i = 0; i < rows; ++i) softmax_inplace(out.data() + i * cols, cols);
  return Var(make_node(std::move(out), {a.ptr()}, [rows, cols](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& p = self.value;
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* pi = p.data() + i * cols;
      const double* gi = g.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += gi[j] * pi[j];
      double* out = ga.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += pi[j] * (gi[j] - dot);
    }
  }));
}

Var log_softmax_rows(const Var& a) {
  if (a.value().numel() == 0)
    throw std::invalid_argument("log_softmax: empty input");
  const std::size_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out(a.value().shape);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* zi = a.value().data() + i * cols;
    double mx = zi[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, zi[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(zi[j] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = zi[j] - lse;
  }
  return Var(make_node(std::move(out), {a.ptr()}, [rows, cols](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& y = self.value;
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* yi = y.data() + i * cols;
      const double* gi = g.data() + i * cols;
      double gsum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gsum += gi[j];
      double* out = ga.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += gi[j] - std::exp(yi[j]) * gsum;
    }
  }));
}

Var sparsemax_rows(const Var& a) {
  if (a.value().numel() == 0)
    throw std::invalid_argument("sparsemax: empty input");
  const std::size_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out = a.value();
  for (std::size_t i = 0; i < rows; ++i) sparsemax_inplace(out.data() + i * cols, cols);
  // Jacobian of the computed support: identity minus mean over support.
  return Var(make_node(std::move(out), {a.ptr()}, [rows, cols](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& p = self.value;
    const Tensor& g = self.grad;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* pi = p.data() + i * cols;
      const double* gi = g.data() + i * cols;
      double gsum = 0.0;
      std::size_t supp = 0;
      for (std::size_t j = 0; j < cols; ++j)
        if (pi[j] > 0.0) {
          gsum += gi[j];
          ++supp;
        }
      const double gmean = supp > 0 ? gsum / static_cast<double>(supp) : 0.0;
      double* out = ga.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j)
        if (pi[j] > 0.0) out[j] += gi[j] - gmean;
    }
  }));
}

Var concrete_rows(const Var& log_probs, const Tensor& gumbel, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("concrete: tau must be positive");
  if (!log_probs.value().same_shape(gumbel))
    throw std::invalid_argument("concrete: gumbel shape mismatch");
  Var shifted = add(log_probs, constant(gumbel));
  return softmax_rows(scale(shifted, 1.0 / tau));
}

Var batchnorm_train(const Var& x, const Var& gamma, const Var& beta,
                    Tensor& running_mean, Tensor& running_var,
                    double momentum, double eps) {
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  check_rowvec(x, gamma, "batchnorm");
  check_rowvec(x, beta, "batchnorm");
  Tensor mean({cols}), var({cols});
  kern::col_mean_var(x.value().data(), mean.data(), var.data(), rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    running_mean[j] = momentum * running_mean[j] + (1.0 - momentum) * mean[j];
    running_var[j] = momentum * running_var[j] + (1.0 - momentum) * var[j];
  }
  Tensor xhat({rows, cols});
  Tensor inv_std({cols});
  for (std::size_t j = 0; j < cols; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      xhat[i * cols + j] = (x.value()[i * cols + j] - mean[j]) * inv_std[j];
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = gamma.value()[j] * xhat[i * cols + j] + beta.value()[j];
  return Var(make_node(
      std::move(out), {x.ptr(), gamma.ptr(), beta.ptr()},
      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const Tensor& g = self.grad;
        const Tensor& gamma_v = self.parents[1]->value;
        const double inv_rows = 1.0 / static_cast<double>(rows);
        if (self.parents[1]->requires_grad || self.parents[2]->requires_grad) {
          Tensor* ggamma = self.parents[1]->requires_grad
                               ? &self.parents[1]->ensure_grad() : nullptr;
          Tensor* gbeta = self.parents[2]->requires_grad
                              ? &self.parents[2]->ensure_grad() : nullptr;
          for (std::size_t j = 0; j < cols; ++j) {
            double sg = 0.0, sgx = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
              sg += g[i * cols + j];
              sgx += g[i * cols + j] * xhat[i * cols + j];
            }
            if (ggamma) (*ggamma)[j] += sgx;
            if (gbeta) (*gbeta)[j] += sg;
          }
        }
        if (self.parents[0]->requires_grad) {
          Tensor& gx = self.parents[0]->ensure_grad();
          for (std::size_t j = 0; j < cols; ++j) {
            double sg = 0.0, sgx = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
              sg += g[i * cols + j];
              sgx += g[i * cols + j] * xhat[i * cols + j];
            }
            const double c = gamma_v[j] * inv_std[j];
            for (std::size_t i = 0; i < rows; ++i)
              gx[i * cols + j] += c * (g[i * cols + j] - sg * inv_rows -
                                       xhat[i * cols + j] * sgx * inv_rows);
          }
        }
      }));
}

Var batchnorm_eval(const Var& x, const Var& gamma, const Var& beta,
                   const Tensor& running_mean, const Tensor& running_var,
                   double eps) {
  const std::size_t rows = x.value().rows(), cols = x.value().cols();
  check_rowvec(x, gamma, "batchnorm");
  Tensor inv_std({cols});
  for (std::size_t j = 0; j < cols; ++j)
    inv_std[j] = 1.0 / std::sqrt(running_var[j] + eps);
  Tensor xhat({rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      xhat[i * cols + j] = (x.value()[i * cols + j] - running_mean[j]) * inv_std[j];
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out[i * cols + j] = gamma.value()[j] * xhat[i * cols + j] + beta.value()[j];
  return Var(make_node(
      std::move(out), {x.ptr(), gamma.ptr(), beta.ptr()},
      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const Tensor& g = self.grad;
        const Tensor& gamma_v = self.parents[1]->value;
        if (self.parents[0]->requires_grad) {
          Tensor& gx = self.parents[0]->ensure_grad();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
              gx[i * cols + j] += g[i * cols + j] * gamma_v[j] * inv_std[j];
        }
        if (self.parents[1]->requires_grad) {
          Tensor& gg = self.parents[1]->ensure_grad();
          for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i)
              acc += g[i * cols + j] * xhat[i * cols + j];
            gg[j] += acc;
          }
        }
        if (self.parents[2]->requires_grad) {
          Tensor& gb = self.parents[2]->ensure_grad();
          for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rows; ++i) acc += g[i * cols + j];
            gb[j] += acc;
          }
        }
      }));
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values) s += v;
  return Var(make_node(Tensor({1}, {s}), {a.ptr()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  }));
}

Var mean_all(const Var& a) {
  if (a.value().numel() == 0) throw std::invalid_argument("mean: empty input");
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().numel()));
}

Var mse_to(const Var& a, const Tensor& target) {
  if (!a.value().same_shape(target))
    throw std::invalid_argument("mse: shape mismatch");
  const std::size_t n = a.value().numel();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a.value()[i] - target[i];
    s += d * d;
  }
  return Var(make_node(Tensor({1}, {s / static_cast<double>(n)}), {a.ptr()},
                       [t = target](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& ga = self.parents[0]->ensure_grad();
    const Tensor& av = self.parents[0]->value;
    const double c = 2.0 * self.grad[0] / static_cast<double>(av.numel());
    for (std::size_t i = 0; i < av.numel(); ++i) ga[i] += c * (av[i] - t[i]);
  }));
}

Var listwise_softmax_ce(const Var& scores, const std::vector<double>& labels) {
  const std::size_t n = scores.value().numel();
  if (n == 0) throw std::invalid_argument("listwise loss: empty query");
  if (labels.size() != n)
    throw std::invalid_argument("listwise loss: labels length mismatch");
  std::vector<double> p(scores.value().values);
  softmax_inplace(p.data(), n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] != 0.0) loss -= labels[i] * std::log(p[i]);
  loss /= static_cast<double>(n);
  return Var(make_node(Tensor({1}, {loss}), {scores.ptr()},
                       [p = std::move(p), y = labels](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& gs = self.parents[0]->ensure_grad();
    const std::size_t n = p.size();
    double ysum = 0.0;
    for (double v : y) ysum += v;
    const double c = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) gs[i] += c * (p[i] * ysum - y[i]);
  }));
}

Var entropy_mean_rows(const Var& p) {
  const std::size_t rows = p.value().rows(), cols = p.value().cols();
  constexpr double floor = 1e-15;
  double h = 0.0;
  for (std::size_t i = 0; i < rows * cols; ++i)
    h -= p.value()[i] * std::log(std::max(p.value()[i], floor));
  h /= static_cast<double>(rows);
  return Var(make_node(Tensor({1}, {h}), {p.ptr()}, [rows](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& gp = self.parents[0]->ensure_grad();
    const Tensor& pv = self.parents[0]->value;
    const double c = self.grad[0] / static_cast<double>(rows);
    for (std::size_t i = 0; i < pv.numel(); ++i) {
      const double d = pv[i] > floor ? -(std::log(pv[i]) + 1.0) : -std::log(floor);
      gp[i] += c * d;
    }
  }));
}

Var bernoulli_loglik_sum(const Var& p, const Tensor& m) {
  if (!p.value().same_shape(m))
    throw std::invalid_argument("bernoulli_loglik: shape mismatch");
  constexpr double lo = 1e-6, hi = 1.0 - 1e-6;
  double ll = 0.0;
  for (std::size_t i = 0; i < p.value().numel(); ++i) {
    const double pc = std::clamp(p.value()[i], lo, hi);
    ll += m[i] * std::log(pc) + (1.0 - m[i]) * std::log(1.0 - pc);
  }
  return Var(make_node(Tensor({1}, {ll}), {p.ptr()}, [mask = m](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& gp = self.parents[0]->ensure_grad();
    const Tensor& pv = self.parents[0]->value;
    const double g = self.grad[0];
    for (std::size_t i = 0; i < pv.numel(); ++i) {
      if (pv[i] < lo || pv[i] > hi) continue;  // clamped region: flat
      gp[i] += g * (mask[i] / pv[i] - (1.0 - mask[i]) / (1.0 - pv[i]));
    }
  }));
}

void backward(const Var& root) {
  if (root.value().numel() != 1)
    throw std::invalid_argument("backward: root must be scalar");
  // Topological order by iterative post-order DFS.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* parent = node->parents[idx++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad_alloc) n->backprop(*n);
  }
}

}  // namespace ltrsel::ad
