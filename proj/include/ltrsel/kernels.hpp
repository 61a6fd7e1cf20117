#pragma once

#include <cstddef>

// Dense row-major kernels used by the autodiff layer. Every kernel has a
// serial reference implementation and an OpenMP one; the parallel versions
// partition output elements and keep the per-element accumulation order of
// the serial code, so both backends produce bit-identical results.

namespace ltrsel::kern {

enum class Backend { serial, parallel };

void set_backend(Backend b);
Backend backend();

// C[m x n] = A[m x k] * B[k x n]
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

// C[m x n] = A[m x k] * B[n x k]^T
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

// C[m x n] = A[k x m]^T * B[k x n]
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

// out[j] = sum_i a[i, j]
void col_sum(const double* a, double* out, std::size_t m, std::size_t n);

// Per-column mean and biased variance over m rows.
void col_mean_var(const double* a, double* mean, double* var,
                  std::size_t m, std::size_t n);

void tanh_fwd(const double* x, double* y, std::size_t n);
void sigmoid_fwd(const double* x, double* y, std::size_t n);
void relu_fwd(const double* x, double* y, std::size_t n);

void add(const double* a, const double* b, double* c, std::size_t n);
void sub(const double* a, const double* b, double* c, std::size_t n);
void mul(const double* a, const double* b, double* c, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

}  // namespace ltrsel::kern
