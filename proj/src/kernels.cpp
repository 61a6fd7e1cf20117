#include "ltrsel/kernels.hpp"

#include <atomic>
#include <cmath>

namespace ltrsel::kern {

namespace {

std::atomic<Backend> g_backend{Backend::parallel};

// Below this many output elements the OpenMP fork costs more than the loop.
constexpr std::size_t kGrain = 16 * 1024;

void gemm_nn_rows(const double* a, const double* b, double* c,
                  std::size_t k, std::size_t n,
                  std::size_t row_begin, std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = ai[l];
      const double* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
  }
}

void gemm_nt_rows(const double* a, const double* b, double* c,
                  std::size_t k, std::size_t n,
                  std::size_t row_begin, std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] = acc;
    }
  }
}

void gemm_tn_rows(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n,
                  std::size_t row_begin, std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      const double ali = a[l * m + i];
      const double* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ali * bl[j];
    }
  }
}

bool parallel_for_size(std::size_t work) {
  return g_backend.load(std::memory_order_relaxed) == Backend::parallel &&
         work >= kGrain;
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (parallel_for_size(m * k * n)) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(m); ++i)
      gemm_nn_rows(a, b, c, k, n, i, i + 1);
  } else {
    gemm_nn_rows(a, b, c, k, n, 0, m);
  }
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (parallel_for_size(m * k * n)) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(m); ++i)
      gemm_nt_rows(a, b, c, k, n, i, i + 1);
  } else {
    gemm_nt_rows(a, b, c, k, n, 0, m);
  }
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (parallel_for_size(m * k * n)) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(m); ++i)
      gemm_tn_rows(a, b, c, m, k, n, i, i + 1);
  } else {
    gemm_tn_rows(a, b, c, m, k, n, 0, m);
  }
}

void col_sum(const double* a, double* out, std::size_t m, std::size_t n) {
  if (parallel_for_size(m * n)) {
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(n); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j];
      out[j] = acc;
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j];
      out[j] = acc;
    }
  }
}

void col_mean_var(const double* a, double* mean, double* var,
                  std::size_t m, std::size_t n) {
  const double inv_m = 1.0 / static_cast<double>(m);
  if (parallel_for_size(m * n)) {
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(n); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j];
      const double mu = acc * inv_m;
      double v = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double dlt = a[i * n + j] - mu;
        v += dlt * dlt;
      }
      mean[j] = mu;
      var[j] = v * inv_m;
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j];
      const double mu = acc * inv_m;
      double v = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double dlt = a[i * n + j] - mu;
        v += dlt * dlt;
      }
      mean[j] = mu;
      var[j] = v * inv_m;
    }
  }
}

#define LTRSEL_ELEMENTWISE(body)                       \
  if (parallel_for_size(n)) {                          \
    _Pragma("omp parallel for schedule(static)")       \
    for (long i = 0; i < static_cast<long>(n); ++i) {  \
      body;                                            \
    }                                                  \
  } else {                                             \
    for (std::size_t i = 0; i < n; ++i) {              \
      body;                                            \
    }                                                  \
  }

void tanh_fwd(const double* x, double* y, std::size_t n) {
  LTRSEL_ELEMENTWISE(y[i] = std::tanh(x[i]))
}

void sigmoid_fwd(const double* x, double* y, std::size_t n) {
  LTRSEL_ELEMENTWISE(y[i] = 1.0 / (1.0 + std::exp(-x[i])))
}

void relu_fwd(const double* x, double* y, std::size_t n) {
  LTRSEL_ELEMENTWISE(y[i] = x[i] > 0.0 ? x[i] : 0.0)
}

void add(const double* a, const double* b, double* c, std::size_t n) {
  LTRSEL_ELEMENTWISE(c[i] = a[i] + b[i])
}

void sub(const double* a, const double* b, double* c, std::size_t n) {
  LTRSEL_ELEMENTWISE(c[i] = a[i] - b[i])
}

void mul(const double* a, const double* b, double* c, std::size_t n) {
  LTRSEL_ELEMENTWISE(c[i] = a[i] * b[i])
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  LTRSEL_ELEMENTWISE(y[i] += alpha * x[i])
}

#undef LTRSEL_ELEMENTWISE

}  // namespace ltrsel::kern
