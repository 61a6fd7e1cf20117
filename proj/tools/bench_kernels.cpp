// Times the serial reference kernels against the OpenMP versions and prints
// a throughput table. Both backends must agree bit-for-bit; the unit tests
// assert that, here we only measure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "ltrsel/kernels.hpp"
#include "ltrsel/rng.hpp"

namespace {

using ltrsel::kern::Backend;

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e100;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
    best = std::min(best, dt.count());
  }
  return best;
}

void bench_gemm(std::size_t m, std::size_t k, std::size_t n) {
  ltrsel::Rng rng(42);
  std::vector<double> a(m * k), b(k * n), c(m * n);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();

  const double flops = 2.0 * static_cast<double>(m) * k * n;
  double secs[2];
  const Backend backends[2] = {Backend::serial, Backend::parallel};
  for (int i = 0; i < 2; ++i) {
    ltrsel::kern::set_backend(backends[i]);
    secs[i] = time_best_of(5, [&] {
      ltrsel::kern::gemm_nn(a.data(), b.data(), c.data(), m, k, n);
    });
  }
  std::printf("gemm_nn %4zux%4zux%4zu  serial %8.3f ms (%6.2f GFLOP/s)  omp %8.3f ms (%6.2f GFLOP/s)  speedup %.2fx\n",
              m, k, n, secs[0] * 1e3, flops / secs[0] * 1e-9, secs[1] * 1e3,
              flops / secs[1] * 1e-9, secs[0] / secs[1]);
}

void bench_tanh(std::size_t n) {
  ltrsel::Rng rng(7);
  std::vector<double> x(n), y(n);
  for (double& v : x) v = rng.normal();
  double secs[2];
  const Backend backends[2] = {Backend::serial, Backend::parallel};
  for (int i = 0; i < 2; ++i) {
    ltrsel::kern::set_backend(backends[i]);
    secs[i] = time_best_of(5, [&] { ltrsel::kern::tanh_fwd(x.data(), y.data(), n); });
  }
  std::printf("tanh    n=%8zu        serial %8.3f ms                     omp %8.3f ms                     speedup %.2fx\n",
              n, secs[0] * 1e3, secs[1] * 1e3, secs[0] / secs[1]);
}

}  // namespace

int main() {
  bench_gemm(256, 256, 256);
  bench_gemm(512, 512, 512);
  bench_gemm(1024, 256, 128);
  bench_tanh(1 << 20);
  bench_tanh(1 << 23);
  ltrsel::kern::set_backend(Backend::parallel);
  return 0;
}
