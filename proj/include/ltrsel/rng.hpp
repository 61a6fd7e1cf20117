#pragma once

#include <cstdint>
#include <cmath>
#include <cstddef>
#include <vector>

namespace ltrsel {

// Counter-based generator: draw i of stream `seed` is a pure function of
// (seed, i), so identical (seed, call sequence) replays bit-identically and
// streams can be forked without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double normal() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; distinct tags give distinct streams.
  Rng fork(std::uint64_t tag) {
    std::uint64_t z = seed_ ^ (0xD1B54A32D192ED03ull * (tag + 1));
    z = (z ^ (z >> 29)) * 0xFF51AFD7ED558CCDull;
    return Rng(z ^ (z >> 32));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Gumbel(0,1) draws g = -log(-log(u)) with u clamped to [eps, 1-eps].
inline double sample_gumbel_from_uniform(double u) {
  constexpr double eps = 1e-12;
  if (u < eps) u = eps;
  if (u > 1.0 - eps) u = 1.0 - eps;
  return -std::log(-std::log(u));
}

inline std::vector<double> sample_gumbel(Rng& rng, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = sample_gumbel_from_uniform(rng.uniform());
  return g;
}

}  // namespace ltrsel
