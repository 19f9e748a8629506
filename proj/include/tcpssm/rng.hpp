#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "tcpssm/common.hpp"
#include "tcpssm/tensor.hpp"

namespace tcpssm {

// Counter-based generator: draw i of stream(seed) is
//   mix(seed + (i+1) * 0x9E3779B97F4A7C15)
// with the SplitMix64 finalizer as mix(). The output depends only on
// (seed, i), so streams are identical on every platform. Constants are
// documented in the README.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), counter_(0) {}

  std::uint64_t seed() const { return seed_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(seed_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller, cosine branch only. Two counter steps per draw, so the
  // value at index i is a pure function of (seed, i).
  double normal() {
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Derives an independent stream; used to decorrelate per-trial draws.
  Rng fork(std::uint64_t salt) const { return Rng(mix(seed_ ^ mix(salt + 0x9E3779B97F4A7C15ull))); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

inline Tensor randn(Rng& rng, std::vector<std::size_t> shape, DType dtype = DType::f64) {
  Tensor t = Tensor::zeros(dtype, std::move(shape));
  const std::size_t n = t.numel();
  for (std::size_t i = 0; i < n; ++i) t.set(i, rng.normal());
  return t;
}

inline std::vector<double> randn_vector(Rng& rng, std::size_t n, double stddev = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = stddev * rng.normal();
  return v;
}

}  // namespace tcpssm
