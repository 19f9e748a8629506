#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace tcpssm {

// sigmoid without overflow for large |x|
inline double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x), exact in both tails
inline double softplus(double x) {
  return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

// inverse of stable_sigmoid on (0,1)
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// derivative helpers written in terms of the forward value
inline double sigmoid_deriv_from_value(double s) { return s * (1.0 - s); }
inline double tanh_deriv_from_value(double t) { return 1.0 - t * t; }

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

// FNV-1a 64-bit; used for golden-output fingerprints
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace tcpssm
