#pragma once

// Expands factored denominators into monic coefficient form
// Q(z^-1) = 1 + sum_i q_i z^-i. Expansion always runs in double, whatever
// precision the scan kernel uses; monomial-basis products above order 16
// are rejected because their conditioning degrades.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "tcpssm/errors.hpp"
#include "tcpssm/modulation.hpp"
#include "tcpssm/pole_bank.hpp"

namespace tcpssm {

inline constexpr std::size_t kMaxDenominatorOrder = 16;

// Product of monic factors via sequential convolution. Factors are first
// sorted by ascending root modulus, which lowers rounding drift in the
// partial products. Returns the full coefficient array, leading 1 included.
inline std::vector<double> expand_factors(std::vector<FactorCoeffs> factors) {
  if (factors.empty()) throw EmptyFactorList("cannot expand an empty factor list");
  std::size_t degree = 0;
  for (const auto& f : factors) degree += std::size_t(f.degree);
  if (degree > kMaxDenominatorOrder) {
    throw ConfigError("denominator order " + std::to_string(degree) + " exceeds supported maximum " +
                      std::to_string(kMaxDenominatorOrder));
  }
  std::stable_sort(factors.begin(), factors.end(),
                   [](const FactorCoeffs& x, const FactorCoeffs& y) {
                     return x.root_modulus() < y.root_modulus();
                   });
  std::vector<double> acc{1.0};
  acc.reserve(degree + 1);
  std::vector<double> next;
  for (const auto& f : factors) {
    next.assign(acc.size() + std::size_t(f.degree), 0.0);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      next[i] += acc[i];
      next[i + 1] += acc[i] * f.c1;
      if (f.degree == 2) next[i + 2] += acc[i] * f.c2;
    }
    acc.swap(next);
  }
  return acc;
}

// Monic coefficients q_{t,g,i} per token, group, lag (leading 1 dropped).
struct DenominatorCoeffs {
  std::size_t B = 0, M = 0, G = 0, r = 0;
  std::vector<double> q;  // [B,M,G,r]

  const double* at(std::size_t bm, std::size_t g) const { return q.data() + (bm * G + g) * r; }
};

inline DenominatorCoeffs expand_token_denominators(const ModulatedPoles& poles) {
  DenominatorCoeffs out;
  out.B = poles.B;
  out.M = poles.M;
  out.G = poles.G;
  out.r = poles.r();
  out.q.resize(poles.B * poles.M * poles.G * out.r);
  for (std::size_t bm = 0; bm < poles.B * poles.M; ++bm) {
    for (std::size_t g = 0; g < poles.G; ++g) {
      const std::vector<double> full = expand_factors(token_factors(poles, bm, g));
      double* dst = out.q.data() + (bm * poles.G + g) * out.r;
      for (std::size_t i = 0; i < out.r; ++i) dst[i] = full[i + 1];
    }
  }
  return out;
}

// Base (token-independent) expansion for one group, leading 1 dropped.
inline std::vector<double> expand_base_denominator(const ConstrainedPoleBank& bank,
                                                   std::size_t g) {
  const std::vector<double> full = expand_factors(base_factors(bank, g));
  return std::vector<double>(full.begin() + 1, full.end());
}

}  // namespace tcpssm
