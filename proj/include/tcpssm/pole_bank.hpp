#pragma once

// Grouped pole bank: unconstrained trainables are squashed into strictly
// stable poles. Each of G groups owns L real poles and K complex-conjugate
// pairs, a denominator of order r = L + 2K.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tcpssm/common.hpp"
#include "tcpssm/errors.hpp"

namespace tcpssm {

struct PoleBankConfig {
  std::size_t G = 1;       // channel groups
  std::size_t L = 1;       // real poles per group
  std::size_t K = 1;       // complex pairs per group
  double epsilon = 0.01;   // stability margin, radii stay below 1 - epsilon

  std::size_t r() const { return L + 2 * K; }

  void validate() const {
    if (G < 1) throw ConfigError("pole bank needs at least one group");
    if (L + 2 * K < 1) throw ConfigError("pole bank needs at least one pole (L + 2K >= 1)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
      throw ConfigError("stability margin must satisfy 0 < epsilon < 1");
    }
  }
};

// Unconstrained trainables, [G,K] and [G,L] row-major.
struct PoleBankParams {
  std::vector<double> rho_hat_c;  // [G,K] complex radius logits
  std::vector<double> theta_hat;  // [G,K] complex angle logits
  std::vector<double> rho_hat_r;  // [G,L] real magnitude logits
  std::vector<double> s_hat;      // [G,L] real sign pre-activations

  static PoleBankParams zeros(const PoleBankConfig& cfg) {
    PoleBankParams p;
    p.rho_hat_c.assign(cfg.G * cfg.K, 0.0);
    p.theta_hat.assign(cfg.G * cfg.K, 0.0);
    p.rho_hat_r.assign(cfg.G * cfg.L, 0.0);
    p.s_hat.assign(cfg.G * cfg.L, 0.0);
    return p;
  }

  void check_shapes(const PoleBankConfig& cfg) const {
    if (rho_hat_c.size() != cfg.G * cfg.K || theta_hat.size() != cfg.G * cfg.K ||
        rho_hat_r.size() != cfg.G * cfg.L || s_hat.size() != cfg.G * cfg.L) {
      throw ShapeMismatch("pole bank parameter arrays do not match G/L/K");
    }
  }
};

// Squashed values. Invariants: |a| <= 1-eps, 0 < rho_c < 1-eps, 0 < theta_c < pi,
// and a = s_bar * rho_bar_r exactly.
struct ConstrainedPoleBank {
  std::size_t G = 0, L = 0, K = 0;
  double epsilon = 0.0;
  std::vector<double> a;          // [G,L]
  std::vector<double> s_bar;      // [G,L]
  std::vector<double> rho_bar_r;  // [G,L]
  std::vector<double> rho_c;      // [G,K]
  std::vector<double> theta_c;    // [G,K]

  std::size_t r() const { return L + 2 * K; }
};

inline ConstrainedPoleBank constrain(const PoleBankParams& params, const PoleBankConfig& cfg) {
  cfg.validate();
  params.check_shapes(cfg);
  ConstrainedPoleBank bank;
  bank.G = cfg.G;
  bank.L = cfg.L;
  bank.K = cfg.K;
  bank.epsilon = cfg.epsilon;
  const double cap = 1.0 - cfg.epsilon;
  bank.rho_c.resize(cfg.G * cfg.K);
  bank.theta_c.resize(cfg.G * cfg.K);
  for (std::size_t i = 0; i < cfg.G * cfg.K; ++i) {
    bank.rho_c[i] = cap * stable_sigmoid(params.rho_hat_c[i]);
    bank.theta_c[i] = kPi * stable_sigmoid(params.theta_hat[i]);
  }
  bank.s_bar.resize(cfg.G * cfg.L);
  bank.rho_bar_r.resize(cfg.G * cfg.L);
  bank.a.resize(cfg.G * cfg.L);
  for (std::size_t i = 0; i < cfg.G * cfg.L; ++i) {
    bank.s_bar[i] = std::tanh(params.s_hat[i]);
    bank.rho_bar_r[i] = cap * stable_sigmoid(params.rho_hat_r[i]);
    bank.a[i] = bank.s_bar[i] * bank.rho_bar_r[i];
  }
  return bank;
}

// One monic factor of the denominator: (1 + c1 z^-1) or (1 + c1 z^-1 + c2 z^-2).
struct FactorCoeffs {
  int degree = 1;  // 1 or 2
  double c1 = 0.0;
  double c2 = 0.0;

  static FactorCoeffs real_pole(double a) { return {1, -a, 0.0}; }
  static FactorCoeffs complex_pair(double rho, double theta) {
    return {2, -2.0 * rho * std::cos(theta), rho * rho};
  }

  // modulus of the factor's roots; used to order products for conditioning
  double root_modulus() const { return degree == 1 ? std::fabs(c1) : std::sqrt(std::fabs(c2)); }
};

inline std::vector<FactorCoeffs> base_factors(const ConstrainedPoleBank& bank, std::size_t g) {
  if (g >= bank.G) throw IndexOutOfRange("group index " + std::to_string(g) + " out of range");
  std::vector<FactorCoeffs> factors;
  factors.reserve(bank.L + bank.K);
  for (std::size_t l = 0; l < bank.L; ++l) {
    factors.push_back(FactorCoeffs::real_pole(bank.a[g * bank.L + l]));
  }
  for (std::size_t k = 0; k < bank.K; ++k) {
    factors.push_back(
        FactorCoeffs::complex_pair(bank.rho_c[g * bank.K + k], bank.theta_c[g * bank.K + k]));
  }
  return factors;
}

// Deterministic step-0 spread: angles equispaced across (0, pi), radii
// log-spaced in [0.5, 0.99*(1-eps)], mild positive sign bias.
inline PoleBankParams default_pole_init(const PoleBankConfig& cfg) {
  cfg.validate();
  PoleBankParams p = PoleBankParams::zeros(cfg);
  const double cap = 1.0 - cfg.epsilon;
  const double lo = std::log(0.5);
  const double hi = std::log(0.99 * cap);
  auto log_spaced = [&](std::size_t i, std::size_t n) {
    const double u = (n == 1) ? 0.5 : double(i) / double(n - 1);
    return std::exp(lo + u * (hi - lo));
  };
  for (std::size_t g = 0; g < cfg.G; ++g) {
    for (std::size_t k = 0; k < cfg.K; ++k) {
      const double theta_target = kPi * double(k + 1) / double(cfg.K + 1);
      p.theta_hat[g * cfg.K + k] = logit(theta_target / kPi);
      p.rho_hat_c[g * cfg.K + k] = logit(log_spaced(k, cfg.K) / cap);
    }
    for (std::size_t l = 0; l < cfg.L; ++l) {
      p.rho_hat_r[g * cfg.L + l] = logit(log_spaced(l, cfg.L) / cap);
      p.s_hat[g * cfg.L + l] = 0.5;
    }
  }
  return p;
}

}  // namespace tcpssm
