#pragma once

// Token-conditioned pole modulation: each token produces a strictly positive
// radius scale and a bounded angle scale per group, which remap the base
// poles while keeping them inside the unit disk.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tcpssm/common.hpp"
#include "tcpssm/errors.hpp"
#include "tcpssm/pole_bank.hpp"
#include "tcpssm/tensor.hpp"

namespace tcpssm {

enum class ModulationMode { shared, group_specific };

inline const char* modulation_mode_name(ModulationMode m) {
  return m == ModulationMode::shared ? "shared" : "group_specific";
}

inline ModulationMode modulation_mode_from_name(const std::string& s) {
  if (s == "shared") return ModulationMode::shared;
  if (s == "group_specific") return ModulationMode::group_specific;
  throw ConfigError("unknown modulation mode: " + s);
}

struct ModulationHeads {
  ModulationMode mode = ModulationMode::shared;
  std::size_t E = 0;               // token channel count
  std::size_t C = 1;               // head rows: 1 (shared) or G (group_specific)
  std::vector<double> W_rho;       // [C,E]
  std::vector<double> b_rho;       // [C]
  std::vector<double> W_theta;     // [C,E]
  std::vector<double> b_theta;     // [C]
  double delta_min = 0.1;
  double delta_0 = 0.1 + 0.6931471805599453;  // delta_min + softplus(0) => unit scale at zero init
  double lambda_theta = 0.5;

  // Zero heads give s_rho = s_theta = 1 for every token, so the operator
  // starts as the base LTI system.
  static ModulationHeads zero_init(std::size_t E, ModulationMode mode, std::size_t G,
                                   double delta_min = 0.1, double lambda_theta = 0.5) {
    ModulationHeads h;
    h.mode = mode;
    h.E = E;
    h.C = (mode == ModulationMode::shared) ? 1 : G;
    h.W_rho.assign(h.C * E, 0.0);
    h.b_rho.assign(h.C, 0.0);
    h.W_theta.assign(h.C * E, 0.0);
    h.b_theta.assign(h.C, 0.0);
    h.delta_min = delta_min;
    h.delta_0 = delta_min + softplus(0.0);
    h.lambda_theta = lambda_theta;
    return h;
  }

  void validate(std::size_t G) const {
    const std::size_t expect_c = (mode == ModulationMode::shared) ? 1 : G;
    if (C != expect_c) throw ConfigError("modulation head row count does not match mode");
    if (W_rho.size() != C * E || W_theta.size() != C * E || b_rho.size() != C ||
        b_theta.size() != C) {
      throw ShapeMismatch("modulation head arrays do not match C/E");
    }
    if (!(delta_0 > 0.0)) throw ConfigError("delta_0 must be positive");
    if (delta_min < 0.0) throw ConfigError("delta_min must be nonnegative");
    if (!(lambda_theta >= 0.0 && lambda_theta < 1.0)) {
      throw ConfigError("lambda_theta must lie in [0, 1)");
    }
  }
};

// Per-token scales. s_rho > 0; s_theta in [1-lambda, 1+lambda].
struct TokenScales {
  std::size_t B = 0, M = 0, G = 0;
  std::vector<double> s_rho;    // [B,M,G]
  std::vector<double> s_theta;  // [B,M,G]
};

inline TokenScales compute_scales(const Tensor& x, const ModulationHeads& heads, std::size_t G) {
  require_token_sequence(x);
  heads.validate(G);
  const std::size_t B = x.dim(0), M = x.dim(1), E = x.dim(2);
  if (E != heads.E) {
    throw ShapeMismatch("token channel count " + std::to_string(E) +
                        " does not match modulation heads E=" + std::to_string(heads.E));
  }
  TokenScales s;
  s.B = B;
  s.M = M;
  s.G = G;
  s.s_rho.resize(B * M * G);
  s.s_theta.resize(B * M * G);
  std::vector<double> xt(E);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < M; ++t) {
      const std::size_t base = (b * M + t) * E;
      for (std::size_t e = 0; e < E; ++e) xt[e] = x.get(base + e);
      for (std::size_t c = 0; c < heads.C; ++c) {
        double z_rho = heads.b_rho[c];
        double z_theta = heads.b_theta[c];
        for (std::size_t e = 0; e < E; ++e) {
          z_rho += heads.W_rho[c * E + e] * xt[e];
          z_theta += heads.W_theta[c * E + e] * xt[e];
        }
        const double sr = (heads.delta_min + softplus(z_rho)) / heads.delta_0;
        const double st = 1.0 + heads.lambda_theta * std::tanh(z_theta);
        if (heads.mode == ModulationMode::shared) {
          for (std::size_t g = 0; g < G; ++g) {
            s.s_rho[(b * M + t) * G + g] = sr;
            s.s_theta[(b * M + t) * G + g] = st;
          }
        } else {
          s.s_rho[(b * M + t) * G + c] = sr;
          s.s_theta[(b * M + t) * G + c] = st;
        }
      }
    }
  }
  return s;
}

// Per-token poles. Sign of a_t matches the base sign for every token.
struct ModulatedPoles {
  std::size_t B = 0, M = 0, G = 0, L = 0, K = 0;
  double epsilon = 0.0;
  bool clamped = true;
  std::vector<double> a_t;      // [B,M,G,L]
  std::vector<double> rho_t;    // [B,M,G,K]
  std::vector<double> theta_t;  // [B,M,G,K]

  std::size_t r() const { return L + 2 * K; }
};

// Radius scaling runs through exp(s * log rho), which keeps magnitudes in
// (0,1) for any s > 0. With clamp_radius the modulated magnitude (real and
// complex alike) is additionally capped at 1-eps, so the margin certified
// for the base bank survives modulation even for s < 1.
inline ModulatedPoles modulate(const ConstrainedPoleBank& bank, const TokenScales& scales,
                               bool clamp_radius = true) {
  if (scales.G != bank.G) throw ShapeMismatch("scale group count does not match pole bank");
  const std::size_t B = scales.B, M = scales.M, G = bank.G, L = bank.L, K = bank.K;
  ModulatedPoles out;
  out.B = B;
  out.M = M;
  out.G = G;
  out.L = L;
  out.K = K;
  out.epsilon = bank.epsilon;
  out.clamped = clamp_radius;
  out.a_t.resize(B * M * G * L);
  out.rho_t.resize(B * M * G * K);
  out.theta_t.resize(B * M * G * K);
  const double cap = 1.0 - bank.epsilon;
  for (std::size_t bm = 0; bm < B * M; ++bm) {
    for (std::size_t g = 0; g < G; ++g) {
      const double sr = scales.s_rho[bm * G + g];
      const double st = scales.s_theta[bm * G + g];
      for (std::size_t l = 0; l < L; ++l) {
        double mag = std::exp(sr * std::log(bank.rho_bar_r[g * L + l]));
        if (clamp_radius && mag > cap) mag = cap;
        out.a_t[(bm * G + g) * L + l] = bank.s_bar[g * L + l] * mag;
      }
      for (std::size_t k = 0; k < K; ++k) {
        double rho = std::exp(sr * std::log(bank.rho_c[g * K + k]));
        if (clamp_radius && rho > cap) rho = cap;
        double theta = st * bank.theta_c[g * K + k];
        if (theta < 0.0) theta = 0.0;
        if (theta > kPi) theta = kPi;
        out.rho_t[(bm * G + g) * K + k] = rho;
        out.theta_t[(bm * G + g) * K + k] = theta;
      }
    }
  }
  return out;
}

// Factor list for one (flattened token, group) cell.
inline std::vector<FactorCoeffs> token_factors(const ModulatedPoles& p, std::size_t bm,
                                               std::size_t g) {
  std::vector<FactorCoeffs> factors;
  factors.reserve(p.L + p.K);
  for (std::size_t l = 0; l < p.L; ++l) {
    factors.push_back(FactorCoeffs::real_pole(p.a_t[(bm * p.G + g) * p.L + l]));
  }
  for (std::size_t k = 0; k < p.K; ++k) {
    factors.push_back(FactorCoeffs::complex_pair(p.rho_t[(bm * p.G + g) * p.K + k],
                                                 p.theta_t[(bm * p.G + g) * p.K + k]));
  }
  return factors;
}

}  // namespace tcpssm
