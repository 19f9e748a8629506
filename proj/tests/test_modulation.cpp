#include <gtest/gtest.h>

#include <cmath>

#include "tcpssm/denominator.hpp"
#include "tcpssm/modulation.hpp"
#include "tcpssm/rng.hpp"

using namespace tcpssm;

namespace {

Tensor tokens_from(Rng& rng, std::size_t B, std::size_t M, std::size_t E) {
  return randn(rng, {B, M, E});
}

TEST(Modulation, ZeroHeadsGiveUnitScales) {
  const std::size_t E = 3, G = 2;
  const ModulationHeads heads = ModulationHeads::zero_init(E, ModulationMode::shared, G);
  Rng rng(1);
  const Tensor x = tokens_from(rng, 2, 4, E);
  const TokenScales s = compute_scales(x, heads, G);
  for (double v : s.s_rho) EXPECT_DOUBLE_EQ(v, 1.0);
  for (double v : s.s_theta) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Modulation, LargePreActivationMatchesOracle) {
  // z = 20 through the radius head: (0.1 + softplus(20)) / (0.1 + ln 2),
  // reference value computed at 50-digit precision
  const std::size_t E = 1, G = 1;
  ModulationHeads heads = ModulationHeads::zero_init(E, ModulationMode::shared, G);
  heads.b_rho[0] = 20.0;
  const Tensor x = Tensor::zeros(DType::f64, {1, 1, 1});
  const TokenScales s = compute_scales(x, heads, G);
  EXPECT_NEAR(s.s_rho[0], 25.342080883236548, 1e-12);
}

TEST(Modulation, ScaleRangeInvariants) {
  Rng rng(2);
  const std::size_t E = 4, G = 3;
  ModulationHeads heads = ModulationHeads::zero_init(E, ModulationMode::group_specific, G);
  heads.W_rho = randn_vector(rng, G * E);
  heads.b_rho = randn_vector(rng, G);
  heads.W_theta = randn_vector(rng, G * E);
  heads.b_theta = randn_vector(rng, G);
  const Tensor x = tokens_from(rng, 2, 16, E);
  const TokenScales s = compute_scales(x, heads, G);
  for (double v : s.s_rho) EXPECT_GT(v, 0.0);
  for (double v : s.s_theta) {
    EXPECT_GE(v, 1.0 - heads.lambda_theta);
    EXPECT_LE(v, 1.0 + heads.lambda_theta);
  }
}

TEST(Modulation, IdentityScalesRecoverBasePoles) {
  PoleBankConfig cfg{3, 2, 2, 0.01};
  Rng rng(3);
  PoleBankParams params;
  params.rho_hat_c = randn_vector(rng, cfg.G * cfg.K);
  params.theta_hat = randn_vector(rng, cfg.G * cfg.K);
  params.rho_hat_r = randn_vector(rng, cfg.G * cfg.L);
  params.s_hat = randn_vector(rng, cfg.G * cfg.L);
  const ConstrainedPoleBank bank = constrain(params, cfg);

  const std::size_t E = 6;
  const ModulationHeads heads = ModulationHeads::zero_init(E, ModulationMode::shared, cfg.G);
  const Tensor x = tokens_from(rng, 1, 5, E);
  const ModulatedPoles poles = modulate(bank, compute_scales(x, heads, cfg.G));

  // coefficient-level identity against the base expansion
  const DenominatorCoeffs coeffs = expand_token_denominators(poles);
  for (std::size_t g = 0; g < cfg.G; ++g) {
    const std::vector<double> base_q = expand_base_denominator(bank, g);
    for (std::size_t bm = 0; bm < 5; ++bm) {
      const double* q = coeffs.at(bm, g);
      for (std::size_t i = 0; i < coeffs.r; ++i) {
        EXPECT_NEAR(q[i], base_q[i], 1e-12 * (1.0 + std::fabs(base_q[i])));
      }
    }
  }
}

TEST(Modulation, RadiusScalingPreservesSign) {
  ConstrainedPoleBank bank;
  bank.G = 1;
  bank.L = 1;
  bank.K = 0;
  bank.epsilon = 0.01;
  bank.s_bar = {-1.0};
  bank.rho_bar_r = {0.9};
  bank.a = {-0.9};
  TokenScales s;
  s.B = 1;
  s.M = 1;
  s.G = 1;
  s.s_rho = {2.0};
  s.s_theta = {1.0};
  const ModulatedPoles poles = modulate(bank, s);
  EXPECT_NEAR(poles.a_t[0], -0.81, 1e-14);  // exp(2 ln 0.9) with sign kept
}

TEST(Modulation, AngleClipsAtPi) {
  ConstrainedPoleBank bank;
  bank.G = 1;
  bank.L = 0;
  bank.K = 1;
  bank.epsilon = 0.01;
  bank.rho_c = {0.5};
  bank.theta_c = {3.0 * kPi / 4.0};
  TokenScales s;
  s.B = 1;
  s.M = 1;
  s.G = 1;
  s.s_rho = {1.0};
  s.s_theta = {1.5};
  const ModulatedPoles poles = modulate(bank, s);
  EXPECT_DOUBLE_EQ(poles.theta_t[0], kPi);
}

TEST(Modulation, MemoryMonotoneInRadiusScale) {
  // for fixed base rho in (0,1), the modulated radius strictly decreases in s_rho
  ConstrainedPoleBank bank;
  bank.G = 1;
  bank.L = 0;
  bank.K = 1;
  bank.epsilon = 0.01;
  bank.rho_c = {0.85};
  bank.theta_c = {1.0};
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const double s1 = 0.2 + 3.0 * rng.uniform();
    const double s2 = s1 + 0.01 + rng.uniform();
    TokenScales s;
    s.B = 1;
    s.M = 2;
    s.G = 1;
    s.s_rho = {s1, s2};
    s.s_theta = {1.0, 1.0};
    const ModulatedPoles poles = modulate(bank, s, /*clamp=*/false);
    EXPECT_GT(poles.rho_t[0], poles.rho_t[1]);
  }
}

TEST(Modulation, StabilityPreservedUnderFuzz) {
  Rng rng(12);
  const double eps = 0.01, cap = 1.0 - eps;
  for (int trial = 0; trial < 10000; ++trial) {
    PoleBankConfig cfg{1 + std::size_t(rng.next_u64() % 2), 1, 1, eps};
    PoleBankParams params;
    params.rho_hat_c = randn_vector(rng, cfg.G);
    params.theta_hat = randn_vector(rng, cfg.G);
    params.rho_hat_r = randn_vector(rng, cfg.G);
    params.s_hat = randn_vector(rng, cfg.G);
    const ConstrainedPoleBank bank = constrain(params, cfg);
    TokenScales s;
    s.B = 1;
    s.M = 1;
    s.G = cfg.G;
    s.s_rho.resize(cfg.G);
    s.s_theta.resize(cfg.G);
    for (auto& v : s.s_rho) v = std::exp(1.5 * rng.normal());  // spans (0, inf)
    for (auto& v : s.s_theta) v = 1.0 + 0.5 * std::tanh(rng.normal());
    const ModulatedPoles poles = modulate(bank, s);  // default clamp on
    for (double a : poles.a_t) EXPECT_LE(std::fabs(a), cap);
    for (double rho : poles.rho_t) {
      EXPECT_GT(rho, 0.0);
      EXPECT_LE(rho, cap);
    }
    for (double th : poles.theta_t) {
      EXPECT_GE(th, 0.0);
      EXPECT_LE(th, kPi);
    }
    // s_rho >= 1 keeps radii below the base cap even without the clamp
    const ModulatedPoles raw = modulate(bank, s, /*clamp=*/false);
    for (std::size_t g = 0; g < cfg.G; ++g) {
      if (s.s_rho[g] >= 1.0) {
        EXPECT_LE(std::fabs(raw.a_t[g]), cap);
        EXPECT_LE(raw.rho_t[g], cap);
      } else {
        EXPECT_LT(raw.rho_t[g], 1.0);
        EXPECT_LE(raw.rho_t[g], std::exp(s.s_rho[g] * std::log(cap)) + 1e-15);
      }
    }
  }
}

TEST(Modulation, SignNeverFlipsAcrossTokens) {
  Rng rng(13);
  PoleBankConfig cfg{2, 2, 0, 0.01};
  PoleBankParams params;
  params.rho_hat_c = {};
  params.theta_hat = {};
  params.rho_hat_r = randn_vector(rng, cfg.G * cfg.L);
  params.s_hat = randn_vector(rng, cfg.G * cfg.L);
  const ConstrainedPoleBank bank = constrain(params, cfg);
  const std::size_t E = 4;
  ModulationHeads heads = ModulationHeads::zero_init(E, ModulationMode::shared, cfg.G);
  heads.W_rho = randn_vector(rng, E);
  heads.b_rho = randn_vector(rng, 1);
  const Tensor x = tokens_from(rng, 1, 32, E);
  const ModulatedPoles poles = modulate(bank, compute_scales(x, heads, cfg.G));
  for (std::size_t g = 0; g < cfg.G; ++g) {
    for (std::size_t l = 0; l < cfg.L; ++l) {
      const double sign = bank.s_bar[g * cfg.L + l] > 0 ? 1.0 : -1.0;
      for (std::size_t t = 0; t < 32; ++t) {
        const double a = poles.a_t[(t * cfg.G + g) * cfg.L + l];
        EXPECT_GE(sign * a, 0.0);
      }
    }
  }
}

TEST(Modulation, HeadValidation) {
  ModulationHeads h = ModulationHeads::zero_init(4, ModulationMode::shared, 2);
  h.lambda_theta = 1.0;
  EXPECT_THROW(h.validate(2), ConfigError);
  h = ModulationHeads::zero_init(4, ModulationMode::group_specific, 2);
  EXPECT_NO_THROW(h.validate(2));
  EXPECT_THROW(h.validate(3), ConfigError);
}

}  // namespace
