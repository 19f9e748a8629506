#include <gtest/gtest.h>

#include <cmath>

#include "tcpssm/pole_bank.hpp"
#include "tcpssm/rng.hpp"
#include "tcpssm/stability.hpp"

using namespace tcpssm;

namespace {

PoleBankParams randn_params(const PoleBankConfig& cfg, Rng& rng) {
  PoleBankParams p;
  p.rho_hat_c = randn_vector(rng, cfg.G * cfg.K);
  p.theta_hat = randn_vector(rng, cfg.G * cfg.K);
  p.rho_hat_r = randn_vector(rng, cfg.G * cfg.L);
  p.s_hat = randn_vector(rng, cfg.G * cfg.L);
  return p;
}

TEST(PoleBank, SigmoidMidpoints) {
  PoleBankConfig cfg{1, 1, 1, 0.01};
  PoleBankParams p = PoleBankParams::zeros(cfg);
  const ConstrainedPoleBank bank = constrain(p, cfg);
  EXPECT_NEAR(bank.rho_c[0], 0.495, 1e-15);      // (1-eps) * sigma(0)
  EXPECT_NEAR(bank.theta_c[0], kPi / 2, 1e-15);  // pi * sigma(0)
  EXPECT_EQ(bank.s_bar[0], 0.0);                 // tanh(0)
  EXPECT_EQ(bank.a[0], 0.0);                     // zero sign kills the pole
}

TEST(PoleBank, SignZeroRegardlessOfMagnitude) {
  PoleBankConfig cfg{1, 1, 0, 0.01};
  PoleBankParams p = PoleBankParams::zeros(cfg);
  p.rho_hat_r[0] = 25.0;  // magnitude near the cap
  const ConstrainedPoleBank bank = constrain(p, cfg);
  EXPECT_EQ(bank.a[0], 0.0);
}

TEST(PoleBank, ShapeMismatchRejected) {
  PoleBankConfig cfg{2, 1, 1, 0.01};
  PoleBankParams p = PoleBankParams::zeros(cfg);
  p.s_hat.pop_back();
  EXPECT_THROW(constrain(p, cfg), ShapeMismatch);
}

TEST(PoleBank, BaseFactorValues) {
  PoleBankConfig cfg{1, 1, 2, 0.01};
  ConstrainedPoleBank bank;
  bank.G = 1;
  bank.L = 1;
  bank.K = 2;
  bank.epsilon = 0.01;
  bank.a = {0.5};
  bank.s_bar = {1.0};
  bank.rho_bar_r = {0.5};
  bank.rho_c = {0.5, 0.9};
  bank.theta_c = {kPi / 2, kPi / 3};
  const auto factors = base_factors(bank, 0);
  ASSERT_EQ(factors.size(), 3u);
  EXPECT_EQ(factors[0].degree, 1);
  EXPECT_DOUBLE_EQ(factors[0].c1, -0.5);
  // rho=0.5, theta=pi/2: [1, 0, 0.25]
  EXPECT_NEAR(factors[1].c1, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(factors[1].c2, 0.25);
  // rho=0.9, theta=pi/3: [1, -0.9, 0.81]
  EXPECT_NEAR(factors[2].c1, -0.9, 1e-12);
  EXPECT_NEAR(factors[2].c2, 0.81, 1e-15);
  EXPECT_THROW(base_factors(bank, 1), IndexOutOfRange);
}

TEST(PoleBank, CertifySingleRealPole) {
  PoleBankConfig cfg{1, 1, 0, 0.01};
  ConstrainedPoleBank bank;
  bank.G = 1;
  bank.L = 1;
  bank.K = 0;
  bank.epsilon = 0.01;
  bank.a = {0.5};
  bank.s_bar = {1.0};
  bank.rho_bar_r = {0.5};
  const StabilityReport report = certify_schur(bank);
  ASSERT_EQ(report.groups.size(), 1u);
  EXPECT_NEAR(report.groups[0].max_modulus, 0.5, 1e-12);
  EXPECT_TRUE(report.all_certified);
}

TEST(PoleBank, CertifySingleComplexPair) {
  ConstrainedPoleBank bank;
  bank.G = 1;
  bank.L = 0;
  bank.K = 1;
  bank.epsilon = 0.05;
  bank.rho_c = {0.9};
  bank.theta_c = {kPi / 3};
  const StabilityReport report = certify_schur(bank);
  EXPECT_NEAR(report.groups[0].max_modulus, 0.9, 1e-9);
  EXPECT_TRUE(report.all_certified);
}

TEST(PoleBank, ConstrainedRangesHoldUnderFuzz) {
  Rng rng(123);
  for (int trial = 0; trial < 10000; ++trial) {
    PoleBankConfig cfg{1 + std::size_t(rng.next_u64() % 3), std::size_t(rng.next_u64() % 3),
                       std::size_t(rng.next_u64() % 3), 0.01};
    if (cfg.r() == 0) cfg.L = 1;
    PoleBankParams p = randn_params(cfg, rng);
    // widen the tails a bit
    for (auto& v : p.rho_hat_c) v *= 3.0;
    for (auto& v : p.s_hat) v *= 3.0;
    const ConstrainedPoleBank bank = constrain(p, cfg);
    const double cap = 1.0 - cfg.epsilon;
    for (std::size_t i = 0; i < cfg.G * cfg.L; ++i) {
      EXPECT_LE(std::fabs(bank.a[i]), cap);
      EXPECT_GT(bank.rho_bar_r[i], 0.0);
      EXPECT_LT(bank.rho_bar_r[i], cap);
      EXPECT_GT(bank.s_bar[i], -1.0);
      EXPECT_LT(bank.s_bar[i], 1.0);
      EXPECT_EQ(bank.a[i], bank.s_bar[i] * bank.rho_bar_r[i]);
    }
    for (std::size_t i = 0; i < cfg.G * cfg.K; ++i) {
      EXPECT_GT(bank.rho_c[i], 0.0);
      EXPECT_LT(bank.rho_c[i], cap);
      EXPECT_GT(bank.theta_c[i], 0.0);
      EXPECT_LT(bank.theta_c[i], kPi);
    }
  }
}

TEST(PoleBank, ConstrainMonotoneInRadiusLogit) {
  PoleBankConfig cfg{1, 0, 1, 0.01};
  PoleBankParams p = PoleBankParams::zeros(cfg);
  double prev = -1.0;
  for (double v = -4.0; v <= 4.0; v += 0.25) {
    p.rho_hat_c[0] = v;
    const double rho = constrain(p, cfg).rho_c[0];
    EXPECT_GT(rho, prev);
    prev = rho;
  }
}

TEST(PoleBank, SecondOrderFactorRootsMatchPolar) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const double rho = 0.05 + 0.9 * rng.uniform();
    const double theta = 0.05 + (kPi - 0.1) * rng.uniform();
    const FactorCoeffs f = FactorCoeffs::complex_pair(rho, theta);
    const auto roots = polynomial_roots({1.0, f.c1, f.c2});
    ASSERT_EQ(roots.size(), 2u);
    for (const auto& z : roots) {
      EXPECT_NEAR(std::abs(z), rho, 1e-9);
      EXPECT_NEAR(std::fabs(std::arg(z)), theta, 1e-9);
    }
  }
}

TEST(PoleBank, DefaultInitSpreadsTimescales) {
  PoleBankConfig cfg{2, 2, 3, 0.01};
  const PoleBankParams p = default_pole_init(cfg);
  const ConstrainedPoleBank bank = constrain(p, cfg);
  // angles span (0, pi): equispaced targets pi/4, pi/2, 3pi/4
  EXPECT_NEAR(bank.theta_c[0], kPi / 4, 1e-9);
  EXPECT_NEAR(bank.theta_c[1], kPi / 2, 1e-9);
  EXPECT_NEAR(bank.theta_c[2], 3 * kPi / 4, 1e-9);
  // radii hit the documented log-spaced band
  EXPECT_NEAR(bank.rho_c[0], 0.5, 1e-9);
  EXPECT_NEAR(bank.rho_c[2], 0.99 * 0.99, 1e-9);
  EXPECT_TRUE(certify_schur(bank).all_certified);
}

TEST(PoleBank, ConfigValidation) {
  EXPECT_THROW((PoleBankConfig{0, 1, 1, 0.01}).validate(), ConfigError);
  EXPECT_THROW((PoleBankConfig{1, 0, 0, 0.01}).validate(), ConfigError);
  EXPECT_THROW((PoleBankConfig{1, 1, 1, 0.0}).validate(), ConfigError);
  EXPECT_THROW((PoleBankConfig{1, 1, 1, 1.0}).validate(), ConfigError);
}

}  // namespace
