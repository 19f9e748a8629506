#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "tcpssm/numerator.hpp"
#include "tcpssm/rng.hpp"

using namespace tcpssm;

namespace {

NumeratorParams random_numerator(std::size_t E, std::size_t r, std::size_t r_f, Rng& rng) {
  NumeratorParams p;
  p.E = E;
  p.r = r;
  p.r_f = r_f;
  p.U = randn_vector(rng, E * r_f);
  p.V = randn_vector(rng, E * r_f);
  p.W_alpha = randn_vector(rng, r * E);
  p.W_gamma = randn_vector(rng, r_f * E);
  return p;
}

// brute force: eta_t = sum_i B_i x_{t-i} with dense B from the oracle
std::vector<double> dense_eta(const NumeratorParams& p, const std::vector<double>& alpha,
                              const std::vector<double>& gamma,
                              const std::vector<const double*>& past) {
  const auto B = dense_equivalent_B(alpha, gamma, p);
  std::vector<double> eta(p.E, 0.0);
  for (std::size_t i = 0; i < past.size(); ++i) {
    if (past[i] == nullptr) continue;
    for (std::size_t row = 0; row < p.E; ++row) {
      double acc = 0.0;
      for (std::size_t col = 0; col < p.E; ++col) acc += B[i][row * p.E + col] * past[i][col];
      eta[row] += acc;
    }
  }
  return eta;
}

TEST(Numerator, ProjectionIdentitySlice) {
  NumeratorParams p;
  p.E = 3;
  p.r = 1;
  p.r_f = 3;
  p.V.assign(9, 0.0);
  for (int i = 0; i < 3; ++i) p.V[i * 3 + i] = 1.0;  // identity
  p.U.assign(9, 0.0);
  p.W_alpha.assign(3, 0.0);
  p.W_gamma.assign(9, 0.0);
  Rng rng(1);
  const Tensor x = randn(rng, {1, 4, 3});
  const auto phi = project_tokens(x, p);
  for (std::size_t i = 0; i < phi.size(); ++i) EXPECT_DOUBLE_EQ(phi[i], x.get(i));
}

TEST(Numerator, ZeroProjectionAnnihilates) {
  NumeratorParams p;
  p.E = 2;
  p.r = 1;
  p.r_f = 2;
  p.V.assign(4, 0.0);
  p.U.assign(4, 1.0);
  p.W_alpha.assign(2, 1.0);
  p.W_gamma.assign(4, 0.0);
  Rng rng(2);
  const Tensor x = randn(rng, {1, 3, 2});
  for (double v : project_tokens(x, p)) EXPECT_EQ(v, 0.0);
}

TEST(Numerator, ProjectionDotProduct) {
  NumeratorParams p;
  p.E = 2;
  p.r = 1;
  p.r_f = 1;
  p.V = {1.0, 1.0};
  p.U = {1.0, 1.0};
  p.W_alpha.assign(2, 0.0);
  p.W_gamma.assign(2, 0.0);
  const Tensor x = Tensor::from_f64({1, 1, 2}, {3.0, 4.0});
  const auto phi = project_tokens(x, p);
  ASSERT_EQ(phi.size(), 1u);
  EXPECT_DOUBLE_EQ(phi[0], 7.0);
}

TEST(Numerator, GatesAtZeroAreHalf) {
  NumeratorParams p;
  p.E = 3;
  p.r = 2;
  p.r_f = 2;
  p.W_alpha.assign(6, 0.0);
  p.W_gamma.assign(6, 0.0);
  p.U.assign(6, 0.0);
  p.V.assign(6, 0.0);
  const double x[3] = {1.0, -2.0, 0.5};
  double alpha[2], gamma[2];
  mixing_and_gates(x, p, alpha, gamma);
  EXPECT_DOUBLE_EQ(alpha[0], 0.0);
  EXPECT_DOUBLE_EQ(alpha[1], 0.0);
  EXPECT_DOUBLE_EQ(gamma[0], 0.5);
  EXPECT_DOUBLE_EQ(gamma[1], 0.5);
}

TEST(Numerator, MixingMatvec) {
  NumeratorParams p;
  p.E = 1;
  p.r = 2;
  p.r_f = 1;
  p.W_alpha = {2.0, -1.0};
  p.W_gamma = {0.0};
  p.U = {1.0};
  p.V = {1.0};
  const double x[1] = {3.0};
  double alpha[2], gamma[1];
  mixing_and_gates(x, p, alpha, gamma);
  EXPECT_DOUBLE_EQ(alpha[0], 6.0);
  EXPECT_DOUBLE_EQ(alpha[1], -3.0);
}

TEST(Numerator, DrivingSignalHandTrace) {
  // E=1, r_f=1, r=1, U=V=[1], alpha=1, gamma=0.5, x_{t-1}=2 -> eta = 1
  CausalWindow<double> window(1, 1);
  const double phi_prev = 2.0;  // V^T x_{t-1}
  window.push(&phi_prev);
  const double alpha = 1.0, gamma = 0.5, U = 1.0;
  double eta = -1.0;
  driving_signal(window, &alpha, &gamma, &U, 1, &eta);
  EXPECT_DOUBLE_EQ(eta, 1.0);
}

TEST(Numerator, FirstTokenHasZeroDrive) {
  CausalWindow<double> window(2, 3);
  const double alpha[3] = {1.0, 2.0, 3.0};
  const double gamma[2] = {0.9, 0.8};
  const std::vector<double> U = {1.0, 1.0, 1.0, 1.0};
  double eta[2] = {-1.0, -1.0};
  driving_signal(window, alpha, gamma, U.data(), 2, eta);
  EXPECT_EQ(eta[0], 0.0);
  EXPECT_EQ(eta[1], 0.0);
}

TEST(Numerator, OneHotMixingSelectsLag) {
  Rng rng(5);
  const std::size_t E = 4, r = 3, r_f = 2;
  NumeratorParams p = random_numerator(E, r, r_f, rng);
  std::vector<std::vector<double>> tokens(3);
  for (auto& t : tokens) t = randn_vector(rng, E);

  CausalWindow<double> window(r_f, r);
  std::vector<double> phi(r_f);
  for (const auto& tok : tokens) {
    for (std::size_t j = 0; j < r_f; ++j) {
      double acc = 0.0;
      for (std::size_t e = 0; e < E; ++e) acc += p.V[e * r_f + j] * tok[e];
      phi[j] = acc;
    }
    window.push(phi.data());
  }
  const std::size_t pick = 2;  // lag 2 selects tokens[1]
  std::vector<double> alpha(r, 0.0);
  alpha[pick - 1] = 1.0;
  const std::vector<double> gamma = {0.3, 0.7};
  std::vector<double> eta(E);
  driving_signal(window, alpha.data(), gamma.data(), p.U.data(), E, eta.data());

  // expected: U Diag(gamma) V^T x_{t-2}
  for (std::size_t row = 0; row < E; ++row) {
    double expect = 0.0;
    for (std::size_t j = 0; j < r_f; ++j) {
      double vj = 0.0;
      for (std::size_t e = 0; e < E; ++e) vj += p.V[e * r_f + j] * tokens[1][e];
      expect += p.U[row * r_f + j] * gamma[j] * vj;
    }
    EXPECT_NEAR(eta[row], expect, 1e-12);
  }
}

TEST(Numerator, FactorizationIdentityFuzz) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t E = 1 + rng.next_u64() % 8;
    const std::size_t r = 1 + rng.next_u64() % 4;
    const std::size_t r_f = 1 + rng.next_u64() % E;
    NumeratorParams p = random_numerator(E, r, r_f, rng);

    std::vector<std::vector<double>> history(r);
    std::vector<const double*> past(r, nullptr);
    const std::size_t avail = rng.next_u64() % (r + 1);
    for (std::size_t i = 0; i < avail; ++i) {
      history[i] = randn_vector(rng, E);
      past[i] = history[i].data();
    }
    const std::vector<double> xt = randn_vector(rng, E);
    std::vector<double> alpha(r), gamma(r_f);
    mixing_and_gates(xt.data(), p, alpha.data(), gamma.data());

    CausalWindow<double> window(r_f, r);
    // push in chronological order: oldest first
    std::vector<double> phi(r_f);
    for (std::size_t i = avail; i-- > 0;) {
      for (std::size_t j = 0; j < r_f; ++j) {
        double acc = 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += p.V[e * r_f + j] * history[i][e];
        phi[j] = acc;
      }
      window.push(phi.data());
    }
    std::vector<double> eta(E);
    driving_signal(window, alpha.data(), gamma.data(), p.U.data(), E, eta.data());
    const std::vector<double> expect = dense_eta(p, alpha, gamma, past);
    for (std::size_t e = 0; e < E; ++e) {
      EXPECT_NEAR(eta[e], expect[e], 1e-12 * (1.0 + std::fabs(expect[e])));
    }
  }
}

TEST(Numerator, DenseMatricesHaveLowRank) {
  Rng rng(7);
  const std::size_t E = 6, r = 2, r_f = 1;
  NumeratorParams p = random_numerator(E, r, r_f, rng);
  const std::vector<double> alpha = {1.3, -0.4};
  const std::vector<double> gamma = {0.6};
  const auto B = dense_equivalent_B(alpha, gamma, p);
  for (const auto& Bi : B) {
    Eigen::MatrixXd m(E, E);
    for (std::size_t i = 0; i < E; ++i) {
      for (std::size_t j = 0; j < E; ++j) m(long(i), long(j)) = Bi[i * E + j];
    }
    const auto svals = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
    std::size_t rank = 0;
    for (long i = 0; i < svals.size(); ++i) {
      if (svals(i) > 1e-10 * svals(0)) ++rank;
    }
    EXPECT_LE(rank, r_f);
  }
}

TEST(Numerator, ZeroMixingZeroDense) {
  Rng rng(8);
  NumeratorParams p = random_numerator(3, 2, 2, rng);
  const std::vector<double> alpha = {0.0, 0.0};
  const std::vector<double> gamma = {0.4, 0.9};
  for (const auto& Bi : dense_equivalent_B(alpha, gamma, p)) {
    for (double v : Bi) EXPECT_EQ(v, 0.0);
  }
}

TEST(Numerator, LowRankWarning) {
  Rng rng(9);
  NumeratorParams p = random_numerator(2, 1, 2, rng);
  const auto warnings = p.validate();
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("low-rank"), std::string::npos);
  NumeratorParams ok = random_numerator(4, 1, 2, rng);
  EXPECT_TRUE(ok.validate().empty());
}

}  // namespace
