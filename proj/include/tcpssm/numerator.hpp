#pragma once

// Low-rank strictly causal numerator. Tokens are projected to a compact
// latent (phi = V^T x), the last r latents form a zero-padded causal
// window, and per-token mixing/gating produce the driving signal
// eta = U (gamma ⊙ Phi alpha). The dense-matrix form B_i = alpha_i U
// Diag(gamma) V^T exists here only as a brute-force oracle for tests.

#include <cstddef>
#include <string>
#include <vector>

#include "tcpssm/common.hpp"
#include "tcpssm/errors.hpp"
#include "tcpssm/rng.hpp"
#include "tcpssm/tensor.hpp"

namespace tcpssm {

struct NumeratorParams {
  std::size_t E = 0;
  std::size_t r = 0;    // lag count, equals the denominator order
  std::size_t r_f = 0;  // latent width
  std::vector<double> U;        // [E, r_f]
  std::vector<double> V;        // [E, r_f]
  std::vector<double> W_alpha;  // [r, E]
  std::vector<double> W_gamma;  // [r_f, E]

  // U, V get scaled normal entries (std 1/sqrt(E)); the mixing and gate
  // weights start at zero so the numerator is silent at step 0.
  static NumeratorParams init(std::size_t E, std::size_t r, std::size_t r_f, Rng& rng) {
    NumeratorParams p;
    p.E = E;
    p.r = r;
    p.r_f = r_f;
    const double std = 1.0 / std::sqrt(double(E));
    p.U = randn_vector(rng, E * r_f, std);
    p.V = randn_vector(rng, E * r_f, std);
    p.W_alpha.assign(r * E, 0.0);
    p.W_gamma.assign(r_f * E, 0.0);
    return p;
  }

  std::vector<std::string> validate() const {
    if (r_f < 1) throw ConfigError("latent width r_f must be at least 1");
    if (U.size() != E * r_f || V.size() != E * r_f || W_alpha.size() != r * E ||
        W_gamma.size() != r_f * E) {
      throw ShapeMismatch("numerator parameter arrays do not match E/r/r_f");
    }
    std::vector<std::string> warnings;
    if (r_f >= E) {
      warnings.push_back("r_f >= E (" + std::to_string(r_f) + " >= " + std::to_string(E) +
                         "): the numerator is no longer low-rank");
    }
    return warnings;
  }
};

// phi_t = V^T x_t for every token; output [B, M, r_f].
inline std::vector<double> project_tokens(const Tensor& x, const NumeratorParams& p) {
  require_token_sequence(x);
  const std::size_t B = x.dim(0), M = x.dim(1), E = x.dim(2);
  if (E != p.E) throw ShapeMismatch("token channels do not match numerator E");
  std::vector<double> phi(B * M * p.r_f, 0.0);
  for (std::size_t bm = 0; bm < B * M; ++bm) {
    const std::size_t xbase = bm * E;
    for (std::size_t j = 0; j < p.r_f; ++j) {
      double acc = 0.0;
      for (std::size_t e = 0; e < E; ++e) acc += p.V[e * p.r_f + j] * x.get(xbase + e);
      phi[bm * p.r_f + j] = acc;
    }
  }
  return phi;
}

// alpha_t = W_alpha x_t, gamma_t = sigmoid(W_gamma x_t).
inline void mixing_and_gates(const double* x_t, const NumeratorParams& p, double* alpha,
                             double* gamma) {
  for (std::size_t i = 0; i < p.r; ++i) {
    double acc = 0.0;
    for (std::size_t e = 0; e < p.E; ++e) acc += p.W_alpha[i * p.E + e] * x_t[e];
    alpha[i] = acc;
  }
  for (std::size_t j = 0; j < p.r_f; ++j) {
    double acc = 0.0;
    for (std::size_t e = 0; e < p.E; ++e) acc += p.W_gamma[j * p.E + e] * x_t[e];
    gamma[j] = stable_sigmoid(acc);
  }
}

// Ring buffer holding the latents of the last r tokens in scan order.
// Column i of the induced window is phi_{t-i}; positions before the start
// of the sequence read as exact zeros.
template <typename T>
class CausalWindow {
 public:
  CausalWindow(std::size_t r_f, std::size_t r) : r_f_(r_f), r_(r), buf_(r_f * r, T(0)), head_(0) {}

  void reset() {
    std::fill(buf_.begin(), buf_.end(), T(0));
    head_ = 0;
    filled_ = 0;
  }

  void push(const T* phi) {
    T* slot = buf_.data() + head_ * r_f_;
    for (std::size_t j = 0; j < r_f_; ++j) slot[j] = phi[j];
    head_ = (head_ + 1) % r_;
    if (filled_ < r_) ++filled_;
  }

  // lag in [1, r]; nullptr when the lag reaches before the sequence start
  const T* lag(std::size_t i) const {
    if (i > filled_) return nullptr;
    const std::size_t idx = (head_ + r_ - i) % r_;
    return buf_.data() + idx * r_f_;
  }

  std::size_t latent_width() const { return r_f_; }
  std::size_t lags() const { return r_; }

 private:
  std::size_t r_f_, r_;
  std::vector<T> buf_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
};

// eta_t = U (gamma ⊙ Phi alpha); strictly causal because the window only
// holds lags 1..r.
template <typename T>
inline void driving_signal(const CausalWindow<T>& window, const T* alpha, const T* gamma,
                           const T* U, std::size_t E, T* eta) {
  const std::size_t r_f = window.latent_width();
  std::vector<T> psi(r_f, T(0));
  for (std::size_t i = 1; i <= window.lags(); ++i) {
    const T* phi = window.lag(i);
    if (phi == nullptr) break;
    const T a = alpha[i - 1];
    for (std::size_t j = 0; j < r_f; ++j) psi[j] += a * phi[j];
  }
  for (std::size_t j = 0; j < r_f; ++j) psi[j] *= gamma[j];
  for (std::size_t e = 0; e < E; ++e) {
    T acc = T(0);
    for (std::size_t j = 0; j < r_f; ++j) acc += U[e * r_f + j] * psi[j];
    eta[e] = acc;
  }
}

// Explicit per-lag matrices B_i = alpha_i U Diag(gamma) V^T, each [E, E].
// Test oracle only; the production path never materializes them.
inline std::vector<std::vector<double>> dense_equivalent_B(const std::vector<double>& alpha,
                                                           const std::vector<double>& gamma,
                                                           const NumeratorParams& p) {
  std::vector<std::vector<double>> B(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    B[i].assign(p.E * p.E, 0.0);
    for (std::size_t row = 0; row < p.E; ++row) {
      for (std::size_t col = 0; col < p.E; ++col) {
        double acc = 0.0;
        for (std::size_t j = 0; j < p.r_f; ++j) {
          acc += p.U[row * p.r_f + j] * gamma[j] * p.V[col * p.r_f + j];
        }
        B[i][row * p.E + col] = alpha[i] * acc;
      }
    }
  }
  return B;
}

}  // namespace tcpssm
