#pragma once

// Reverse-mode gradients of L = sum of squared outputs, hand-derived
// through the whole operator: modulation heads, the exp-log pole remap,
// the clip/clamp plateaus (zero subgradient), polynomial expansion, the
// time-varying recurrence, the low-rank numerator and the direct path.
// Everything runs in f64 on a taped naive forward; the finite-difference
// side of grad_check evaluates the independent reference_forward.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tcpssm/common.hpp"
#include "tcpssm/errors.hpp"
#include "tcpssm/operator_params.hpp"
#include "tcpssm/scan.hpp"
#include "tcpssm/tensor.hpp"

namespace tcpssm {

struct OperatorGrads {
  std::vector<double> rho_hat_c, theta_hat, rho_hat_r, s_hat;
  std::vector<double> W_rho, b_rho, W_theta, b_theta;
  std::vector<double> U, V, W_alpha, W_gamma, D;

  static OperatorGrads zeros(const OperatorParams& p) {
    OperatorGrads g;
    g.rho_hat_c.assign(p.pole.rho_hat_c.size(), 0.0);
    g.theta_hat.assign(p.pole.theta_hat.size(), 0.0);
    g.rho_hat_r.assign(p.pole.rho_hat_r.size(), 0.0);
    g.s_hat.assign(p.pole.s_hat.size(), 0.0);
    g.W_rho.assign(p.heads.W_rho.size(), 0.0);
    g.b_rho.assign(p.heads.b_rho.size(), 0.0);
    g.W_theta.assign(p.heads.W_theta.size(), 0.0);
    g.b_theta.assign(p.heads.b_theta.size(), 0.0);
    g.U.assign(p.num.U.size(), 0.0);
    g.V.assign(p.num.V.size(), 0.0);
    g.W_alpha.assign(p.num.W_alpha.size(), 0.0);
    g.W_gamma.assign(p.num.W_gamma.size(), 0.0);
    g.D.assign(p.D.size(), 0.0);
    return g;
  }

  void check_finite() const {
    auto scan_vec = [](const std::vector<double>& v) {
      for (double x : v) {
        if (!std::isfinite(x)) throw NonFiniteGradient("non-finite analytic gradient");
      }
    };
    scan_vec(rho_hat_c);
    scan_vec(theta_hat);
    scan_vec(rho_hat_r);
    scan_vec(s_hat);
    scan_vec(W_rho);
    scan_vec(b_rho);
    scan_vec(W_theta);
    scan_vec(b_theta);
    scan_vec(U);
    scan_vec(V);
    scan_vec(W_alpha);
    scan_vec(W_gamma);
    scan_vec(D);
  }
};

namespace detail {

// Taped forward state for one batch row, indexed by route step.
struct RowTape {
  std::vector<double> z_rho, z_theta;          // [M,C]
  std::vector<double> s_rho, s_theta;          // [M,G]
  std::vector<double> mag_raw, mag, s_bar_v;   // [M,G,L] (s_bar repeated for convenience)
  std::vector<double> rho_raw, rho_v;          // [M,G,K]
  std::vector<double> theta_pre, theta_v;      // [M,G,K]
  std::vector<std::vector<std::vector<double>>> partials;  // [M][G] -> P_0..P_{F-1}
  std::vector<double> q;                       // [M,G,r]
  std::vector<double> alpha;                   // [M,r]
  std::vector<double> gamma;                   // [M,r_f]
  std::vector<double> psi;                     // [M,r_f]
  std::vector<double> eta;                     // [M,E]
  std::vector<double> phi;                     // [M,r_f], latent of token perm[step]
  std::vector<double> y;                       // [M,E]
  std::vector<double> o;                       // [M,E], by route step
};

}  // namespace detail

// Analytic gradients of L = sum o^2 along a single route. Returns the loss.
inline double grad_loss(const Tensor& x, const OperatorParams& p, const ScanRoute& route,
                        OperatorGrads& grads, bool clamp_radius = true) {
  require_token_sequence(x);
  p.validate();
  const std::size_t B = x.dim(0), M = x.dim(1), E = x.dim(2);
  if (E != p.E) throw ShapeMismatch("input channel count does not match operator E");
  route.validate(M);
  const auto& heads = p.heads;
  const std::size_t G = p.pole_cfg.G, L = p.pole_cfg.L, K = p.pole_cfg.K, r = p.r();
  const std::size_t r_f = p.num.r_f, Eg = E / G, C = heads.C;
  const double cap = 1.0 - p.pole_cfg.epsilon;

  const ConstrainedPoleBank bank = constrain(p.pole, p.pole_cfg);
  const std::vector<double> xv = x.to_f64_vector();

  grads = OperatorGrads::zeros(p);
  // accumulators for the squashed base values; mapped to logits at the end
  std::vector<double> d_rho_bar(G * L, 0.0), d_s_bar(G * L, 0.0);
  std::vector<double> d_rho_base(G * K, 0.0), d_theta_base(G * K, 0.0);

  double loss = 0.0;
  detail::RowTape tape;
  for (std::size_t b = 0; b < B; ++b) {
    tape.z_rho.assign(M * C, 0.0);
    tape.z_theta.assign(M * C, 0.0);
    tape.s_rho.assign(M * G, 0.0);
    tape.s_theta.assign(M * G, 0.0);
    tape.mag_raw.assign(M * G * L, 0.0);
    tape.mag.assign(M * G * L, 0.0);
    tape.rho_raw.assign(M * G * K, 0.0);
    tape.rho_v.assign(M * G * K, 0.0);
    tape.theta_pre.assign(M * G * K, 0.0);
    tape.theta_v.assign(M * G * K, 0.0);
    tape.partials.assign(M, {});
    tape.q.assign(M * G * r, 0.0);
    tape.alpha.assign(M * r, 0.0);
    tape.gamma.assign(M * r_f, 0.0);
    tape.psi.assign(M * r_f, 0.0);
    tape.eta.assign(M * E, 0.0);
    tape.phi.assign(M * r_f, 0.0);
    tape.y.assign(M * E, 0.0);
    tape.o.assign(M * E, 0.0);

    // ---- forward with tape ----
    for (std::size_t step = 0; step < M; ++step) {
      const std::size_t t = route.perm[step];
      const double* xt = xv.data() + (b * M + t) * E;

      for (std::size_t c = 0; c < C; ++c) {
        double zr = heads.b_rho[c], zt = heads.b_theta[c];
        for (std::size_t e = 0; e < E; ++e) {
          zr += heads.W_rho[c * E + e] * xt[e];
          zt += heads.W_theta[c * E + e] * xt[e];
        }
        tape.z_rho[step * C + c] = zr;
        tape.z_theta[step * C + c] = zt;
      }
      for (std::size_t g = 0; g < G; ++g) {
        const std::size_t c = heads.mode == ModulationMode::shared ? 0 : g;
        tape.s_rho[step * G + g] =
            (heads.delta_min + softplus(tape.z_rho[step * C + c])) / heads.delta_0;
        tape.s_theta[step * G + g] =
            1.0 + heads.lambda_theta * std::tanh(tape.z_theta[step * C + c]);
      }

      tape.partials[step].assign(G, {});
      for (std::size_t g = 0; g < G; ++g) {
        const double sr = tape.s_rho[step * G + g];
        const double st = tape.s_theta[step * G + g];
        auto& partial = tape.partials[step][g];
        partial.reserve(L + K);
        std::vector<double> poly{1.0};
        for (std::size_t l = 0; l < L; ++l) {
          const std::size_t idx = (step * G + g) * L + l;
          const double raw = std::exp(sr * std::log(bank.rho_bar_r[g * L + l]));
          const double m = (clamp_radius && raw > cap) ? cap : raw;
          tape.mag_raw[idx] = raw;
          tape.mag[idx] = m;
          const double a = bank.s_bar[g * L + l] * m;
          partial.push_back(poly);
          std::vector<double> nxt(poly.size() + 1, 0.0);
          for (std::size_t i = 0; i < poly.size(); ++i) {
            nxt[i] += poly[i];
            nxt[i + 1] -= poly[i] * a;
          }
          poly.swap(nxt);
        }
        for (std::size_t k = 0; k < K; ++k) {
          const std::size_t idx = (step * G + g) * K + k;
          const double raw = std::exp(sr * std::log(bank.rho_c[g * K + k]));
          const double rho = (clamp_radius && raw > cap) ? cap : raw;
          const double pre = st * bank.theta_c[g * K + k];
          const double theta = std::fmin(std::fmax(pre, 0.0), kPi);
          tape.rho_raw[idx] = raw;
          tape.rho_v[idx] = rho;
          tape.theta_pre[idx] = pre;
          tape.theta_v[idx] = theta;
          const double c1 = -2.0 * rho * std::cos(theta), c2 = rho * rho;
          partial.push_back(poly);
          std::vector<double> nxt(poly.size() + 2, 0.0);
          for (std::size_t i = 0; i < poly.size(); ++i) {
            nxt[i] += poly[i];
            nxt[i + 1] += poly[i] * c1;
            nxt[i + 2] += poly[i] * c2;
          }
          poly.swap(nxt);
        }
        for (std::size_t i = 0; i < r; ++i) tape.q[(step * G + g) * r + i] = poly[i + 1];
      }

      for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += p.num.W_alpha[i * E + e] * xt[e];
        tape.alpha[step * r + i] = acc;
      }
      for (std::size_t j = 0; j < r_f; ++j) {
        double acc = 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += p.num.W_gamma[j * E + e] * xt[e];
        tape.gamma[step * r_f + j] = stable_sigmoid(acc);
      }
      for (std::size_t j = 0; j < r_f; ++j) {
        double acc = 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += p.num.V[e * r_f + j] * xt[e];
        tape.phi[step * r_f + j] = acc;
      }
      for (std::size_t j = 0; j < r_f; ++j) {
        double acc = 0.0;
        for (std::size_t i = 1; i <= r && i <= step; ++i) {
          acc += tape.alpha[step * r + i - 1] * tape.phi[(step - i) * r_f + j];
        }
        tape.psi[step * r_f + j] = acc;
      }
      for (std::size_t e = 0; e < E; ++e) {
        double acc = 0.0;
        for (std::size_t j = 0; j < r_f; ++j) {
          acc += p.num.U[e * r_f + j] * tape.gamma[step * r_f + j] * tape.psi[step * r_f + j];
        }
        tape.eta[step * E + e] = acc;
      }

      for (std::size_t g = 0; g < G; ++g) {
        const double* q = tape.q.data() + (step * G + g) * r;
        for (std::size_t e = g * Eg; e < (g + 1) * Eg; ++e) {
          double acc = tape.eta[step * E + e];
          for (std::size_t i = 1; i <= r && i <= step; ++i) {
            acc -= q[i - 1] * tape.y[(step - i) * E + e];
          }
          tape.y[step * E + e] = acc;
        }
      }
      for (std::size_t e = 0; e < E; ++e) {
        const double o = tape.y[step * E + e] + p.D[e] * xt[e];
        tape.o[step * E + e] = o;
        loss += o * o;
      }
    }

    // ---- backward ----
    std::vector<double> g_y(M * E, 0.0);
    std::vector<double> g_phi(M * r_f, 0.0);
    for (std::size_t step = 0; step < M; ++step) {
      const std::size_t t = route.perm[step];
      const double* xt = xv.data() + (b * M + t) * E;
      for (std::size_t e = 0; e < E; ++e) {
        const double d_o = 2.0 * tape.o[step * E + e];
        g_y[step * E + e] += d_o;
        grads.D[e] += d_o * xt[e];
      }
    }

    for (std::size_t step = M; step-- > 0;) {
      const std::size_t t = route.perm[step];
      const double* xt = xv.data() + (b * M + t) * E;

      // recurrence: dy -> d eta, dq, earlier dy
      std::vector<double> dq(G * r, 0.0);
      std::vector<double> d_eta(E, 0.0);
      for (std::size_t g = 0; g < G; ++g) {
        const double* q = tape.q.data() + (step * G + g) * r;
        for (std::size_t e = g * Eg; e < (g + 1) * Eg; ++e) {
          const double dy = g_y[step * E + e];
          d_eta[e] = dy;
          for (std::size_t i = 1; i <= r && i <= step; ++i) {
            dq[g * r + i - 1] -= dy * tape.y[(step - i) * E + e];
            g_y[(step - i) * E + e] -= q[i - 1] * dy;
          }
        }
      }

      // numerator backward
      std::vector<double> dm(r_f, 0.0);
      for (std::size_t e = 0; e < E; ++e) {
        for (std::size_t j = 0; j < r_f; ++j) {
          const double m = tape.gamma[step * r_f + j] * tape.psi[step * r_f + j];
          grads.U[e * r_f + j] += d_eta[e] * m;
          dm[j] += p.num.U[e * r_f + j] * d_eta[e];
        }
      }
      for (std::size_t j = 0; j < r_f; ++j) {
        const double gamma = tape.gamma[step * r_f + j];
        const double d_gamma = dm[j] * tape.psi[step * r_f + j];
        const double d_psi = dm[j] * gamma;
        const double d_pre = d_gamma * sigmoid_deriv_from_value(gamma);
        for (std::size_t e = 0; e < E; ++e) grads.W_gamma[j * E + e] += d_pre * xt[e];
        for (std::size_t i = 1; i <= r && i <= step; ++i) {
          const double alpha = tape.alpha[step * r + i - 1];
          g_phi[(step - i) * r_f + j] += alpha * d_psi;
        }
        dm[j] = d_psi;  // reuse as d psi for the alpha pass below
      }
      for (std::size_t i = 1; i <= r && i <= step; ++i) {
        double d_alpha = 0.0;
        for (std::size_t j = 0; j < r_f; ++j) {
          d_alpha += dm[j] * tape.phi[(step - i) * r_f + j];
        }
        for (std::size_t e = 0; e < E; ++e) grads.W_alpha[(i - 1) * E + e] += d_alpha * xt[e];
      }

      // expansion backward, factor by factor in reverse
      std::vector<double> ds_rho(G, 0.0), ds_theta(G, 0.0);
      for (std::size_t g = 0; g < G; ++g) {
        const std::size_t F = L + K;
        std::vector<double> dP(r + 1, 0.0);
        for (std::size_t i = 0; i < r; ++i) dP[i + 1] = dq[g * r + i];
        for (std::size_t f = F; f-- > 0;) {
          const std::vector<double>& prev = tape.partials[step][g][f];
          double c1, c2 = 0.0;
          int degree;
          if (f < L) {
            const std::size_t idx = (step * G + g) * L + f;
            c1 = -bank.s_bar[g * L + f] * tape.mag[idx];
            degree = 1;
          } else {
            const std::size_t k = f - L;
            const std::size_t idx = (step * G + g) * K + k;
            c1 = -2.0 * tape.rho_v[idx] * std::cos(tape.theta_v[idx]);
            c2 = tape.rho_v[idx] * tape.rho_v[idx];
            degree = 2;
          }
          double df1 = 0.0, df2 = 0.0;
          std::vector<double> dPrev(prev.size(), 0.0);
          for (std::size_t w = 0; w < prev.size(); ++w) {
            dPrev[w] += dP[w];
            dPrev[w] += dP[w + 1] * c1;
            df1 += dP[w + 1] * prev[w];
            if (degree == 2) {
              dPrev[w] += dP[w + 2] * c2;
              df2 += dP[w + 2] * prev[w];
            }
          }
          if (f < L) {
            const std::size_t idx = (step * G + g) * L + f;
            const double da = -df1;
            const double mag = tape.mag[idx];
            const double raw = tape.mag_raw[idx];
            d_s_bar[g * L + f] += da * mag;
            const bool clamped = clamp_radius && raw > cap;
            if (!clamped) {
              const double d_raw = da * bank.s_bar[g * L + f];
              ds_rho[g] += d_raw * raw * std::log(bank.rho_bar_r[g * L + f]);
              d_rho_bar[g * L + f] +=
                  d_raw * raw * tape.s_rho[step * G + g] / bank.rho_bar_r[g * L + f];
            }
          } else {
            const std::size_t k = f - L;
            const std::size_t idx = (step * G + g) * K + k;
            const double rho = tape.rho_v[idx], theta = tape.theta_v[idx];
            const double d_rho = df1 * (-2.0 * std::cos(theta)) + df2 * (2.0 * rho);
            const double d_theta = df1 * (2.0 * rho * std::sin(theta));
            const double raw = tape.rho_raw[idx];
            const bool clamped = clamp_radius && raw > cap;
            if (!clamped) {
              ds_rho[g] += d_rho * raw * std::log(bank.rho_c[g * K + k]);
              d_rho_base[g * K + k] +=
                  d_rho * raw * tape.s_rho[step * G + g] / bank.rho_c[g * K + k];
            }
            const double pre = tape.theta_pre[idx];
            if (pre > 0.0 && pre < kPi) {  // zero subgradient on the clip plateaus
              ds_theta[g] += d_theta * bank.theta_c[g * K + k];
              d_theta_base[g * K + k] += d_theta * tape.s_theta[step * G + g];
            }
          }
          dP.swap(dPrev);
        }
      }

      // scales -> head rows
      std::vector<double> dz_rho(C, 0.0), dz_theta(C, 0.0);
      for (std::size_t g = 0; g < G; ++g) {
        const std::size_t c = heads.mode == ModulationMode::shared ? 0 : g;
        dz_rho[c] += ds_rho[g] * stable_sigmoid(tape.z_rho[step * C + c]) / heads.delta_0;
        const double th = std::tanh(tape.z_theta[step * C + c]);
        dz_theta[c] += ds_theta[g] * heads.lambda_theta * tanh_deriv_from_value(th);
      }
      for (std::size_t c = 0; c < C; ++c) {
        grads.b_rho[c] += dz_rho[c];
        grads.b_theta[c] += dz_theta[c];
        for (std::size_t e = 0; e < E; ++e) {
          grads.W_rho[c * E + e] += dz_rho[c] * xt[e];
          grads.W_theta[c * E + e] += dz_theta[c] * xt[e];
        }
      }
    }

    // latent projections
    for (std::size_t step = 0; step < M; ++step) {
      const double* xs = xv.data() + (b * M + route.perm[step]) * E;
      for (std::size_t j = 0; j < r_f; ++j) {
        const double d = g_phi[step * r_f + j];
        if (d == 0.0) continue;
        for (std::size_t e = 0; e < E; ++e) grads.V[e * r_f + j] += xs[e] * d;
      }
    }
  }

  // squashed base values -> unconstrained logits
  for (std::size_t i = 0; i < G * L; ++i) {
    const double sig = bank.rho_bar_r[i] / cap;
    grads.rho_hat_r[i] = d_rho_bar[i] * cap * sigmoid_deriv_from_value(sig);
    grads.s_hat[i] = d_s_bar[i] * tanh_deriv_from_value(bank.s_bar[i]);
  }
  for (std::size_t i = 0; i < G * K; ++i) {
    const double sig_rho = bank.rho_c[i] / cap;
    grads.rho_hat_c[i] = d_rho_base[i] * cap * sigmoid_deriv_from_value(sig_rho);
    const double sig_theta = bank.theta_c[i] / kPi;
    grads.theta_hat[i] = d_theta_base[i] * kPi * sigmoid_deriv_from_value(sig_theta);
  }
  grads.check_finite();
  return loss;
}

inline double reference_loss(const Tensor& x, const OperatorParams& p, const ScanRoute& route,
                             bool clamp_radius = true) {
  const Tensor o = reference_forward(x, p, route, clamp_radius);
  double loss = 0.0;
  for (std::size_t i = 0; i < o.numel(); ++i) loss += o.get(i) * o.get(i);
  return loss;
}

struct NamedField {
  std::string name;
  std::vector<double>* value;
  const std::vector<double>* grad;
};

inline std::vector<NamedField> trainable_fields(OperatorParams& p, const OperatorGrads& g) {
  return {
      {"pole.rho_hat_c", &p.pole.rho_hat_c, &g.rho_hat_c},
      {"pole.theta_hat", &p.pole.theta_hat, &g.theta_hat},
      {"pole.rho_hat_r", &p.pole.rho_hat_r, &g.rho_hat_r},
      {"pole.s_hat", &p.pole.s_hat, &g.s_hat},
      {"heads.W_rho", &p.heads.W_rho, &g.W_rho},
      {"heads.b_rho", &p.heads.b_rho, &g.b_rho},
      {"heads.W_theta", &p.heads.W_theta, &g.W_theta},
      {"heads.b_theta", &p.heads.b_theta, &g.b_theta},
      {"num.U", &p.num.U, &g.U},
      {"num.V", &p.num.V, &g.V},
      {"num.W_alpha", &p.num.W_alpha, &g.W_alpha},
      {"num.W_gamma", &p.num.W_gamma, &g.W_gamma},
      {"D", &p.D, &g.D},
  };
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_field;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_fd = 0.0;
};

// Central differences with step h against the analytic pass. Relative error
// uses max(|g_a|, |g_fd|, 1) as denominator, so near-zero gradients are
// judged on the absolute scale of the finite-difference noise.
inline GradCheckReport grad_check(const Tensor& x, const OperatorParams& p,
                                  const ScanRoute& route, double fd_step = 1e-6,
                                  bool clamp_radius = true) {
  OperatorGrads grads;
  grad_loss(x, p, route, grads, clamp_radius);

  OperatorParams work = p;
  GradCheckReport report;
  for (const auto& field : trainable_fields(work, grads)) {
    for (std::size_t i = 0; i < field.value->size(); ++i) {
      const double orig = (*field.value)[i];
      (*field.value)[i] = orig + fd_step;
      const double lp = reference_loss(x, work, route, clamp_radius);
      (*field.value)[i] = orig - fd_step;
      const double lm = reference_loss(x, work, route, clamp_radius);
      (*field.value)[i] = orig;
      const double fd = (lp - lm) / (2.0 * fd_step);
      const double ga = (*field.grad)[i];
      const double err = std::fabs(ga - fd) / std::fmax(std::fmax(std::fabs(ga), std::fabs(fd)), 1.0);
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst_field = field.name;
        report.worst_index = i;
        report.worst_analytic = ga;
        report.worst_fd = fd;
      }
    }
  }
  return report;
}

}  // namespace tcpssm
