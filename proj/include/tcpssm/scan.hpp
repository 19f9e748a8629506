#pragma once

// Forward operator: per token, modulation scales remap the pole bank, the
// token-conditioned denominator is expanded, the low-rank numerator forms
// the driving signal, and each channel group runs
//   y_t = eta_t - sum_i q_{t,g,i} y_{t-i},   o_t = y_t + D ⊙ x_t.
// The recurrence is strictly sequential within one (batch row, route);
// parallelism is across rows and routes only, so results are independent
// of the thread count.

#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tcpssm/common.hpp"
#include "tcpssm/denominator.hpp"
#include "tcpssm/errors.hpp"
#include "tcpssm/modulation.hpp"
#include "tcpssm/numerator.hpp"
#include "tcpssm/operator_params.hpp"
#include "tcpssm/pole_bank.hpp"
#include "tcpssm/tensor.hpp"

namespace tcpssm {

// A route is a bijective visit order over the M token slots.
struct ScanRoute {
  std::string id;
  std::vector<std::size_t> perm;

  static ScanRoute forward(std::size_t M) {
    ScanRoute r;
    r.id = "fwd";
    r.perm.resize(M);
    for (std::size_t i = 0; i < M; ++i) r.perm[i] = i;
    return r;
  }

  static ScanRoute backward(std::size_t M) {
    ScanRoute r;
    r.id = "bwd";
    r.perm.resize(M);
    for (std::size_t i = 0; i < M; ++i) r.perm[i] = M - 1 - i;
    return r;
  }

  void validate(std::size_t M) const {
    if (perm.size() != M) throw ShapeMismatch("route permutation length does not match M");
    std::vector<char> seen(M, 0);
    for (std::size_t v : perm) {
      if (v >= M || seen[v]) throw ConfigError("route permutation is not a bijection");
      seen[v] = 1;
    }
  }
};

inline std::vector<ScanRoute> routes_from_spec(const std::string& spec, std::size_t M) {
  std::vector<ScanRoute> routes;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find(',', start);
    if (end == std::string::npos) end = spec.size();
    const std::string name = spec.substr(start, end - start);
    if (name == "fwd") {
      routes.push_back(ScanRoute::forward(M));
    } else if (name == "bwd") {
      routes.push_back(ScanRoute::backward(M));
    } else if (!name.empty()) {
      throw ConfigError("unknown route '" + name + "' (expected fwd or bwd)");
    }
    start = end + 1;
  }
  if (routes.empty()) throw ConfigError("route spec selects no routes");
  return routes;
}

struct ScanOptions {
  bool clamp_radius = true;
  int threads = 1;
};

// Recurrent memory for one batch row: y history per channel and the latent
// window, both rings of depth r. All-zero at position 0.
template <typename T>
struct ScanState {
  std::size_t E = 0, r = 0;
  std::vector<T> y_hist;  // [E, r] ring
  CausalWindow<T> window;
  std::size_t pos = 0;

  ScanState(std::size_t E_, std::size_t r_, std::size_t r_f)
      : E(E_), r(r_), y_hist(E_ * r_, T(0)), window(r_f, r_) {}

  void reset() {
    std::fill(y_hist.begin(), y_hist.end(), T(0));
    window.reset();
    pos = 0;
  }

  T y_lag(std::size_t e, std::size_t i) const {  // i in [1, r]
    if (i > pos) return T(0);
    return y_hist[e * r + (pos - i) % r];
  }

  void push_y(const T* y) {
    const std::size_t slot = pos % r;
    for (std::size_t e = 0; e < E; ++e) y_hist[e * r + slot] = y[e];
  }
};

namespace detail {

template <typename T>
struct PreparedOperator {
  const OperatorParams* p = nullptr;
  ConstrainedPoleBank bank;
  std::vector<T> U, V, W_alpha, W_gamma, D;
  std::size_t E = 0, G = 0, L = 0, K = 0, r = 0, r_f = 0, Eg = 0;

  explicit PreparedOperator(const OperatorParams& params) : p(&params) {
    params.validate();
    bank = constrain(params.pole, params.pole_cfg);
    E = params.E;
    G = params.pole_cfg.G;
    L = params.pole_cfg.L;
    K = params.pole_cfg.K;
    r = params.pole_cfg.r();
    r_f = params.num.r_f;
    Eg = E / G;
    U.assign(params.num.U.begin(), params.num.U.end());
    V.assign(params.num.V.begin(), params.num.V.end());
    W_alpha.assign(params.num.W_alpha.begin(), params.num.W_alpha.end());
    W_gamma.assign(params.num.W_gamma.begin(), params.num.W_gamma.end());
    D.assign(params.D.begin(), params.D.end());
  }
};

// One batch row along one route. x_row is the row in original token order,
// f64; out_row is written in original token order.
template <typename T>
void scan_row(const PreparedOperator<T>& op, const double* x_row, std::size_t M,
              const ScanRoute& route, bool clamp_radius, T* out_row) {
  const auto& heads = op.p->heads;
  const std::size_t E = op.E, G = op.G, L = op.L, K = op.K, r = op.r, r_f = op.r_f;
  const double cap = 1.0 - op.bank.epsilon;

  ScanState<T> state(E, r, r_f);
  std::vector<double> q64(r);
  std::vector<T> q(G * r), phi(r_f), alpha(r), gamma(r_f), eta(E), y(E), xT(E);
  std::vector<FactorCoeffs> factors(L + K);

  for (std::size_t step = 0; step < M; ++step) {
    const std::size_t t = route.perm[step];
    const double* xt = x_row + t * E;
    for (std::size_t e = 0; e < E; ++e) xT[e] = T(xt[e]);

    // token-conditioned denominators, expanded in f64 then cast
    for (std::size_t g = 0; g < G; ++g) {
      const std::size_t c = heads.mode == ModulationMode::shared ? 0 : g;
      double z_rho = heads.b_rho[c];
      double z_theta = heads.b_theta[c];
      for (std::size_t e = 0; e < E; ++e) {
        z_rho += heads.W_rho[c * E + e] * xt[e];
        z_theta += heads.W_theta[c * E + e] * xt[e];
      }
      const double s_rho = (heads.delta_min + softplus(z_rho)) / heads.delta_0;
      const double s_theta = 1.0 + heads.lambda_theta * std::tanh(z_theta);
      for (std::size_t l = 0; l < L; ++l) {
        double mag = std::exp(s_rho * std::log(op.bank.rho_bar_r[g * L + l]));
        if (clamp_radius && mag > cap) mag = cap;
        factors[l] = FactorCoeffs::real_pole(op.bank.s_bar[g * L + l] * mag);
      }
      for (std::size_t k = 0; k < K; ++k) {
        double rho = std::exp(s_rho * std::log(op.bank.rho_c[g * K + k]));
        if (clamp_radius && rho > cap) rho = cap;
        double theta = s_theta * op.bank.theta_c[g * K + k];
        if (theta < 0.0) theta = 0.0;
        if (theta > kPi) theta = kPi;
        factors[L + k] = FactorCoeffs::complex_pair(rho, theta);
      }
      const std::vector<double> full = expand_factors(factors);
      for (std::size_t i = 0; i < r; ++i) q[g * r + i] = T(full[i + 1]);
    }

    // low-rank numerator
    for (std::size_t i = 0; i < r; ++i) {
      T acc = T(0);
      for (std::size_t e = 0; e < E; ++e) acc += op.W_alpha[i * E + e] * xT[e];
      alpha[i] = acc;
    }
    for (std::size_t j = 0; j < r_f; ++j) {
      T acc = T(0);
      for (std::size_t e = 0; e < E; ++e) acc += op.W_gamma[j * E + e] * xT[e];
      gamma[j] = T(stable_sigmoid(double(acc)));
    }
    driving_signal(state.window, alpha.data(), gamma.data(), op.U.data(), E, eta.data());

    // grouped recurrence + direct path
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t e = g * op.Eg; e < (g + 1) * op.Eg; ++e) {
        T acc = eta[e];
        for (std::size_t i = 1; i <= r && i <= state.pos; ++i) {
          acc -= q[g * r + i - 1] * state.y_lag(e, i);
        }
        y[e] = acc;
      }
    }
    T* out = out_row + t * E;
    for (std::size_t e = 0; e < E; ++e) {
      out[e] = y[e] + op.D[e] * xT[e];
      if (!std::isfinite(double(out[e]))) {
        throw NonFiniteDetected(t, "scan output, route '" + route.id + "' step " +
                                       std::to_string(step));
      }
    }

    state.push_y(y.data());
    for (std::size_t j = 0; j < r_f; ++j) {
      T acc = T(0);
      for (std::size_t e = 0; e < E; ++e) acc += op.V[e * r_f + j] * xT[e];
      phi[j] = acc;
    }
    state.window.push(phi.data());
    ++state.pos;
  }
}

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(std::size_t(threads), n);
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

template <typename T>
Tensor forward_route_t(const Tensor& x, const OperatorParams& p, const ScanRoute& route,
                       const ScanOptions& opts = {}) {
  require_token_sequence(x);
  const std::size_t B = x.dim(0), M = x.dim(1), E = x.dim(2);
  if (E != p.E) throw ShapeMismatch("input channel count does not match operator E");
  route.validate(M);
  const detail::PreparedOperator<T> op(p);
  const std::vector<double> xv = x.to_f64_vector();
  const DType out_dtype = std::is_same_v<T, float> ? DType::f32 : DType::f64;
  Tensor out = Tensor::zeros(out_dtype, {B, M, E});
  std::vector<T> buf(B * M * E, T(0));
  detail::parallel_for(B, opts.threads, [&](std::size_t b) {
    detail::scan_row(op, xv.data() + b * M * E, M, route, opts.clamp_radius,
                     buf.data() + b * M * E);
  });
  for (std::size_t i = 0; i < buf.size(); ++i) out.set(i, double(buf[i]));
  return out;
}

inline Tensor forward_route(const Tensor& x, const OperatorParams& p, const ScanRoute& route,
                            DType precision = DType::f32, const ScanOptions& opts = {}) {
  return precision == DType::f32 ? forward_route_t<float>(x, p, route, opts)
                                 : forward_route_t<double>(x, p, route, opts);
}

// Mean over routes; D is applied inside each route, so the fusion averages
// complete per-route outputs.
template <typename T>
Tensor forward_multi_route_t(const Tensor& x, const OperatorParams& p,
                             const std::vector<ScanRoute>& routes, const ScanOptions& opts = {}) {
  require_token_sequence(x);
  if (routes.empty()) throw ConfigError("need at least one route");
  const std::size_t B = x.dim(0), M = x.dim(1), E = x.dim(2);
  if (E != p.E) throw ShapeMismatch("input channel count does not match operator E");
  for (const auto& rt : routes) rt.validate(M);
  const detail::PreparedOperator<T> op(p);
  const std::vector<double> xv = x.to_f64_vector();
  const std::size_t R = routes.size();
  std::vector<T> buf(R * B * M * E, T(0));
  detail::parallel_for(R * B, opts.threads, [&](std::size_t job) {
    const std::size_t rt = job / B, b = job % B;
    detail::scan_row(op, xv.data() + b * M * E, M, routes[rt], opts.clamp_radius,
                     buf.data() + (rt * B + b) * M * E);
  });
  const DType out_dtype = std::is_same_v<T, float> ? DType::f32 : DType::f64;
  Tensor out = Tensor::zeros(out_dtype, {B, M, E});
  const T inv = T(1) / T(R);
  for (std::size_t i = 0; i < B * M * E; ++i) {
    T acc = T(0);
    for (std::size_t rt = 0; rt < R; ++rt) acc += buf[rt * B * M * E + i];
    out.set(i, double(acc * inv));
  }
  return out;
}

inline Tensor forward_multi_route(const Tensor& x, const OperatorParams& p,
                                  const std::vector<ScanRoute>& routes,
                                  DType precision = DType::f32, const ScanOptions& opts = {}) {
  return precision == DType::f32 ? forward_multi_route_t<float>(x, p, routes, opts)
                                 : forward_multi_route_t<double>(x, p, routes, opts);
}

// Deliberately naive f64 oracle: no ring buffers, the causal window is
// rebuilt from raw tokens at every step, factors multiply in natural order,
// y history is a plain array. Kept separate from the kernel code path.
inline Tensor reference_forward(const Tensor& x, const OperatorParams& p, const ScanRoute& route,
                                bool clamp_radius = true) {
  require_token_sequence(x);
  p.validate();
  const std::size_t B = x.dim(0), M = x.dim(1), E = x.dim(2);
  if (E != p.E) throw ShapeMismatch("input channel count does not match operator E");
  route.validate(M);
  const auto& heads = p.heads;
  const std::size_t G = p.pole_cfg.G, L = p.pole_cfg.L, K = p.pole_cfg.K, r = p.r();
  const std::size_t r_f = p.num.r_f, Eg = E / G;
  const double cap = 1.0 - p.pole_cfg.epsilon;

  // squash trainables (same formulas, independent code)
  std::vector<double> s_bar(G * L), rho_bar(G * L), rho_c(G * K), theta_c(G * K);
  for (std::size_t i = 0; i < G * L; ++i) {
    s_bar[i] = std::tanh(p.pole.s_hat[i]);
    rho_bar[i] = cap * stable_sigmoid(p.pole.rho_hat_r[i]);
  }
  for (std::size_t i = 0; i < G * K; ++i) {
    rho_c[i] = cap * stable_sigmoid(p.pole.rho_hat_c[i]);
    theta_c[i] = kPi * stable_sigmoid(p.pole.theta_hat[i]);
  }

  const std::vector<double> xv = x.to_f64_vector();
  Tensor out = Tensor::zeros(DType::f64, {B, M, E});
  std::vector<double> y_seq(M * E);  // per batch row, indexed by route step
  std::vector<double> q(r), phi(r_f), psi(r_f), alpha(r), gamma(r_f), eta(E);

  for (std::size_t b = 0; b < B; ++b) {
    std::fill(y_seq.begin(), y_seq.end(), 0.0);
    for (std::size_t step = 0; step < M; ++step) {
      const std::size_t t = route.perm[step];
      const double* xt = xv.data() + (b * M + t) * E;

      // numerator: window rebuilt from scratch
      for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += p.num.W_alpha[i * E + e] * xt[e];
        alpha[i] = acc;
      }
      for (std::size_t j = 0; j < r_f; ++j) {
        double acc = 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += p.num.W_gamma[j * E + e] * xt[e];
        gamma[j] = stable_sigmoid(acc);
      }
      std::fill(psi.begin(), psi.end(), 0.0);
      for (std::size_t i = 1; i <= r && i <= step; ++i) {
        const double* xp = xv.data() + (b * M + route.perm[step - i]) * E;
        for (std::size_t j = 0; j < r_f; ++j) {
          double acc = 0.0;
          for (std::size_t e = 0; e < E; ++e) acc += p.num.V[e * r_f + j] * xp[e];
          phi[j] = acc;
        }
        for (std::size_t j = 0; j < r_f; ++j) psi[j] += alpha[i - 1] * phi[j];
      }
      for (std::size_t e = 0; e < E; ++e) {
        double acc = 0.0;
        for (std::size_t j = 0; j < r_f; ++j) acc += p.num.U[e * r_f + j] * gamma[j] * psi[j];
        eta[e] = acc;
      }

      for (std::size_t g = 0; g < G; ++g) {
        const std::size_t c = heads.mode == ModulationMode::shared ? 0 : g;
        double z_rho = heads.b_rho[c];
        double z_theta = heads.b_theta[c];
        for (std::size_t e = 0; e < E; ++e) {
          z_rho += heads.W_rho[c * E + e] * xt[e];
          z_theta += heads.W_theta[c * E + e] * xt[e];
        }
        const double s_rho = (heads.delta_min + softplus(z_rho)) / heads.delta_0;
        const double s_theta = 1.0 + heads.lambda_theta * std::tanh(z_theta);

        // natural-order polynomial product, reals then complex pairs
        std::vector<double> poly{1.0};
        for (std::size_t l = 0; l < L; ++l) {
          double mag = std::exp(s_rho * std::log(rho_bar[g * L + l]));
          if (clamp_radius && mag > cap) mag = cap;
          const double a = s_bar[g * L + l] * mag;
          std::vector<double> nxt(poly.size() + 1, 0.0);
          for (std::size_t i = 0; i < poly.size(); ++i) {
            nxt[i] += poly[i];
            nxt[i + 1] -= poly[i] * a;
          }
          poly.swap(nxt);
        }
        for (std::size_t k = 0; k < K; ++k) {
          double rho = std::exp(s_rho * std::log(rho_c[g * K + k]));
          if (clamp_radius && rho > cap) rho = cap;
          double theta = s_theta * theta_c[g * K + k];
          theta = std::fmin(std::fmax(theta, 0.0), kPi);
          const double c1 = -2.0 * rho * std::cos(theta), c2 = rho * rho;
          std::vector<double> nxt(poly.size() + 2, 0.0);
          for (std::size_t i = 0; i < poly.size(); ++i) {
            nxt[i] += poly[i];
            nxt[i + 1] += poly[i] * c1;
            nxt[i + 2] += poly[i] * c2;
          }
          poly.swap(nxt);
        }
        for (std::size_t i = 0; i < r; ++i) q[i] = poly[i + 1];

        for (std::size_t e = g * Eg; e < (g + 1) * Eg; ++e) {
          double acc = eta[e];
          for (std::size_t i = 1; i <= r && i <= step; ++i) {
            acc -= q[i - 1] * y_seq[(step - i) * E + e];
          }
          y_seq[step * E + e] = acc;
        }
      }

      double* o = out.data_f64().data() + (b * M + t) * E;
      for (std::size_t e = 0; e < E; ++e) {
        o[e] = y_seq[step * E + e] + p.D[e] * xt[e];
        if (!std::isfinite(o[e])) {
          throw NonFiniteDetected(t, "reference scan output");
        }
      }
    }
  }
  return out;
}

inline Tensor reference_multi_route(const Tensor& x, const OperatorParams& p,
                                    const std::vector<ScanRoute>& routes,
                                    bool clamp_radius = true) {
  if (routes.empty()) throw ConfigError("need at least one route");
  Tensor acc = reference_forward(x, p, routes[0], clamp_radius);
  for (std::size_t i = 1; i < routes.size(); ++i) {
    const Tensor oi = reference_forward(x, p, routes[i], clamp_radius);
    for (std::size_t j = 0; j < acc.numel(); ++j) acc.set(j, acc.get(j) + oi.get(j));
  }
  const double inv = 1.0 / double(routes.size());
  for (std::size_t j = 0; j < acc.numel(); ++j) acc.set(j, acc.get(j) * inv);
  return acc;
}

// Runs the production q-path (scales -> modulated poles -> expansion) but
// drives the recurrence with a caller-supplied eta. Returns y (no direct
// path). Coefficients always come from x, so tests can scale eta while the
// dynamics stay frozen.
inline Tensor scan_with_injected_eta(const Tensor& x, const OperatorParams& p,
                                     const ScanRoute& route, const Tensor& eta,
                                     bool clamp_radius = true) {
  require_token_sequence(x);
  require_token_sequence(eta);
  p.validate();
  const std::size_t B = x.dim(0), M = x.dim(1), E = x.dim(2);
  if (eta.dim(0) != B || eta.dim(1) != M || eta.dim(2) != E) {
    throw ShapeMismatch("eta shape must match x");
  }
  route.validate(M);
  const ConstrainedPoleBank bank = constrain(p.pole, p.pole_cfg);
  const TokenScales scales = compute_scales(x, p.heads, p.pole_cfg.G);
  const ModulatedPoles poles = modulate(bank, scales, clamp_radius);
  const DenominatorCoeffs coeffs = expand_token_denominators(poles);
  const std::size_t G = p.pole_cfg.G, r = p.r(), Eg = E / G;

  Tensor out = Tensor::zeros(DType::f64, {B, M, E});
  std::vector<double> y_seq(M * E);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(y_seq.begin(), y_seq.end(), 0.0);
    for (std::size_t step = 0; step < M; ++step) {
      const std::size_t t = route.perm[step];
      for (std::size_t g = 0; g < G; ++g) {
        const double* q = coeffs.at(b * M + t, g);
        for (std::size_t e = g * Eg; e < (g + 1) * Eg; ++e) {
          double acc = eta.get((b * M + t) * E + e);
          for (std::size_t i = 1; i <= r && i <= step; ++i) {
            acc -= q[i - 1] * y_seq[(step - i) * E + e];
          }
          y_seq[step * E + e] = acc;
          if (!std::isfinite(acc)) throw NonFiniteDetected(t, "injected-eta scan");
        }
      }
      for (std::size_t e = 0; e < E; ++e) out.set((b * M + t) * E + e, y_seq[step * E + e]);
    }
  }
  return out;
}

struct LtiCheckReport {
  std::size_t M = 0;
  double max_abs_err = 0.0;
  double tol = 0.0;
  bool ok = false;
};

// Freezes the operator at identity modulation, replaces the numerator with
// constant per-lag taps, and checks the grouped recurrence against a
// companion-form state-space iteration h_t = A h_{t-1} + b u_t driven by a
// per-channel unit impulse.
inline LtiCheckReport lti_crosscheck(const OperatorParams& p, const std::vector<double>& taps,
                                     std::size_t M = 256, double tol = 1e-10) {
  p.validate();
  const std::size_t E = p.E, G = p.pole_cfg.G, r = p.r(), Eg = E / G;
  if (taps.size() != r) throw ShapeMismatch("tap vector must have r entries");
  for (double w : p.heads.W_rho)
    if (w != 0.0) throw ConfigError("lti_crosscheck requires identity modulation (zero heads)");
  for (double w : p.heads.W_theta)
    if (w != 0.0) throw ConfigError("lti_crosscheck requires identity modulation (zero heads)");
  for (double w : p.heads.b_rho)
    if (w != 0.0) throw ConfigError("lti_crosscheck requires identity modulation (zero heads)");
  for (double w : p.heads.b_theta)
    if (w != 0.0) throw ConfigError("lti_crosscheck requires identity modulation (zero heads)");

  // impulse at t=0 on every channel
  Tensor x = Tensor::zeros(DType::f64, {1, M, E});
  for (std::size_t e = 0; e < E; ++e) x.set(e, 1.0);

  // production side: tap-built eta through the token-conditioned machinery
  Tensor eta = Tensor::zeros(DType::f64, {1, M, E});
  for (std::size_t t = 0; t < M; ++t) {
    for (std::size_t i = 1; i <= r && i <= t; ++i) {
      for (std::size_t e = 0; e < E; ++e) {
        eta.set(t * E + e, eta.get(t * E + e) + taps[i - 1] * x.get((t - i) * E + e));
      }
    }
  }
  const ScanRoute route = ScanRoute::forward(M);
  const Tensor y = scan_with_injected_eta(x, p, route, eta);

  // oracle side: dense companion iteration per group, naive expansion
  const ConstrainedPoleBank bank = constrain(p.pole, p.pole_cfg);
  LtiCheckReport report;
  report.M = M;
  report.tol = tol;
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<double> poly{1.0};
    for (const auto& f : base_factors(bank, g)) {
      std::vector<double> nxt(poly.size() + std::size_t(f.degree), 0.0);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        nxt[i] += poly[i];
        nxt[i + 1] += poly[i] * f.c1;
        if (f.degree == 2) nxt[i + 2] += poly[i] * f.c2;
      }
      poly.swap(nxt);
    }
    std::vector<double> A(r * r, 0.0);
    for (std::size_t j = 0; j < r; ++j) A[j] = -poly[j + 1];
    for (std::size_t i = 1; i < r; ++i) A[i * r + (i - 1)] = 1.0;

    std::vector<double> h(r, 0.0), h_next(r, 0.0);
    for (std::size_t t = 0; t < M; ++t) {
      const double u = (t == 0) ? 1.0 : 0.0;
      double v = 0.0;
      for (std::size_t j = 0; j < r; ++j) v += taps[j] * h[j];
      for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < r; ++j) acc += A[i * r + j] * h[j];
        h_next[i] = acc;
      }
      h_next[0] += u;
      h.swap(h_next);
      const double dD = p.D[g * Eg];  // compare o_t = y_t + D x_t on one channel per group
      const double expect = v + dD * u;
      const double got = y.get(t * E + g * Eg) + dD * x.get(t * E + g * Eg);
      report.max_abs_err = std::fmax(report.max_abs_err, std::fabs(got - expect));
    }
  }
  report.ok = report.max_abs_err <= tol;
  if (!report.ok) {
    throw MismatchBeyondTolerance("lti cross-check error " + std::to_string(report.max_abs_err) +
                                  " exceeds " + std::to_string(tol));
  }
  return report;
}

}  // namespace tcpssm
