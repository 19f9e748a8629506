#pragma once

// The verification suite behind `tcp verify`: ten numbered property checks
// covering stability fuzzing, identity recovery, oracle equivalence, the
// low-rank factorization identity, the LTI cross-check, gradients, the cost
// model, impulse-response physics, memory-map monotonicity and determinism.
// Check output is deterministic for a fixed seed and thread count
// independent, so reports can be compared byte for byte.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tcpssm/analysis.hpp"
#include "tcpssm/distill.hpp"
#include "tcpssm/grad.hpp"
#include "tcpssm/operator_params.hpp"
#include "tcpssm/rng.hpp"
#include "tcpssm/scan.hpp"
#include "tcpssm/stability.hpp"
#include "tcpssm/tensor_io.hpp"

namespace tcpssm {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 2024;
  DType precision = DType::f64;  // f32 relaxes the oracle tolerance to 1e-4
  int threads = 1;
};

// Random-config sampler shared by the fuzz checks. Pole logits are unit
// normal; head and numerator weights use the init scale 1/sqrt(E) so the
// modulation operates in its design range.
inline OperatorParams sample_operator_params(std::size_t E, const PoleBankConfig& cfg,
                                             std::size_t r_f, ModulationMode mode, Rng& rng) {
  OperatorParams p;
  p.E = E;
  p.pole_cfg = cfg;
  p.pole.rho_hat_c = randn_vector(rng, cfg.G * cfg.K);
  p.pole.theta_hat = randn_vector(rng, cfg.G * cfg.K);
  p.pole.rho_hat_r = randn_vector(rng, cfg.G * cfg.L);
  p.pole.s_hat = randn_vector(rng, cfg.G * cfg.L);
  p.heads = ModulationHeads::zero_init(E, mode, cfg.G);
  const double w_std = 1.0 / std::sqrt(double(E));
  p.heads.W_rho = randn_vector(rng, p.heads.C * E, w_std);
  p.heads.b_rho = randn_vector(rng, p.heads.C, 0.5);
  p.heads.W_theta = randn_vector(rng, p.heads.C * E, w_std);
  p.heads.b_theta = randn_vector(rng, p.heads.C, 0.5);
  p.num.E = E;
  p.num.r = cfg.r();
  p.num.r_f = r_f;
  p.num.U = randn_vector(rng, E * r_f, w_std);
  p.num.V = randn_vector(rng, E * r_f, w_std);
  p.num.W_alpha = randn_vector(rng, cfg.r() * E, w_std);
  p.num.W_gamma = randn_vector(rng, r_f * E, w_std);
  p.D = randn_vector(rng, E);
  return p;
}

namespace checks {

inline PoleBankConfig random_small_config(Rng& rng, double epsilon = 0.01) {
  static const std::size_t g_opts[] = {1, 2, 4};
  PoleBankConfig cfg;
  cfg.G = g_opts[rng.next_u64() % 3];
  cfg.L = rng.next_u64() % 3;
  cfg.K = rng.next_u64() % 3;
  if (cfg.r() == 0) cfg.L = 1;
  cfg.epsilon = epsilon;
  return cfg;
}

// 1. Every base and token-modulated denominator from 10,000 random draws
// stays Schur stable with margin epsilon (clamp on), by the root oracle.
inline CheckResult stability_fuzz(std::uint64_t seed, int draws = 10000) {
  Rng master(seed);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < draws; ++trial) {
    Rng rng = master.fork(std::uint64_t(trial));
    const PoleBankConfig cfg = random_small_config(rng);
    const std::size_t E = 4;
    OperatorParams p = sample_operator_params(E, cfg, 2, ModulationMode::shared, rng);
    const ConstrainedPoleBank bank = constrain(p.pole, cfg);
    const StabilityReport base = certify_schur(bank);
    const Tensor x = randn(rng, {1, 2, E});
    const TokenScales scales = compute_scales(x, p.heads, cfg.G);
    const StabilityReport mod = certify_schur_modulated(modulate(bank, scales, true));
    for (const auto& g : base.groups) worst = std::fmax(worst, g.max_modulus - (1.0 - cfg.epsilon));
    for (const auto& g : mod.groups) worst = std::fmax(worst, g.max_modulus - (1.0 - cfg.epsilon));
    if (!base.all_certified || !mod.all_certified) ++failures;
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d/%d draws certified, worst modulus excess over 1-eps: %.3e (tol 1e-9)",
                draws - failures, draws, worst);
  return {1, "stability fuzz (base + modulated, clamp on)", failures == 0, detail};
}

// 2. Zero-initialized heads with delta_0 = delta_min + ln 2 reproduce the
// base denominator coefficients to 1e-12 (relative to coefficient scale).
inline CheckResult identity_recovery(std::uint64_t seed, int configs = 100) {
  Rng master(seed);
  double worst = 0.0;
  for (int trial = 0; trial < configs; ++trial) {
    Rng rng = master.fork(0x1000 + std::uint64_t(trial));
    const PoleBankConfig cfg = random_small_config(rng);
    const std::size_t E = 4 * cfg.G;
    PoleBankParams params;
    params.rho_hat_c = randn_vector(rng, cfg.G * cfg.K);
    params.theta_hat = randn_vector(rng, cfg.G * cfg.K);
    params.rho_hat_r = randn_vector(rng, cfg.G * cfg.L);
    params.s_hat = randn_vector(rng, cfg.G * cfg.L);
    const ConstrainedPoleBank bank = constrain(params, cfg);
    const ModulationHeads heads = ModulationHeads::zero_init(E, ModulationMode::shared, cfg.G);
    const Tensor x = randn(rng, {1, 4, E});
    const DenominatorCoeffs coeffs =
        expand_token_denominators(modulate(bank, compute_scales(x, heads, cfg.G)));
    for (std::size_t g = 0; g < cfg.G; ++g) {
      const std::vector<double> base_q = expand_base_denominator(bank, g);
      double scale = 1.0;
      for (double v : base_q) scale = std::fmax(scale, std::fabs(v));
      for (std::size_t bm = 0; bm < 4; ++bm) {
        const double* q = coeffs.at(bm, g);
        for (std::size_t i = 0; i < coeffs.r; ++i) {
          worst = std::fmax(worst, std::fabs(q[i] - base_q[i]) / scale);
        }
      }
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof detail, "%d configs, worst relative coefficient error %.3e",
                configs, worst);
  return {2, "identity recovery at zero-initialized heads", worst <= 1e-12, detail};
}

// 3. Optimized kernel against the naive f64 reference over random configs.
inline CheckResult oracle_equivalence(std::uint64_t seed, DType precision, int threads,
                                      int configs = 100) {
  Rng master(seed);
  double worst_f64 = 0.0, worst_f32 = 0.0;
  for (int trial = 0; trial < configs; ++trial) {
    Rng rng = master.fork(0x2000 + std::uint64_t(trial));
    static const std::size_t g_opts[] = {1, 4, 8};
    PoleBankConfig cfg;
    cfg.G = g_opts[rng.next_u64() % 3];
    cfg.L = rng.next_u64() % 3;
    cfg.K = rng.next_u64() % 3;
    if (cfg.r() == 0) cfg.L = 1;
    cfg.epsilon = 0.01;
    const std::size_t Eg = 1 + rng.next_u64() % (64 / cfg.G);
    const std::size_t E = cfg.G * Eg;
    const std::size_t r_f = 1 + rng.next_u64() % std::min<std::size_t>(8, E);
    const ModulationMode mode =
        (rng.next_u64() & 1) ? ModulationMode::shared : ModulationMode::group_specific;
    const OperatorParams p = sample_operator_params(E, cfg, r_f, mode, rng);
    const std::size_t M = 16 + rng.next_u64() % 1009;  // up to 1024
    const Tensor x = randn(rng, {1, M, E});
    const ScanRoute route = (rng.next_u64() & 1) ? ScanRoute::forward(M) : ScanRoute::backward(M);
    const Tensor ref = reference_forward(x, p, route);
    ScanOptions opts;
    opts.threads = threads;
    if (precision == DType::f64) {
      const Tensor fast = forward_route_t<double>(x, p, route, opts);
      for (std::size_t i = 0; i < ref.numel(); ++i) {
        worst_f64 = std::fmax(worst_f64, std::fabs(fast.get(i) - ref.get(i)));
      }
    }
    const Tensor fast32 = forward_route_t<float>(x, p, route, opts);
    for (std::size_t i = 0; i < ref.numel(); ++i) {
      worst_f32 = std::fmax(worst_f32, std::fabs(fast32.get(i) - ref.get(i)));
    }
  }
  const bool ok =
      (precision != DType::f64 || worst_f64 <= 1e-10) && worst_f32 <= 1e-4;
  char detail[192];
  if (precision == DType::f64) {
    std::snprintf(detail, sizeof detail,
                  "%d configs, max |err|: f64 kernel %.3e (tol 1e-10), f32 kernel %.3e (tol 1e-4)",
                  configs, worst_f64, worst_f32);
  } else {
    std::snprintf(detail, sizeof detail,
                  "%d configs, max |err|: f32 kernel %.3e (tol relaxed to 1e-4)", configs,
                  worst_f32);
  }
  return {3, "forward kernel vs float64 reference", ok, detail};
}

// 4. driving_signal equals the dense sum_i B_i x_{t-i} with
// B_i = alpha_i U Diag(gamma) V^T, to 1e-12 relative.
inline CheckResult lowrank_identity(std::uint64_t seed, int cases = 1000) {
  Rng master(seed);
  double worst = 0.0;
  for (int trial = 0; trial < cases; ++trial) {
    Rng rng = master.fork(0x3000 + std::uint64_t(trial));
    const std::size_t E = 1 + rng.next_u64() % 12;
    const std::size_t r = 1 + rng.next_u64() % 5;
    const std::size_t r_f = 1 + rng.next_u64() % E;
    NumeratorParams p;
    p.E = E;
    p.r = r;
    p.r_f = r_f;
    p.U = randn_vector(rng, E * r_f);
    p.V = randn_vector(rng, E * r_f);
    p.W_alpha = randn_vector(rng, r * E);
    p.W_gamma = randn_vector(rng, r_f * E);
    std::vector<std::vector<double>> history(r);
    for (auto& h : history) h = randn_vector(rng, E);
    const std::vector<double> xt = randn_vector(rng, E);
    std::vector<double> alpha(r), gamma(r_f);
    mixing_and_gates(xt.data(), p, alpha.data(), gamma.data());

    CausalWindow<double> window(r_f, r);
    std::vector<double> phi(r_f);
    for (std::size_t i = r; i-- > 0;) {  // oldest first
      for (std::size_t j = 0; j < r_f; ++j) {
        double acc = 0.0;
        for (std::size_t e = 0; e < E; ++e) acc += p.V[e * r_f + j] * history[i][e];
        phi[j] = acc;
      }
      window.push(phi.data());
    }
    std::vector<double> eta(E);
    driving_signal(window, alpha.data(), gamma.data(), p.U.data(), E, eta.data());

    const auto B = dense_equivalent_B(alpha, gamma, p);
    for (std::size_t e = 0; e < E; ++e) {
      double expect = 0.0;
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t c = 0; c < E; ++c) expect += B[i][e * E + c] * history[i][c];
      }
      worst = std::fmax(worst, std::fabs(eta[e] - expect) / (1.0 + std::fabs(expect)));
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof detail, "%d cases, worst relative error %.3e", cases, worst);
  return {4, "low-rank factorization identity", worst <= 1e-12, detail};
}

// 5. Identity-modulation operator with constant taps against the
// companion-form state-space simulation.
inline CheckResult lti_agreement(std::uint64_t seed, int systems = 50) {
  Rng master(seed);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < systems; ++trial) {
    Rng rng = master.fork(0x4000 + std::uint64_t(trial));
    const PoleBankConfig cfg = random_small_config(rng);
    const std::size_t E = 2 * cfg.G;
    OperatorParams p = sample_operator_params(E, cfg, 2, ModulationMode::shared, rng);
    p.heads = ModulationHeads::zero_init(E, ModulationMode::shared, cfg.G);
    const std::vector<double> taps = randn_vector(rng, cfg.r());
    try {
      const LtiCheckReport rep = lti_crosscheck(p, taps, 256, 1e-10);
      worst = std::fmax(worst, rep.max_abs_err);
    } catch (const MismatchBeyondTolerance&) {
      ++failures;
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof detail, "%d systems, worst |err| %.3e (tol 1e-10)", systems, worst);
  return {5, "LTI companion-form cross-check", failures == 0, detail};
}

// 6. Analytic backward vs central finite differences; teacher gradient of
// the distillation loss is exactly zero.
inline CheckResult gradient_check(std::uint64_t seed, int configs = 20) {
  Rng master(seed);
  double worst = 0.0;
  std::string worst_field;
  for (int trial = 0; trial < configs; ++trial) {
    Rng rng = master.fork(0x5000 + std::uint64_t(trial));
    PoleBankConfig cfg;
    cfg.G = 1 + rng.next_u64() % 2;
    cfg.L = rng.next_u64() % 3;
    cfg.K = rng.next_u64() % 2;
    if (cfg.r() == 0) cfg.L = 1;
    cfg.epsilon = 0.01;
    const std::size_t E = cfg.G * (1 + rng.next_u64() % (8 / cfg.G));
    const std::size_t r_f = 1 + rng.next_u64() % std::min<std::size_t>(4, E);
    const ModulationMode mode =
        (rng.next_u64() & 1) ? ModulationMode::shared : ModulationMode::group_specific;
    const OperatorParams p = sample_operator_params(E, cfg, r_f, mode, rng);
    const std::size_t M = 4 + rng.next_u64() % 13;  // up to 16
    const Tensor x = randn(rng, {1, M, E});
    const ScanRoute route = ScanRoute::forward(M);
    const GradCheckReport rep = grad_check(x, p, route);
    if (rep.max_rel_err > worst) {
      worst = rep.max_rel_err;
      worst_field = rep.worst_field;
    }
  }

  // stop-gradient contract on the distillation loss
  Rng rng = master.fork(0x5fff);
  std::vector<Tensor> student{randn(rng, {2, 3, 4})};
  std::vector<Tensor> teacher{randn(rng, {2, 3, 4})};
  bool teacher_zero = true;
  for (const auto& g : distill_loss_grad_teacher(student, teacher)) {
    for (std::size_t i = 0; i < g.numel(); ++i) teacher_zero = teacher_zero && g.get(i) == 0.0;
  }

  char detail[192];
  std::snprintf(detail, sizeof detail,
                "%d configs, worst relative error %.3e (%s); teacher grad zero: %s", configs,
                worst, worst_field.c_str(), teacher_zero ? "yes" : "no");
  return {6, "gradient check vs finite differences", worst <= 1e-4 && teacher_zero, detail};
}

// 7. Cost model identities and the published reduction arithmetic.
inline CheckResult flop_model() {
  FlopModel m;
  m.r = 4;
  m.r_f = 8;
  m.N = 16;
  m.E = 3;
  m.M = 7;
  m.routes = 2;
  const bool per_token = m.tcp_per_token_channel() == 32 && m.baseline_per_token_channel() == 112;
  const bool totals = m.tcp_total() == 32 * 7 * 3 * 2 && m.baseline_total() == 112 * 7 * 3 * 2;
  // doubling M or E doubles totals exactly
  FlopModel m2 = m;
  m2.M *= 2;
  FlopModel m3 = m;
  m3.E *= 2;
  const bool linear = m2.tcp_total() == 2 * m.tcp_total() && m3.tcp_total() == 2 * m.tcp_total();
  const double red1 = reduction_percent(295.3, 497.5);
  const double red2 = reduction_percent(129.9, 233.0);
  const bool table = std::fabs(red1 - 40.6) <= 0.1 && std::fabs(red2 - 44.2) <= 0.1;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "2r+3r_f=32, 7N=112; 295.3/497.5 -> %.2f%%, 129.9/233.0 -> %.2f%%", red1, red2);
  return {7, "FLOP model identities and reduction arithmetic", per_token && totals && linear && table,
          detail};
}

// 8. Single complex pair (rho=0.9, theta=pi/3): fitted log-envelope slope
// equals ln 0.9 within 2%, dominant DFT bin within one bin of theta/(2 pi).
inline CheckResult impulse_physics() {
  const double rho = 0.9, theta = kPi / 3.0;
  const FactorCoeffs f = FactorCoeffs::complex_pair(rho, theta);
  const TransferFunction tf = unit_numerator_tf({f.c1, f.c2});
  const std::vector<double> h = impulse_response(tf, 1024);
  const double slope = fit_log_envelope_slope(h);
  const double slope_err = std::fabs(slope - std::log(rho)) / std::fabs(std::log(rho));
  const std::size_t bin = dominant_dft_bin(h);
  const double expect_bin = double(h.size()) * theta / (2.0 * kPi);
  const double bin_err = std::fabs(double(bin) - expect_bin);
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "slope %.6f vs ln(0.9)=%.6f (err %.2f%%), bin %zu vs %.2f (off %.2f)", slope,
                std::log(rho), 100.0 * slope_err, bin, expect_bin, bin_err);
  return {8, "impulse-response decay and oscillation", slope_err <= 0.02 && bin_err <= 1.0, detail};
}

// 9. Two-region input: the region with the larger radius scale has strictly
// smaller tau at every token; T1/T2 markers land in the predicted regions.
inline CheckResult memmap_monotonicity(std::uint64_t seed, int trials = 100) {
  Rng master(seed);
  int good = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = master.fork(0x6000 + std::uint64_t(trial));
    const std::size_t H = 8, W = 8, E = 4, G = 2;
    PoleBankConfig cfg{G, 1, 1, 0.01};
    PoleBankParams params;
    auto capped = [&](std::size_t n) {
      std::vector<double> v = randn_vector(rng, n);
      for (auto& x : v) x = std::fmin(x, 2.0);  // radii stay clear of the clamp
      return v;
    };
    params.rho_hat_c = capped(G);
    params.theta_hat = randn_vector(rng, G);
    params.rho_hat_r = capped(G);
    params.s_hat = randn_vector(rng, G);
    const ConstrainedPoleBank bank = constrain(params, cfg);

    ModulationHeads heads = ModulationHeads::zero_init(E, ModulationMode::shared, G);
    heads.W_rho[0] = 0.5 + rng.uniform();  // radius scale reads channel 0 only

    // region A: left half, channel0 = -1; region B: right half, channel0 = +1
    Tensor x = Tensor::zeros(DType::f64, {1, H * W, E});
    for (std::size_t t = 0; t < H * W; ++t) {
      const bool region_b = (t % W) >= W / 2;
      x.set(t * E + 0, region_b ? 1.0 : -1.0);
      for (std::size_t e = 1; e < E; ++e) x.set(t * E + e, 0.1 * rng.normal());
    }
    const ModulatedPoles poles = modulate(bank, compute_scales(x, heads, G));
    const MemoryMap map = memory_horizon(poles, H, W);

    double min_tau_a = 1e300, max_tau_b = -1e300;
    for (std::size_t t = 0; t < H * W; ++t) {
      const bool region_b = (t % W) >= W / 2;
      if (region_b) {
        max_tau_b = std::fmax(max_tau_b, map.tau[t]);
      } else {
        min_tau_a = std::fmin(min_tau_a, map.tau[t]);
      }
    }
    const bool order = max_tau_b < min_tau_a;  // larger s_rho (B) decays faster
    const bool t1_in_a = (map.t1 % W) < W / 2;
    const bool t2_in_b = (map.t2 % W) >= W / 2;
    if (order && t1_in_a && t2_in_b) ++good;
  }
  char detail[96];
  std::snprintf(detail, sizeof detail, "%d/%d trials ordered with correct T1/T2", good, trials);
  return {9, "memory-map monotonicity and markers", good == trials, detail};
}

// 10. Scan outputs and serialized bytes are identical across repeated runs
// and across thread counts.
inline CheckResult determinism(std::uint64_t seed, DType precision) {
  const PoleBankConfig cfg{4, 1, 1, 0.01};
  const std::size_t E = 16, M = 64;
  const OperatorParams p = make_default_params(E, cfg, 4, ModulationMode::shared, seed);
  Rng rng(seed + 1);
  const Tensor x = randn(rng, {2, M, E});
  const auto routes = routes_from_spec("fwd,bwd", M);

  auto fingerprint = [&](int threads) {
    ScanOptions opts;
    opts.threads = threads;
    const Tensor o = forward_multi_route(x, p, routes, precision, opts);
    return fnv1a64(o.raw_data(), o.raw_size());
  };
  const std::uint64_t h1 = fingerprint(1);
  const std::uint64_t h1b = fingerprint(1);
  const std::uint64_t h4 = fingerprint(4);
  const std::uint64_t h7 = fingerprint(7);
  const bool ok = h1 == h1b && h1 == h4 && h1 == h7;
  char detail[128];
  std::snprintf(detail, sizeof detail, "fingerprint %016llx stable across reruns and 1/4/7 threads",
                static_cast<unsigned long long>(h1));
  return {10, "determinism across runs and thread counts", ok, detail};
}

}  // namespace checks

inline std::vector<CheckResult> run_verification_suite(const VerifyOptions& opts = {}) {
  std::vector<CheckResult> results;
  results.push_back(checks::stability_fuzz(opts.seed));
  results.push_back(checks::identity_recovery(opts.seed));
  results.push_back(checks::oracle_equivalence(opts.seed, opts.precision, opts.threads));
  results.push_back(checks::lowrank_identity(opts.seed));
  results.push_back(checks::lti_agreement(opts.seed));
  results.push_back(checks::gradient_check(opts.seed));
  results.push_back(checks::flop_model());
  results.push_back(checks::impulse_physics());
  results.push_back(checks::memmap_monotonicity(opts.seed));
  results.push_back(checks::determinism(opts.seed, opts.precision));
  return results;
}

}  // namespace tcpssm
