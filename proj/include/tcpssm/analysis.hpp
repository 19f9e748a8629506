#pragma once

// z-domain and memory diagnostics: rational transfer function evaluation,
// impulse response, dominant-pole memory-horizon maps over an HxW token
// grid, and the closed-form cost model.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcpssm/common.hpp"
#include "tcpssm/errors.hpp"
#include "tcpssm/modulation.hpp"
#include "tcpssm/roots.hpp"

namespace tcpssm {

// H(z) = d + P(z^-1)/Q(z^-1) with strictly causal P(z^-1) = sum_i b_i z^-i
// and monic Q(z^-1) = 1 + sum_i q_i z^-i.
struct TransferFunction {
  std::vector<double> taps;  // b_1..b_r
  std::vector<double> q;     // q_1..q_r
  double d = 0.0;

  std::size_t order() const { return q.size(); }

  std::vector<std::complex<double>> poles() const {
    if (q.empty()) return {};
    std::vector<double> monic{1.0};
    monic.insert(monic.end(), q.begin(), q.end());
    return polynomial_roots(monic);
  }

  bool is_schur(double margin = 0.0) const {
    for (const auto& z : poles()) {
      if (std::abs(z) >= 1.0 - margin) return false;
    }
    return true;
  }
};

// 1/Q split as d + strictly-causal/Q: 1/Q = 1 + (1 - Q)/Q, so taps = -q.
inline TransferFunction unit_numerator_tf(const std::vector<double>& q) {
  TransferFunction tf;
  tf.q = q;
  tf.taps.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) tf.taps[i] = -q[i];
  tf.d = 1.0;
  return tf;
}

inline std::complex<double> eval_H(const TransferFunction& tf, std::complex<double> z) {
  for (const auto& pole : tf.poles()) {
    if (std::abs(z - pole) <= 1e-12) {
      throw PoleEvaluation("evaluation point coincides with a pole");
    }
  }
  const std::complex<double> zi = 1.0 / z;
  std::complex<double> zp = 1.0;
  std::complex<double> num = 0.0, den = 1.0;
  for (std::size_t i = 0; i < tf.q.size(); ++i) {
    zp *= zi;
    num += tf.taps[i] * zp;
    den += tf.q[i] * zp;
  }
  return tf.d + num / den;
}

inline std::vector<double> impulse_response(const TransferFunction& tf, std::size_t length) {
  if (length < 1) throw ConfigError("impulse response length must be at least 1");
  const std::size_t r = tf.order();
  std::vector<double> h(length, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    double v = (t == 0) ? tf.d : 0.0;  // u is a unit impulse
    if (t >= 1 && t <= r) v += tf.taps[t - 1];
    for (std::size_t i = 1; i <= r && i <= t; ++i) v -= tf.q[i - 1] * h[t - i];
    h[t] = v;
  }
  return h;
}

// Single DFT bin of a real sequence, direct summation.
inline std::complex<double> dft_bin(const std::vector<double>& h, std::size_t m) {
  const double w = -2.0 * kPi * double(m) / double(h.size());
  std::complex<double> acc = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    acc += h[k] * std::complex<double>(std::cos(w * double(k)), std::sin(w * double(k)));
  }
  return acc;
}

inline std::size_t dominant_dft_bin(const std::vector<double>& h) {
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t m = 0; m <= h.size() / 2; ++m) {
    const double mag = std::abs(dft_bin(h, m));
    if (mag > best_mag) {
      best_mag = mag;
      best = m;
    }
  }
  return best;
}

// Least-squares slope of log|h_k| through the local peaks of |h|; for a
// decaying oscillation this recovers log(rho).
inline double fit_log_envelope_slope(const std::vector<double>& h) {
  std::vector<std::size_t> peaks;
  for (std::size_t k = 1; k + 1 < h.size(); ++k) {
    const double a = std::fabs(h[k]);
    if (a > 1e-300 && a >= std::fabs(h[k - 1]) && a >= std::fabs(h[k + 1])) peaks.push_back(k);
  }
  if (peaks.size() < 2) throw NumericError("not enough peaks to fit an envelope");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k : peaks) {
    const double x = double(k), y = std::log(std::fabs(h[k]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(peaks.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Per-token memory diagnostics over an HxW grid. tau = -1/ln(rho_max) with
// rho_max capped below 1; osc = rho_max * theta*/pi where theta* is the
// angle of the complex pole attaining the maximum (0 when a real pole
// dominates; real wins exact ties).
struct MemoryMap {
  std::size_t H = 0, W = 0;
  long group = -1;  // -1 = max over all groups
  std::vector<double> tau, osc, rho_max;
  std::size_t t1 = 0;  // argmax tau (longest memory)
  std::size_t t2 = 0;  // argmin tau (fastest decay)
  std::size_t t3 = 0;  // argmax osc (strongest radius-weighted oscillation)
};

inline constexpr double kTauFloor = 1e-6;

inline MemoryMap memory_horizon(const ModulatedPoles& poles, std::size_t H, std::size_t W,
                                long group = -1, std::size_t batch = 0) {
  if (H * W != poles.M) throw ShapeMismatch("grid H*W does not match token count M");
  if (batch >= poles.B) throw IndexOutOfRange("batch index out of range");
  if (group >= long(poles.G)) throw IndexOutOfRange("group index out of range");
  MemoryMap map;
  map.H = H;
  map.W = W;
  map.group = group;
  map.tau.resize(H * W);
  map.osc.resize(H * W);
  map.rho_max.resize(H * W);
  const std::size_t g_lo = group < 0 ? 0 : std::size_t(group);
  const std::size_t g_hi = group < 0 ? poles.G : std::size_t(group) + 1;
  for (std::size_t t = 0; t < poles.M; ++t) {
    const std::size_t bm = batch * poles.M + t;
    double best_real = 0.0, best_complex = 0.0, best_theta = 0.0;
    for (std::size_t g = g_lo; g < g_hi; ++g) {
      for (std::size_t l = 0; l < poles.L; ++l) {
        best_real = std::fmax(best_real, std::fabs(poles.a_t[(bm * poles.G + g) * poles.L + l]));
      }
      for (std::size_t k = 0; k < poles.K; ++k) {
        const double rho = poles.rho_t[(bm * poles.G + g) * poles.K + k];
        if (rho > best_complex) {
          best_complex = rho;
          best_theta = poles.theta_t[(bm * poles.G + g) * poles.K + k];
        }
      }
    }
    const double rho_max = std::fmax(best_real, best_complex);
    const double theta_star = best_complex > best_real ? best_theta : 0.0;
    const double capped = std::fmin(rho_max, 1.0 - 1e-9);
    double tau = kTauFloor;
    if (capped > 0.0) tau = std::fmax(-1.0 / std::log(capped), kTauFloor);
    map.rho_max[t] = rho_max;
    map.tau[t] = tau;
    map.osc[t] = rho_max * theta_star / kPi;
  }
  auto argmax = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[best]) best = i;
    }
    return best;
  };
  auto argmin = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] < v[best]) best = i;
    }
    return best;
  };
  map.t1 = argmax(map.tau);
  map.t2 = argmin(map.tau);
  map.t3 = argmax(map.osc);
  return map;
}

inline void write_memory_map_csv(const std::string& path, const MemoryMap& map) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoFailure("cannot open for writing: " + path);
  f << "token_index,row,col,tau,osc,rho_max\n";
  char line[160];
  for (std::size_t t = 0; t < map.tau.size(); ++t) {
    std::snprintf(line, sizeof line, "%zu,%zu,%zu,%.12g,%.12g,%.12g\n", t, t / map.W, t % map.W,
                  map.tau[t], map.osc[t], map.rho_max[t]);
    f << line;
  }
  if (!f) throw IoFailure("write failed: " + path);
}

// 8-bit binary PGM with linear min/max scaling; scaling is recorded in a
// JSON sidecar next to the image.
inline void write_heatmap_pgm(const std::string& path, const std::vector<double>& values,
                              std::size_t H, std::size_t W, const std::string& name) {
  if (values.size() != H * W) throw ShapeMismatch("heat map size does not match grid");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::fmin(lo, v);
    hi = std::fmax(hi, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open for writing: " + path);
  f << "P5\n" << W << " " << H << "\n255\n";
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  for (double v : values) {
    const int px = int(std::lround((v - lo) * scale));
    f.put(char(std::clamp(px, 0, 255)));
  }
  if (!f) throw IoFailure("write failed: " + path);
  nlohmann::json sidecar;
  sidecar["schema"] = "tcp-report/1";
  sidecar["map"] = name;
  sidecar["min"] = lo;
  sidecar["max"] = hi;
  sidecar["width"] = W;
  sidecar["height"] = H;
  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) throw IoFailure("cannot open for writing: " + path + ".json");
  js << sidecar.dump(2) << "\n";
}

// Dominant per-token-channel costs: 2r + 3r_f for this operator versus 7N
// for a conventional selective scan (step-size projection excluded).
struct FlopModel {
  std::size_t r = 0, r_f = 0, N = 0;
  std::size_t E = 0, M = 0, routes = 1;

  std::size_t tcp_per_token_channel() const { return 2 * r + 3 * r_f; }
  std::size_t baseline_per_token_channel() const { return 7 * N; }
  std::size_t tcp_total() const { return tcp_per_token_channel() * M * E * routes; }
  std::size_t baseline_total() const { return baseline_per_token_channel() * M * E * routes; }
};

inline double reduction_percent(double new_cost, double old_cost) {
  return 100.0 * (1.0 - new_cost / old_cost);
}

inline nlohmann::json flop_report_json(const FlopModel& m) {
  nlohmann::json j;
  j["schema"] = "tcp-report/1";
  j["r"] = m.r;
  j["r_f"] = m.r_f;
  j["N"] = m.N;
  j["E"] = m.E;
  j["M"] = m.M;
  j["routes"] = m.routes;
  j["tcp_per_token_channel"] = m.tcp_per_token_channel();
  j["baseline_per_token_channel"] = m.baseline_per_token_channel();
  j["tcp_total_mac1"] = m.tcp_total();
  j["baseline_total_mac1"] = m.baseline_total();
  j["tcp_total_mac2"] = 2 * m.tcp_total();
  j["baseline_total_mac2"] = 2 * m.baseline_total();
  j["reduction_percent"] = reduction_percent(double(m.tcp_total()), double(m.baseline_total()));
  return j;
}

inline std::string flop_report_text(const FlopModel& m) {
  char buf[640];
  std::snprintf(buf, sizeof buf,
                "per-token-channel: tcp %zu (2r+3r_f, r=%zu r_f=%zu), baseline %zu (7N, N=%zu)\n"
                "totals over M=%zu E=%zu routes=%zu:\n"
                "  mac=1: tcp %zu, baseline %zu\n"
                "  mac=2: tcp %zu, baseline %zu\n"
                "reduction: %.1f%%\n",
                m.tcp_per_token_channel(), m.r, m.r_f, m.baseline_per_token_channel(), m.N, m.M,
                m.E, m.routes, m.tcp_total(), m.baseline_total(), 2 * m.tcp_total(),
                2 * m.baseline_total(),
                reduction_percent(double(m.tcp_total()), double(m.baseline_total())));
  return buf;
}

}  // namespace tcpssm
