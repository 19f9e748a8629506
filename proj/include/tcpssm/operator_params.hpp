#pragma once

// Full trainable parameter set of the operator and its JSON file format.
// Layout: one top-level object {"config","pole","heads","numerator","D"}
// with matrices as nested row-major arrays.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcpssm/errors.hpp"
#include "tcpssm/modulation.hpp"
#include "tcpssm/numerator.hpp"
#include "tcpssm/pole_bank.hpp"
#include "tcpssm/rng.hpp"

namespace tcpssm {

struct OperatorParams {
  std::size_t E = 0;
  PoleBankConfig pole_cfg;
  PoleBankParams pole;
  ModulationHeads heads;
  NumeratorParams num;
  std::vector<double> D;  // [E] diagonal direct path

  std::size_t r() const { return pole_cfg.r(); }
  std::size_t group_width() const { return E / pole_cfg.G; }

  std::vector<std::string> validate() const {
    pole_cfg.validate();
    pole.check_shapes(pole_cfg);
    if (E == 0) throw ConfigError("channel count E must be positive");
    if (E % pole_cfg.G != 0) {
      throw ConfigError("E=" + std::to_string(E) + " is not divisible by G=" +
                        std::to_string(pole_cfg.G));
    }
    heads.validate(pole_cfg.G);
    if (heads.E != E) throw ShapeMismatch("modulation head E does not match operator E");
    if (num.E != E || num.r != pole_cfg.r()) {
      throw ShapeMismatch("numerator E/r do not match operator config");
    }
    if (D.size() != E) throw ShapeMismatch("direct path D must have E entries");
    if (pole_cfg.r() > kMaxDenominatorOrder) {
      throw ConfigError("denominator order exceeds supported maximum");
    }
    for (double v : D) {
      if (!std::isfinite(v)) throw ConfigError("non-finite value in D");
    }
    return num.validate();
  }
};

// Documented initialization: deterministic pole spread, zero modulation
// heads, silent numerator mixing, unit direct path. The seed only feeds the
// U/V projections.
inline OperatorParams make_default_params(std::size_t E, const PoleBankConfig& cfg,
                                          std::size_t r_f, ModulationMode mode,
                                          std::uint64_t seed) {
  OperatorParams p;
  p.E = E;
  p.pole_cfg = cfg;
  p.pole = default_pole_init(cfg);
  p.heads = ModulationHeads::zero_init(E, mode, cfg.G);
  Rng rng(seed);
  p.num = NumeratorParams::init(E, cfg.r(), r_f, rng);
  p.D.assign(E, 1.0);
  p.validate();
  return p;
}

namespace detail {

inline nlohmann::json matrix_json(const std::vector<double>& flat, std::size_t rows,
                                  std::size_t cols) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < cols; ++j) row.push_back(flat[i * cols + j]);
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<double> matrix_from_json(const nlohmann::json& j, std::size_t rows,
                                            std::size_t cols, const std::string& name) {
  if (!j.is_array() || j.size() != rows) {
    throw ConfigError("field '" + name + "' must be an array of " + std::to_string(rows) +
                      " rows");
  }
  std::vector<double> flat(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != cols) {
      throw ConfigError("field '" + name + "' row " + std::to_string(i) + " must have " +
                        std::to_string(cols) + " entries");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      flat[i * cols + k] = row[k].get<double>();
      if (!std::isfinite(flat[i * cols + k])) {
        throw ConfigError("non-finite value in field '" + name + "'");
      }
    }
  }
  return flat;
}

}  // namespace detail

inline nlohmann::json params_to_json(const OperatorParams& p) {
  const auto& c = p.pole_cfg;
  nlohmann::json j;
  j["schema"] = "tcp-params/1";
  j["config"] = {{"E", p.E}};
  j["pole"] = {
      {"G", c.G},
      {"L", c.L},
      {"K", c.K},
      {"epsilon", c.epsilon},
      {"rho_hat_c", detail::matrix_json(p.pole.rho_hat_c, c.G, c.K)},
      {"theta_hat", detail::matrix_json(p.pole.theta_hat, c.G, c.K)},
      {"rho_hat_r", detail::matrix_json(p.pole.rho_hat_r, c.G, c.L)},
      {"s_hat", detail::matrix_json(p.pole.s_hat, c.G, c.L)},
  };
  j["heads"] = {
      {"mode", modulation_mode_name(p.heads.mode)},
      {"delta_min", p.heads.delta_min},
      {"delta_0", p.heads.delta_0},
      {"lambda_theta", p.heads.lambda_theta},
      {"W_rho", detail::matrix_json(p.heads.W_rho, p.heads.C, p.heads.E)},
      {"b_rho", p.heads.b_rho},
      {"W_theta", detail::matrix_json(p.heads.W_theta, p.heads.C, p.heads.E)},
      {"b_theta", p.heads.b_theta},
  };
  j["numerator"] = {
      {"r_f", p.num.r_f},
      {"U", detail::matrix_json(p.num.U, p.num.E, p.num.r_f)},
      {"V", detail::matrix_json(p.num.V, p.num.E, p.num.r_f)},
      {"W_alpha", detail::matrix_json(p.num.W_alpha, p.num.r, p.num.E)},
      {"W_gamma", detail::matrix_json(p.num.W_gamma, p.num.r_f, p.num.E)},
  };
  j["D"] = p.D;
  return j;
}

inline OperatorParams params_from_json(const nlohmann::json& j) {
  OperatorParams p;
  try {
    p.E = j.at("config").at("E").get<std::size_t>();
    const auto& jp = j.at("pole");
    p.pole_cfg.G = jp.at("G").get<std::size_t>();
    p.pole_cfg.L = jp.at("L").get<std::size_t>();
    p.pole_cfg.K = jp.at("K").get<std::size_t>();
    p.pole_cfg.epsilon = jp.at("epsilon").get<double>();
    p.pole_cfg.validate();
    const auto& c = p.pole_cfg;
    p.pole.rho_hat_c = detail::matrix_from_json(jp.at("rho_hat_c"), c.G, c.K, "rho_hat_c");
    p.pole.theta_hat = detail::matrix_from_json(jp.at("theta_hat"), c.G, c.K, "theta_hat");
    p.pole.rho_hat_r = detail::matrix_from_json(jp.at("rho_hat_r"), c.G, c.L, "rho_hat_r");
    p.pole.s_hat = detail::matrix_from_json(jp.at("s_hat"), c.G, c.L, "s_hat");

    const auto& jh = j.at("heads");
    p.heads.mode = modulation_mode_from_name(jh.at("mode").get<std::string>());
    p.heads.E = p.E;
    p.heads.C = p.heads.mode == ModulationMode::shared ? 1 : c.G;
    p.heads.delta_min = jh.at("delta_min").get<double>();
    p.heads.delta_0 = jh.at("delta_0").get<double>();
    p.heads.lambda_theta = jh.at("lambda_theta").get<double>();
    p.heads.W_rho = detail::matrix_from_json(jh.at("W_rho"), p.heads.C, p.E, "W_rho");
    p.heads.W_theta = detail::matrix_from_json(jh.at("W_theta"), p.heads.C, p.E, "W_theta");
    p.heads.b_rho = jh.at("b_rho").get<std::vector<double>>();
    p.heads.b_theta = jh.at("b_theta").get<std::vector<double>>();

    const auto& jn = j.at("numerator");
    p.num.E = p.E;
    p.num.r = c.r();
    p.num.r_f = jn.at("r_f").get<std::size_t>();
    p.num.U = detail::matrix_from_json(jn.at("U"), p.E, p.num.r_f, "U");
    p.num.V = detail::matrix_from_json(jn.at("V"), p.E, p.num.r_f, "V");
    p.num.W_alpha = detail::matrix_from_json(jn.at("W_alpha"), p.num.r, p.E, "W_alpha");
    p.num.W_gamma = detail::matrix_from_json(jn.at("W_gamma"), p.num.r_f, p.E, "W_gamma");

    p.D = j.at("D").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed parameter file: " + std::string(e.what()));
  }
  p.validate();
  return p;
}

inline void save_params(const std::string& path, const OperatorParams& p) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoFailure("cannot open for writing: " + path);
  f << params_to_json(p).dump(2) << "\n";
  if (!f) throw IoFailure("write failed: " + path);
}

inline OperatorParams load_params(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoFailure("cannot open: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("parameter file is not valid JSON: " + std::string(e.what()));
  }
  return params_from_json(j);
}

}  // namespace tcpssm
