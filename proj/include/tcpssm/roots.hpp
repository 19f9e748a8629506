#pragma once

// Root oracle for monic denominators. Primary path: eigenvalues of the
// companion matrix (QR iteration via Eigen). Fallback: Durand-Kerner
// simultaneous iteration. Every returned root set is residual-checked.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "tcpssm/errors.hpp"

namespace tcpssm {

// Evaluates the monic polynomial z^r + c[1] z^{r-1} + ... + c[r] at z.
inline std::complex<double> eval_monic(const std::vector<double>& coeffs,
                                       std::complex<double> z) {
  std::complex<double> acc(coeffs[0], 0.0);
  for (std::size_t i = 1; i < coeffs.size(); ++i) acc = acc * z + coeffs[i];
  return acc;
}

namespace detail {

inline double residual_scale(const std::vector<double>& coeffs) {
  double s = 1.0;
  for (std::size_t i = 1; i < coeffs.size(); ++i) s += std::fabs(coeffs[i]);
  return s;
}

inline bool residuals_ok(const std::vector<double>& coeffs,
                         const std::vector<std::complex<double>>& roots, double tol) {
  const double scale = residual_scale(coeffs);
  for (const auto& z : roots) {
    if (std::abs(eval_monic(coeffs, z)) > tol * scale) return false;
  }
  return true;
}

inline std::vector<std::complex<double>> companion_eigenvalues(const std::vector<double>& coeffs) {
  const std::size_t r = coeffs.size() - 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(long(r), long(r));
  for (std::size_t j = 0; j < r; ++j) companion(0, long(j)) = -coeffs[j + 1];
  for (std::size_t i = 1; i < r; ++i) companion(long(i), long(i - 1)) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) return {};
  std::vector<std::complex<double>> roots(r);
  for (std::size_t i = 0; i < r; ++i) roots[i] = solver.eigenvalues()(long(i));
  return roots;
}

inline std::vector<std::complex<double>> durand_kerner(const std::vector<double>& coeffs) {
  const std::size_t r = coeffs.size() - 1;
  // radius guess from the coefficient bound max(1, sum |c_i|)
  double radius = 0.0;
  for (std::size_t i = 1; i < coeffs.size(); ++i) radius += std::fabs(coeffs[i]);
  radius = std::fmax(radius, 1.0);
  std::vector<std::complex<double>> w(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double ang = 2.0 * kPi * double(i) / double(r) + 0.35;  // offset avoids real-axis lock
    w[i] = std::polar(0.8 * radius, ang);
  }
  for (int iter = 0; iter < 600; ++iter) {
    double max_step = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      std::complex<double> denom(1.0, 0.0);
      for (std::size_t j = 0; j < r; ++j) {
        if (j != i) denom *= (w[i] - w[j]);
      }
      if (std::abs(denom) == 0.0) {
        w[i] += std::complex<double>(1e-8, 1e-8);
        continue;
      }
      const std::complex<double> step = eval_monic(coeffs, w[i]) / denom;
      w[i] -= step;
      max_step = std::fmax(max_step, std::abs(step));
    }
    if (max_step < 1e-14 * (1.0 + radius)) break;
  }
  return w;
}

}  // namespace detail

// All roots of a monic polynomial given as [1, c_1, ..., c_r].
// Residual requirement: |p(root)| <= tol * (1 + sum |c_i|).
inline std::vector<std::complex<double>> polynomial_roots(const std::vector<double>& coeffs,
                                                          double residual_tol = 1e-8) {
  if (coeffs.size() < 2) throw ConfigError("polynomial degree must be at least 1");
  if (coeffs[0] != 1.0) throw ConfigError("polynomial must be monic with explicit leading 1");
  auto roots = detail::companion_eigenvalues(coeffs);
  if (!roots.empty() && detail::residuals_ok(coeffs, roots, residual_tol)) return roots;
  roots = detail::durand_kerner(coeffs);
  if (detail::residuals_ok(coeffs, roots, residual_tol)) return roots;
  throw RootFindingDiverged("root residuals exceed tolerance for degree " +
                            std::to_string(coeffs.size() - 1));
}

inline double max_root_modulus(const std::vector<double>& coeffs, double residual_tol = 1e-8) {
  double m = 0.0;
  for (const auto& z : polynomial_roots(coeffs, residual_tol)) m = std::fmax(m, std::abs(z));
  return m;
}

}  // namespace tcpssm
