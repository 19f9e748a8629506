#pragma once

// Numeric stability certification: expand each denominator, find all of its
// roots, and check every modulus against the margin bound 1 - epsilon + tol.

#include <cstddef>
#include <vector>

#include "tcpssm/denominator.hpp"
#include "tcpssm/modulation.hpp"
#include "tcpssm/pole_bank.hpp"
#include "tcpssm/roots.hpp"

namespace tcpssm {

struct GroupStability {
  std::size_t group = 0;
  double max_modulus = 0.0;
  bool certified = false;
};

struct StabilityReport {
  double epsilon = 0.0;
  double tol = 0.0;
  double bound = 0.0;  // 1 - epsilon + tol
  bool all_certified = false;
  std::vector<GroupStability> groups;
};

inline StabilityReport certify_schur(const ConstrainedPoleBank& bank, double tol = 1e-9) {
  StabilityReport report;
  report.epsilon = bank.epsilon;
  report.tol = tol;
  report.bound = 1.0 - bank.epsilon + tol;
  report.all_certified = true;
  report.groups.resize(bank.G);
  for (std::size_t g = 0; g < bank.G; ++g) {
    std::vector<double> full{1.0};
    const std::vector<double> q = expand_base_denominator(bank, g);
    full.insert(full.end(), q.begin(), q.end());
    const double m = max_root_modulus(full);
    report.groups[g] = {g, m, m <= report.bound};
    report.all_certified = report.all_certified && report.groups[g].certified;
  }
  return report;
}

// Certifies every token's denominator; per-group max is taken over tokens.
inline StabilityReport certify_schur_modulated(const ModulatedPoles& poles, double tol = 1e-9) {
  StabilityReport report;
  report.epsilon = poles.epsilon;
  report.tol = tol;
  report.bound = 1.0 - poles.epsilon + tol;
  report.all_certified = true;
  report.groups.resize(poles.G);
  for (std::size_t g = 0; g < poles.G; ++g) report.groups[g] = {g, 0.0, true};
  const DenominatorCoeffs coeffs = expand_token_denominators(poles);
  std::vector<double> full(coeffs.r + 1);
  full[0] = 1.0;
  for (std::size_t bm = 0; bm < poles.B * poles.M; ++bm) {
    for (std::size_t g = 0; g < poles.G; ++g) {
      const double* q = coeffs.at(bm, g);
      for (std::size_t i = 0; i < coeffs.r; ++i) full[i + 1] = q[i];
      const double m = max_root_modulus(full);
      auto& slot = report.groups[g];
      if (m > slot.max_modulus) slot.max_modulus = m;
      if (m > report.bound) {
        slot.certified = false;
        report.all_certified = false;
      }
    }
  }
  return report;
}

}  // namespace tcpssm
