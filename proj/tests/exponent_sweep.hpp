#pragma once

// Deterministic sweep over (γ, p, q, k) recomputing every ExponentSet entry from
// its defining relation rather than from the library's own helpers.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "landau/exponents.hpp"

namespace sweep {

struct Result {
  int points = 0;
  double worst = 0.0;
  std::string worst_name;
};

inline Result exponent_identities(int points = 100, unsigned seed = 11) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int d = 3;
  Result res;
  auto check = [&](const std::string& name, double got, double want) {
    double err = std::abs(got - want) / std::max(1.0, std::abs(want));
    if (err > res.worst) {
      res.worst = err;
      res.worst_name = name;
    }
  };
  for (int i = 0; i < points; ++i) {
    // every fifth point is Coulomb
    const double gamma = i % 5 == 0 ? -3.0 : -3.0 + 3.0 * (0.02 + 0.96 * U(rng));
    const double p = 1.2 + 2.0 * U(rng);
    const double k = 4.0 * U(rng);
    // q inside (p, p(d+2)/d) so that s_q and κ_q have positive denominators
    const double q = p + (p * 2.0 / d) * (0.05 + 0.9 * U(rng));
    const double K0 = 0.1 + U(rng);
    landau::exponents::ExponentSet e = landau::exponents::compute(d, gamma, p, q, k, std::nullopt, K0);
    const double g = std::abs(gamma);
    if (std::isfinite(e.kappa_q)) check("kappa_q", e.kappa_q * (p * (2 * d + gamma + 2) - q * (2 * d + gamma)), g * d * (p - 1));
    check("s_q", e.s_q * (p * (d + 2) - q * d), g * d * (p - 1));
    check("alpha_q", e.alpha_q * d * (p - 1), q * d - p * d - 2);
    check("beta_q", e.beta_q * d * (p - 1), q * (2 * d + gamma) - (p + 1) * d - (gamma + 2));
    check("nu_k", e.nu_k, std::max((2 * k + g * d * (p - 1)) / (2 * p), (k + gamma) / p));
    check("nu_0", e.nu_0, d * g * (1 - 1 / p) / 2);
    check("c0", e.c0, 2 * K0 * (p - 1) / (p * p));
    check("Kp", e.Kp, (p - 1) * K0 / p);
    if (e.coulomb) {
      // at γ = −d the κ_q and s_q denominators coincide
      check("coulomb kappa=s", e.kappa_q, e.s_q);
      check("coulomb Q", std::log2(e.Q), d * (q - p + 1) * (p - 1) / (d * (q - p) - 2));
    }
    if (e.thetas_admissible) {
      check("theta sum", e.theta1 + e.theta2 + e.theta3, 1.0);
      check("theta lp", e.theta1 + e.theta2 / p + e.theta3 * (d - 2.0) / (p * d), 1.0 / q);
      check("theta weight", e.theta_s * e.theta1 + (gamma / p) * e.theta3, 0.0);
    }
    ++res.points;
  }
  return res;
}

}  // namespace sweep
